//! Best split across all rows of a node's projection matrix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::entropy::GAIN_EPSILON;
use super::exact::{best_split_exact_with, ExactScratch};
use super::histogram::{
    best_split_histogram_with, build_histogram_into, sample_boundaries_into, Binning, Histogram,
    HistogramScratch, DEFAULT_BIN_COUNT,
};
use super::{Backend, SplitCandidate};
use crate::data::{ColumnarDataset, SampleIndexSet};
use crate::profile::{NoRecorder, Phase, Recorder};
use crate::projection::{apply_projection_into, ProjectionEntry, ProjectionMatrix};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMethod {
    Exact,
    Histogram,
}

/// Histograms for nodes with more than `breakeven` active samples, sorting otherwise.
#[inline]
pub fn choose_method(n_active: usize, breakeven: usize) -> SplitMethod {
    if n_active > breakeven {
        SplitMethod::Histogram
    } else {
        SplitMethod::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSettings {
    pub bin_count: usize,
    pub binning: Binning,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            bin_count: DEFAULT_BIN_COUNT,
            binning: Binning::TwoLevel,
        }
    }
}

/// Per-worker buffers reused across nodes.
#[derive(Debug, Default)]
pub struct SplitScratch<T> {
    values: Vec<T>,
    best_values: Vec<T>,
    labels: Vec<u32>,
    exact: ExactScratch<T>,
    hist: Histogram<T>,
    hist_scratch: HistogramScratch<T>,
    left: Vec<u32>,
}

impl<T: Real> SplitScratch<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scratch pinned to a specific two-level backend.
    pub fn with_backend(backend: Backend) -> Self {
        SplitScratch {
            hist_scratch: HistogramScratch::with_backend(backend),
            ..Default::default()
        }
    }

    /// Projected values of the winning projection from the last search,
    /// aligned with the active set.
    pub fn best_values(&self) -> &[T] {
        &self.best_values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSplit<T> {
    pub candidate: SplitCandidate<T>,
    pub projection: Vec<ProjectionEntry>,
}

/// Evaluate every nonempty projection row with `method` and return the best
/// split. Ties go to the lowest projection index.
pub fn find_node_split<T: Real, R: Rng + ?Sized>(
    dataset: &ColumnarDataset<T>,
    active: &SampleIndexSet,
    projections: &ProjectionMatrix,
    method: SplitMethod,
    settings: &SplitSettings,
    rng: &mut R,
) -> Option<NodeSplit<T>> {
    let mut scratch = SplitScratch::new();
    find_node_split_with(
        dataset,
        active.as_slice(),
        projections,
        method,
        settings,
        rng,
        &mut scratch,
        &mut NoRecorder,
        0,
    )
    .map(|candidate| NodeSplit {
        projection: projections.row(candidate.projection_index).to_vec(),
        candidate,
    })
}

/// Like [`find_node_split`], reusing `scratch`; the winner's projected values
/// are left in [`SplitScratch::best_values`].
#[allow(clippy::too_many_arguments)]
pub fn find_node_split_with<T: Real, R: Rng + ?Sized, Rec: Recorder>(
    dataset: &ColumnarDataset<T>,
    active: &[u32],
    projections: &ProjectionMatrix,
    method: SplitMethod,
    settings: &SplitSettings,
    rng: &mut R,
    scratch: &mut SplitScratch<T>,
    rec: &mut Rec,
    depth: usize,
) -> Option<SplitCandidate<T>> {
    let class_count = dataset.class_count();
    let all_labels = dataset.labels();
    scratch.labels.clear();
    scratch
        .labels
        .extend(active.iter().map(|&i| all_labels[i as usize]));

    let mut best: Option<SplitCandidate<T>> = None;
    for (p, row) in projections.rows().enumerate() {
        if row.is_empty() {
            continue;
        }
        let t = Rec::phase_start();
        apply_projection_into(dataset, row, active, &mut scratch.values);
        rec.phase_end(Phase::ApplyProjection, depth, t);

        let candidate = match method {
            SplitMethod::Exact => {
                let t = Rec::phase_start();
                let c = best_split_exact_with(
                    &scratch.values,
                    &scratch.labels,
                    class_count,
                    p,
                    &mut scratch.exact,
                );
                rec.phase_end(Phase::EvaluateSplits, depth, t);
                c
            }
            SplitMethod::Histogram => {
                let t = Rec::phase_start();
                let mut boundaries = std::mem::take(&mut scratch.hist_scratch.boundaries);
                let mut sample = std::mem::take(&mut scratch.hist_scratch.sample);
                sample_boundaries_into(
                    &scratch.values,
                    settings.bin_count,
                    rng,
                    &mut sample,
                    &mut boundaries,
                );
                let built = !boundaries.is_empty();
                if built {
                    build_histogram_into(
                        &mut scratch.hist,
                        &mut scratch.hist_scratch,
                        &scratch.values,
                        &scratch.labels,
                        &boundaries,
                        class_count,
                        settings.binning,
                    );
                }
                scratch.hist_scratch.boundaries = boundaries;
                scratch.hist_scratch.sample = sample;
                rec.phase_end(Phase::BuildHistogram, depth, t);
                if built {
                    let t = Rec::phase_start();
                    let c = best_split_histogram_with(
                        &scratch.hist,
                        p,
                        &mut scratch.exact.xlogx,
                        &mut scratch.left,
                    );
                    rec.phase_end(Phase::EvaluateSplits, depth, t);
                    c
                } else {
                    None
                }
            }
        };

        if let Some(c) = candidate {
            if best.is_none_or(|b| c.gain > b.gain + GAIN_EPSILON) {
                best = Some(c);
                std::mem::swap(&mut scratch.values, &mut scratch.best_values);
            }
        }
    }
    best
}
