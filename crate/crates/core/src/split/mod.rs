//! Split finding for one node: exact (sort-based) and histogram-based search,
//! bin lookup, and the per-node choice between the two.

pub mod binning;
pub mod entropy;
pub mod exact;
pub mod histogram;
pub mod node;

use serde::{Deserialize, Serialize};

use crate::real::Real;

pub use binning::{bin_index_scalar, bin_index_two_level, Backend, TableLayout, TwoLevelTable};
pub use entropy::{entropy, information_gain, GAIN_EPSILON};
pub use exact::best_split_exact;
pub use histogram::{best_split_histogram, build_histogram, sample_boundaries, Binning, Histogram};
pub use node::{choose_method, find_node_split, NodeSplit, SplitMethod, SplitScratch, SplitSettings};

/// How a sample equal to the threshold is routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// Left iff `v <= threshold` (exact splits: threshold is a midpoint).
    AtMost,
    /// Left iff `v < threshold` (histogram splits: threshold is a bin boundary).
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate<T> {
    pub projection_index: usize,
    pub threshold: T,
    pub rule: ThresholdRule,
    /// Information gain in bits; always positive for a returned candidate.
    pub gain: f64,
    pub left_count: usize,
    pub right_count: usize,
}

impl<T: Real> SplitCandidate<T> {
    #[inline]
    pub fn goes_left(&self, v: T) -> bool {
        match self.rule {
            ThresholdRule::AtMost => v <= self.threshold,
            ThresholdRule::Below => v < self.threshold,
        }
    }

    /// Largest value routed left, so trees can always use `v <= t`.
    pub fn routing_threshold(&self) -> T {
        match self.rule {
            ThresholdRule::AtMost => self.threshold,
            ThresholdRule::Below => self.threshold.next_down(),
        }
    }
}

/// Which split search a training run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SplitMode {
    ExactOnly,
    HistogramOnly,
    #[default]
    Dynamic,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SplitMode::ExactOnly),
            "hist" | "histogram" => Ok(SplitMode::HistogramOnly),
            "dynamic" => Ok(SplitMode::Dynamic),
            other => Err(format!("unknown split mode {other:?} (exact|hist|dynamic)")),
        }
    }
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::ExactOnly => "exact",
            SplitMode::HistogramOnly => "hist",
            SplitMode::Dynamic => "dynamic",
        })
    }
}
