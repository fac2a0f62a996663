//! Histogram split search.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binning::{bin_index_scalar, Backend, TableLayout, TwoLevelTable};
use super::entropy::{XLogXTable, GAIN_EPSILON};
use super::{SplitCandidate, ThresholdRule};
use crate::real::{midpoint, Real};

pub const DEFAULT_BIN_COUNT: usize = 256;

/// Per-bin, per-class sample counts over sorted boundaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Histogram<T> {
    boundaries: Vec<T>,
    counts: Vec<u32>,
    totals: Vec<u32>,
    class_count: usize,
}

impl<T: Real> Histogram<T> {
    /// Empty histogram over `boundaries`. Clearing touches only
    /// `bins * class_count` cells, however large earlier histograms were.
    pub fn reset(&mut self, boundaries: &[T], class_count: usize) {
        self.boundaries.clear();
        self.boundaries.extend_from_slice(boundaries);
        self.class_count = class_count;
        let bins = boundaries.len() + 1;
        self.counts.clear();
        self.counts.resize(bins * class_count, 0);
        self.totals.clear();
        self.totals.resize(bins, 0);
    }

    #[inline]
    pub fn bin_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn boundaries(&self) -> &[T] {
        &self.boundaries
    }

    /// Class counts of bin `b`.
    #[inline]
    pub fn counts(&self, b: usize) -> &[u32] {
        &self.counts[b * self.class_count..(b + 1) * self.class_count]
    }

    #[inline]
    pub fn total(&self, b: usize) -> u32 {
        self.totals[b]
    }

    pub fn n_samples(&self) -> u64 {
        self.totals.iter().map(|&t| t as u64).sum()
    }

    fn recount_totals(&mut self) {
        let c = self.class_count;
        for (t, row) in self.totals.iter_mut().zip(self.counts.chunks_exact(c)) {
            *t = row.iter().sum();
        }
    }
}

/// Bin lookup strategy for histogram filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Binning {
    /// Binary search over the boundaries.
    Scalar,
    /// Two-level table lookup when the boundary count fits a table exactly,
    /// binary search otherwise.
    #[default]
    TwoLevel,
}

impl std::str::FromStr for Binning {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scalar" => Ok(Binning::Scalar),
            "two-level" | "twolevel" | "simd" => Ok(Binning::TwoLevel),
            other => Err(format!("unknown binning {other:?} (scalar|two-level)")),
        }
    }
}

/// Reusable buffers for histogram construction.
#[derive(Debug, Default)]
pub struct HistogramScratch<T> {
    pub(crate) sample: Vec<T>,
    pub(crate) boundaries: Vec<T>,
    wide: Option<TwoLevelTable<T>>,
    narrow: Option<TwoLevelTable<T>>,
    backend: Option<Backend>,
}

impl<T: Real> HistogramScratch<T> {
    pub fn with_backend(backend: Backend) -> Self {
        HistogramScratch {
            backend: Some(backend),
            ..Default::default()
        }
    }

    fn backend(&mut self) -> Backend {
        *self.backend.get_or_insert_with(Backend::detect)
    }

    fn table(&mut self, layout: TableLayout, boundaries: &[T]) -> &TwoLevelTable<T> {
        let slot = match layout {
            TableLayout::Wide16 => &mut self.wide,
            TableLayout::Narrow8 => &mut self.narrow,
        };
        match slot {
            Some(t) => {
                t.rebuild(boundaries);
            }
            None => *slot = TwoLevelTable::new(layout, boundaries),
        }
        slot.as_ref().expect("boundary count matches layout")
    }
}

/// Draw up to `bin_count - 1` random-width bin boundaries from `values`.
///
/// A uniform random subset of `min(bin_count, distinct)` distinct values is
/// drawn and a boundary is placed between each consecutive pair. Fewer
/// distinct values than bins gives every midpoint; constant values give none.
pub fn sample_boundaries<T: Real, R: Rng + ?Sized>(
    values: &[T],
    bin_count: usize,
    rng: &mut R,
) -> Vec<T> {
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    sample_boundaries_into(values, bin_count, rng, &mut scratch, &mut out);
    out
}

pub(crate) fn sample_boundaries_into<T: Real, R: Rng + ?Sized>(
    values: &[T],
    bin_count: usize,
    rng: &mut R,
    drawn: &mut Vec<T>,
    out: &mut Vec<T>,
) {
    out.clear();
    drawn.clear();
    let n = values.len();
    if n < 2 || bin_count < 2 {
        return;
    }
    let want = bin_count;
    if n <= 2 * want {
        distinct_subset(values, want, rng, drawn);
    } else {
        drawn.extend(
            rand::seq::index::sample(rng, n, want)
                .into_iter()
                .map(|i| values[i]),
        );
        sort_dedup(drawn);
        // Duplicated values: top up with further draws before falling back to
        // a full pass over the node.
        let mut tries = 0;
        while drawn.len() < want && tries < 4 * want {
            let v = values[rng.random_range(0..n)];
            let pos = drawn.partition_point(|&x| x < v);
            if pos == drawn.len() || v < drawn[pos] {
                drawn.insert(pos, v);
            }
            tries += 1;
        }
        if drawn.len() < want {
            drawn.clear();
            distinct_subset(values, want, rng, drawn);
        }
    }
    out.extend(drawn.windows(2).map(|w| midpoint(w[0], w[1])));
}

fn sort_dedup<T: Real>(v: &mut Vec<T>) {
    v.sort_unstable_by(T::total_cmp);
    v.dedup_by(|b, a| *a >= *b);
}

/// All distinct values, or a uniform subset of `want` of them.
fn distinct_subset<T: Real, R: Rng + ?Sized>(
    values: &[T],
    want: usize,
    rng: &mut R,
    drawn: &mut Vec<T>,
) {
    drawn.extend_from_slice(values);
    sort_dedup(drawn);
    if drawn.len() > want {
        let mut keep: Vec<usize> = rand::seq::index::sample(rng, drawn.len(), want).into_vec();
        keep.sort_unstable();
        for (dst, src) in keep.into_iter().enumerate() {
            drawn[dst] = drawn[src];
        }
        drawn.truncate(want);
    }
}

/// Count `(bin(v_j), label_j)` pairs over the boundaries.
pub fn build_histogram<T: Real>(
    values: &[T],
    labels: &[u32],
    boundaries: &[T],
    class_count: usize,
) -> Histogram<T> {
    let mut hist = Histogram::default();
    let mut scratch = HistogramScratch::default();
    build_histogram_into(
        &mut hist,
        &mut scratch,
        values,
        labels,
        boundaries,
        class_count,
        Binning::TwoLevel,
    );
    hist
}

pub(crate) fn build_histogram_into<T: Real>(
    hist: &mut Histogram<T>,
    scratch: &mut HistogramScratch<T>,
    values: &[T],
    labels: &[u32],
    boundaries: &[T],
    class_count: usize,
    binning: Binning,
) {
    assert_eq!(values.len(), labels.len());
    hist.reset(boundaries, class_count);
    let layout = match binning {
        Binning::TwoLevel => TableLayout::for_boundaries(boundaries.len()),
        Binning::Scalar => None,
    };
    match layout {
        Some(layout) => {
            let backend = scratch.backend();
            let table = scratch.table(layout, boundaries);
            T::fill_two_level(table, backend, values, labels, class_count, &mut hist.counts);
        }
        None => {
            for (&v, &l) in values.iter().zip(labels) {
                hist.counts[bin_index_scalar(boundaries, v) * class_count + l as usize] += 1;
            }
        }
    }
    hist.recount_totals();
}

/// Best boundary by information gain, scanning left to right. Ties keep the
/// smallest boundary. `None` when no boundary has samples on both sides or
/// the best gain is zero.
pub fn best_split_histogram<T: Real>(
    hist: &Histogram<T>,
    projection_index: usize,
) -> Option<SplitCandidate<T>> {
    let mut table = XLogXTable::default();
    let mut left = Vec::new();
    best_split_histogram_with(hist, projection_index, &mut table, &mut left)
}

pub(crate) fn best_split_histogram_with<T: Real>(
    hist: &Histogram<T>,
    projection_index: usize,
    xlogx: &mut XLogXTable,
    left: &mut Vec<u32>,
) -> Option<SplitCandidate<T>> {
    let c = hist.class_count();
    let n: u32 = hist.totals.iter().sum();
    if n < 2 || hist.boundaries.is_empty() {
        return None;
    }
    xlogx.ensure(n as usize);
    let mut parent = vec![0u32; c];
    for row in hist.counts.chunks_exact(c) {
        for (p, &x) in parent.iter_mut().zip(row) {
            *p += x;
        }
    }
    let parent_h = xlogx.scaled_entropy(&parent, n);
    left.clear();
    left.resize(c, 0);
    let mut right = parent.clone();
    let mut nl = 0u32;
    let mut best: Option<SplitCandidate<T>> = None;
    let mut best_gain = 0.0;
    let inv_n = 1.0 / n as f64;
    for (b, &boundary) in hist.boundaries.iter().enumerate() {
        let t = hist.totals[b];
        if t == 0 {
            continue;
        }
        for ((l, r), &x) in left.iter_mut().zip(right.iter_mut()).zip(hist.counts(b)) {
            *l += x;
            *r -= x;
        }
        nl += t;
        let nr = n - nl;
        if nr == 0 {
            break;
        }
        let gain = (parent_h - xlogx.scaled_entropy(left, nl) - xlogx.scaled_entropy(&right, nr))
            * inv_n;
        if gain > best_gain + GAIN_EPSILON {
            best_gain = gain;
            best = Some(SplitCandidate {
                projection_index,
                threshold: boundary,
                rule: ThresholdRule::Below,
                gain,
                left_count: nl as usize,
                right_count: nr as usize,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    #[test]
    fn boundaries_all_midpoints_when_few_values() {
        let mut rng = StreamRng::seed_from_u64(1);
        assert_eq!(
            sample_boundaries(&[1.0f64, 2.0, 3.0, 4.0], 256, &mut rng),
            vec![1.5, 2.5, 3.5]
        );
        assert_eq!(
            sample_boundaries(&[4.0f64, 1.0, 4.0, 3.0, 2.0, 1.0], 256, &mut rng),
            vec![1.5, 2.5, 3.5]
        );
        assert!(sample_boundaries(&[7.0f32; 10], 256, &mut rng).is_empty());
    }

    #[test]
    fn boundaries_capped_at_bin_count() {
        let mut rng = StreamRng::seed_from_u64(2);
        let values: Vec<f32> = (0..10_000).map(|_| rng.random::<f32>()).collect();
        let b = sample_boundaries(&values, 256, &mut rng);
        assert_eq!(b.len(), 255);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        let small: Vec<f32> = values[..300].to_vec();
        let b = sample_boundaries(&small, 64, &mut rng);
        assert_eq!(b.len(), 63);
    }

    #[test]
    fn boundaries_with_heavy_duplicates() {
        let mut rng = StreamRng::seed_from_u64(3);
        // 5000 samples over 300 distinct values, most of them rare.
        let values: Vec<f64> = (0..5000)
            .map(|i| if i < 4700 { (i % 3) as f64 } else { (i - 4700) as f64 + 10.0 })
            .collect();
        let b = sample_boundaries(&values, 256, &mut rng);
        assert_eq!(b.len(), 255);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        let values: Vec<f64> = (0..5000).map(|i| (i % 40) as f64).collect();
        assert_eq!(sample_boundaries(&values, 256, &mut rng).len(), 39);
    }

    #[test]
    fn tiny_histogram() {
        let h = build_histogram(&[0.5f32, 1.5], &[0, 1], &[1.0], 2);
        assert_eq!(h.counts(0), &[1, 0]);
        assert_eq!(h.counts(1), &[0, 1]);
        assert_eq!(h.n_samples(), 2);
    }

    #[test]
    fn one_bin_histogram_is_unsplittable() {
        let h = build_histogram(&[5.0f32, 6.0, 7.0], &[0, 1, 0], &[10.0], 2);
        assert_eq!(h.total(0), 3);
        assert_eq!(h.total(1), 0);
        assert!(best_split_histogram(&h, 0).is_none());
    }

    #[test]
    fn perfect_histogram_split() {
        let h = build_histogram(&[0.0f32, 0.5, 2.0, 3.0], &[0, 0, 1, 1], &[1.0], 2);
        let s = best_split_histogram(&h, 4).unwrap();
        assert_eq!(s.threshold, 1.0);
        assert_eq!(s.gain, 1.0);
        assert_eq!((s.left_count, s.right_count, s.projection_index), (2, 2, 4));
    }

    #[test]
    fn boundary_equal_values_bin_right() {
        let h = build_histogram(&[1.0f32, 1.0, 0.0], &[1, 1, 0], &[1.0], 2);
        assert_eq!(h.counts(0), &[1, 0]);
        assert_eq!(h.counts(1), &[0, 2]);
        let s = best_split_histogram(&h, 0).unwrap();
        assert!(!s.goes_left(1.0));
        assert!(s.routing_threshold() < 1.0);
    }

    #[test]
    fn scalar_and_two_level_fill_agree() {
        let mut rng = StreamRng::seed_from_u64(5);
        let values: Vec<f32> = (0..4000).map(|_| rng.random::<f32>() * 10.0 - 5.0).collect();
        let labels: Vec<u32> = (0..4000).map(|_| rng.random_range(0..3)).collect();
        for bins in [64, 256] {
            let b = sample_boundaries(&values, bins, &mut rng);
            let mut s = HistogramScratch::default();
            let mut two = Histogram::default();
            build_histogram_into(&mut two, &mut s, &values, &labels, &b, 3, Binning::TwoLevel);
            let mut one = Histogram::default();
            build_histogram_into(&mut one, &mut s, &values, &labels, &b, 3, Binning::Scalar);
            assert_eq!(one, two);
        }
    }
}
