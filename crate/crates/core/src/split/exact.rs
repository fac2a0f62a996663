//! Exact split search by sorting.

use super::entropy::{XLogXTable, GAIN_EPSILON};
use super::{SplitCandidate, ThresholdRule};
use crate::real::{midpoint, Real};

/// Sort `(value, label)` pairs and evaluate the midpoint between every pair of
/// consecutive distinct values. Ties keep the smallest threshold.
pub fn best_split_exact<T: Real>(
    values: &[T],
    labels: &[u32],
    class_count: usize,
    projection_index: usize,
) -> Option<SplitCandidate<T>> {
    let mut scratch = ExactScratch::default();
    best_split_exact_with(values, labels, class_count, projection_index, &mut scratch)
}

#[derive(Debug, Default)]
pub struct ExactScratch<T> {
    pairs: Vec<(T, u32)>,
    left: Vec<u32>,
    right: Vec<u32>,
    pub(crate) xlogx: XLogXTable,
}

pub(crate) fn best_split_exact_with<T: Real>(
    values: &[T],
    labels: &[u32],
    class_count: usize,
    projection_index: usize,
    scratch: &mut ExactScratch<T>,
) -> Option<SplitCandidate<T>> {
    assert_eq!(values.len(), labels.len());
    let n = values.len();
    if n < 2 {
        return None;
    }
    let ExactScratch {
        pairs,
        left,
        right,
        xlogx,
    } = scratch;
    pairs.clear();
    pairs.extend(values.iter().copied().zip(labels.iter().copied()));
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    if pairs[0].0 >= pairs[n - 1].0 {
        return None;
    }

    xlogx.ensure(n);
    left.clear();
    left.resize(class_count, 0);
    right.clear();
    right.resize(class_count, 0);
    for &(_, l) in pairs.iter() {
        right[l as usize] += 1;
    }
    let n32 = n as u32;
    let parent_h = xlogx.scaled_entropy(right, n32);
    if parent_h <= 0.0 {
        return None;
    }
    let inv_n = 1.0 / n as f64;

    let mut best: Option<SplitCandidate<T>> = None;
    let mut best_gain = 0.0;
    for i in 0..n - 1 {
        let (v, l) = pairs[i];
        left[l as usize] += 1;
        right[l as usize] -= 1;
        let next = pairs[i + 1].0;
        if v >= next {
            continue;
        }
        let nl = (i + 1) as u32;
        let nr = n32 - nl;
        let gain =
            (parent_h - xlogx.scaled_entropy(left, nl) - xlogx.scaled_entropy(right, nr)) * inv_n;
        if gain > best_gain + GAIN_EPSILON {
            best_gain = gain;
            best = Some(SplitCandidate {
                projection_index,
                threshold: midpoint(v, next),
                rule: ThresholdRule::AtMost,
                gain,
                left_count: nl as usize,
                right_count: nr as usize,
            });
        }
    }
    best
}
