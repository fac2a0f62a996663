//! Storage precision for feature and projected values.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::split::binning::{self, Backend, TwoLevelTable};

/// Precision tag recorded in models so prediction rounds inputs the same way
/// training did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Precision::F32 => f.write_str("f32"),
            Precision::F64 => f.write_str("f64"),
        }
    }
}

/// A floating-point element type usable as a dataset value.
///
/// Sums are always accumulated in `f64` and rounded back with [`Real::from_f64`].
pub trait Real:
    Copy + PartialOrd + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    const PRECISION: Precision;
    const INFINITY: Self;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Largest representable value strictly below `self`.
    fn next_down(self) -> Self;
    fn is_finite(self) -> bool;
    /// Total order, used for sorting.
    fn total_cmp(&self, other: &Self) -> std::cmp::Ordering;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn half(self) -> Self;

    /// Bin every value through a two-level table and bump the matching
    /// `counts[bin * class_count + label]` cell.
    fn fill_two_level(
        table: &TwoLevelTable<Self>,
        backend: Backend,
        values: &[Self],
        labels: &[u32],
        class_count: usize,
        counts: &mut [u32],
    ) {
        let _ = backend;
        binning::fill_portable(table, values, labels, class_count, counts);
    }

    /// Single lookup through a specific backend. Backends other than
    /// `Portable` are only implemented for `f32`.
    fn bin_two_level(table: &TwoLevelTable<Self>, backend: Backend, v: Self) -> usize {
        let _ = backend;
        table.bin_index_portable(v)
    }
}

impl Real for f32 {
    const PRECISION: Precision = Precision::F32;
    const INFINITY: Self = f32::INFINITY;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn next_down(self) -> Self {
        f32::next_down(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    #[inline]
    fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        f32::total_cmp(self, other)
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
    #[inline]
    fn half(self) -> Self {
        self * 0.5
    }

    fn fill_two_level(
        table: &TwoLevelTable<Self>,
        backend: Backend,
        values: &[Self],
        labels: &[u32],
        class_count: usize,
        counts: &mut [u32],
    ) {
        binning::fill_f32(table, backend, values, labels, class_count, counts);
    }

    fn bin_two_level(table: &TwoLevelTable<Self>, backend: Backend, v: Self) -> usize {
        binning::bin_index_f32(table, backend, v)
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::F64;
    const INFINITY: Self = f64::INFINITY;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn next_down(self) -> Self {
        f64::next_down(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        f64::total_cmp(self, other)
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
    #[inline]
    fn half(self) -> Self {
        self * 0.5
    }
}

/// A value `m` with `a <= m < b`, as close to the midpoint as the type allows.
/// Requires `a < b`.
#[inline]
pub fn midpoint<T: Real>(a: T, b: T) -> T {
    let m = a.add(b.sub(a).half());
    if m < b && m >= a {
        m
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_stays_below_upper() {
        let a = 1.0f32;
        let b = f32::next_up(a);
        assert_eq!(midpoint(a, b), a);
        assert_eq!(midpoint(1.0f64, 2.0), 1.5);
        assert_eq!(midpoint(-3.0f32, f32::INFINITY), -3.0);
        let a = f64::MAX / 2.0;
        assert!(midpoint(-f64::MAX, a) < a);
    }
}
