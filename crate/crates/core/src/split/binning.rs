//! Bin lookup: binary search and the two-level coarse/fine table.
//!
//! The two-level table splits 255 boundaries into 16 groups of 16 (or 63 into
//! 8 groups of 8). A lookup counts the coarse entries `<= v` to pick a group,
//! then counts the group's entries `<= v` to pick the bin. Both counts are one
//! wide compare plus a popcount, so a lookup has no data-dependent branches.
//! Every backend returns exactly what [`bin_index_scalar`] returns.

#[cfg(target_arch = "x86_64")]
use std::arch::x86_64::*;

use crate::real::Real;

/// Number of boundaries `<= v`, i.e. the index of the first boundary strictly
/// greater than `v`. Values equal to a boundary fall in the bin to its right.
#[inline]
pub fn bin_index_scalar<T: Real>(boundaries: &[T], v: T) -> usize {
    boundaries.partition_point(|&b| b <= v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableLayout {
    /// 16 groups of 16: up to 256 bins.
    Wide16,
    /// 8 groups of 8: up to 64 bins.
    Narrow8,
}

impl TableLayout {
    #[inline]
    pub const fn width(self) -> usize {
        match self {
            TableLayout::Wide16 => 16,
            TableLayout::Narrow8 => 8,
        }
    }

    /// Boundary count of a full table (one fewer than the bin count).
    #[inline]
    pub const fn full_boundaries(self) -> usize {
        self.width() * self.width() - 1
    }

    /// Layout whose full size matches `n_boundaries` exactly.
    pub fn for_boundaries(n_boundaries: usize) -> Option<Self> {
        match n_boundaries {
            255 => Some(TableLayout::Wide16),
            63 => Some(TableLayout::Narrow8),
            _ => None,
        }
    }

    pub fn for_bin_count(bin_count: usize) -> Option<Self> {
        Self::for_boundaries(bin_count.wrapping_sub(1))
    }
}

/// Coarse/fine boundary table. Unused cells hold `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelTable<T> {
    layout: TableLayout,
    n_boundaries: usize,
    coarse: Vec<T>,
    fine: Vec<T>,
}

impl<T: Real> TwoLevelTable<T> {
    /// Build a table for `boundaries` (strictly increasing, at most
    /// `width * width` of them). Returns `None` if they do not fit.
    pub fn new(layout: TableLayout, boundaries: &[T]) -> Option<Self> {
        let w = layout.width();
        let mut t = TwoLevelTable {
            layout,
            n_boundaries: 0,
            coarse: vec![T::INFINITY; w],
            fine: vec![T::INFINITY; w * w],
        };
        t.rebuild(boundaries).then_some(t)
    }

    /// Refill in place; `false` if the boundaries do not fit this layout.
    pub fn rebuild(&mut self, boundaries: &[T]) -> bool {
        let w = self.layout.width();
        if boundaries.len() > w * w {
            return false;
        }
        self.n_boundaries = boundaries.len();
        self.fine[..boundaries.len()].copy_from_slice(boundaries);
        self.fine[boundaries.len()..].fill(T::INFINITY);
        for (g, c) in self.coarse.iter_mut().enumerate() {
            let end = ((g + 1) * w).min(boundaries.len());
            *c = if end > g * w {
                boundaries[end - 1]
            } else {
                T::INFINITY
            };
        }
        true
    }

    #[inline]
    pub fn layout(&self) -> TableLayout {
        self.layout
    }

    #[inline]
    pub fn n_boundaries(&self) -> usize {
        self.n_boundaries
    }

    pub fn coarse(&self) -> &[T] {
        &self.coarse
    }

    pub fn fine_group(&self, g: usize) -> &[T] {
        let w = self.layout.width();
        &self.fine[g * w..(g + 1) * w]
    }

    /// The real boundaries, padding dropped.
    pub fn flatten(&self) -> Vec<T> {
        self.fine[..self.n_boundaries].to_vec()
    }

    /// Scalar implementation of the two-level lookup.
    #[inline]
    pub fn bin_index_portable(&self, v: T) -> usize {
        let w = self.layout.width();
        let g = self.coarse.iter().filter(|&&c| c <= v).count().min(w - 1);
        let local = self.fine[g * w..(g + 1) * w]
            .iter()
            .filter(|&&c| c <= v)
            .count();
        // Only an infinite `v` can count padding cells.
        (g * w + local).min(self.n_boundaries)
    }

    /// Lookup with the fastest available backend.
    #[inline]
    pub fn bin_index(&self, v: T) -> usize {
        T::bin_two_level(self, Backend::detect(), v)
    }

    /// Lookup on a specific backend.
    ///
    /// # Panics
    /// If `backend` is not available on this CPU.
    #[inline]
    pub fn bin_index_with(&self, backend: Backend, v: T) -> usize {
        assert!(backend.is_available(), "{backend:?} is not available");
        T::bin_two_level(self, backend, v)
    }
}

/// Two-level lookup on the fastest backend for `T`.
#[inline]
pub fn bin_index_two_level<T: Real>(table: &TwoLevelTable<T>, v: T) -> usize {
    table.bin_index(v)
}

/// Instruction-set backend for `f32` two-level lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Portable,
    Avx2,
    Avx512,
}

impl Backend {
    pub fn detect() -> Backend {
        if Backend::Avx512.is_available() {
            Backend::Avx512
        } else if Backend::Avx2.is_available() {
            Backend::Avx2
        } else {
            Backend::Portable
        }
    }

    pub fn is_available(self) -> bool {
        match self {
            Backend::Portable => true,
            #[cfg(target_arch = "x86_64")]
            Backend::Avx2 => {
                is_x86_feature_detected!("avx2") && is_x86_feature_detected!("popcnt")
            }
            #[cfg(target_arch = "x86_64")]
            Backend::Avx512 => {
                is_x86_feature_detected!("avx512f")
                    && is_x86_feature_detected!("avx2")
                    && is_x86_feature_detected!("popcnt")
            }
            #[cfg(not(target_arch = "x86_64"))]
            _ => false,
        }
    }

    pub fn available() -> Vec<Backend> {
        [Backend::Portable, Backend::Avx2, Backend::Avx512]
            .into_iter()
            .filter(|b| b.is_available())
            .collect()
    }
}

pub(crate) fn fill_portable<T: Real>(
    table: &TwoLevelTable<T>,
    values: &[T],
    labels: &[u32],
    class_count: usize,
    counts: &mut [u32],
) {
    for (&v, &l) in values.iter().zip(labels) {
        counts[table.bin_index_portable(v) * class_count + l as usize] += 1;
    }
}

pub(crate) fn fill_f32(
    table: &TwoLevelTable<f32>,
    backend: Backend,
    values: &[f32],
    labels: &[u32],
    class_count: usize,
    counts: &mut [u32],
) {
    assert_eq!(values.len(), labels.len());
    assert!(counts.len() >= (table.n_boundaries + 1) * class_count);
    assert!(labels.iter().all(|&l| (l as usize) < class_count));
    #[cfg(target_arch = "x86_64")]
    {
        if backend != Backend::Portable && backend.is_available() {
            // SAFETY: the required CPU features were detected above; bins are
            // capped at n_boundaries and labels checked against class_count,
            // so every counts index is in bounds.
            unsafe {
                match (backend, table.layout) {
                    (Backend::Avx512, TableLayout::Wide16) => {
                        fill_avx512_w16(table, values, labels, class_count, counts)
                    }
                    (_, TableLayout::Wide16) => {
                        fill_avx2_w16(table, values, labels, class_count, counts)
                    }
                    (_, TableLayout::Narrow8) => {
                        fill_avx2_w8(table, values, labels, class_count, counts)
                    }
                }
            }
            return;
        }
    }
    let _ = backend;
    fill_portable(table, values, labels, class_count, counts);
}

pub(crate) fn bin_index_f32(table: &TwoLevelTable<f32>, backend: Backend, v: f32) -> usize {
    #[cfg(target_arch = "x86_64")]
    {
        if backend != Backend::Portable && backend.is_available() {
            // SAFETY: features detected above.
            unsafe {
                return match (backend, table.layout) {
                    (Backend::Avx512, TableLayout::Wide16) => lookup_avx512_w16(table, v),
                    (_, TableLayout::Wide16) => lookup_avx2_w16(table, v),
                    (_, TableLayout::Narrow8) => lookup_avx2_w8(table, v),
                };
            }
        }
    }
    let _ = backend;
    table.bin_index_portable(v)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,popcnt")]
#[inline]
unsafe fn lookup_avx512_w16(table: &TwoLevelTable<f32>, v: f32) -> usize {
    let key = _mm512_set1_ps(v);
    let coarse = _mm512_loadu_ps(table.coarse.as_ptr());
    let g = (_mm512_cmp_ps_mask::<_CMP_LE_OQ>(coarse, key).count_ones() as usize).min(15);
    let fine = _mm512_loadu_ps(table.fine.as_ptr().add(g * 16));
    let local = _mm512_cmp_ps_mask::<_CMP_LE_OQ>(fine, key).count_ones() as usize;
    (g * 16 + local).min(table.n_boundaries)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,popcnt")]
unsafe fn fill_avx512_w16(
    table: &TwoLevelTable<f32>,
    values: &[f32],
    labels: &[u32],
    class_count: usize,
    counts: &mut [u32],
) {
    let coarse = _mm512_loadu_ps(table.coarse.as_ptr());
    let fine = table.fine.as_ptr();
    let cap = table.n_boundaries;
    let counts = counts.as_mut_ptr();
    for (&v, &l) in values.iter().zip(labels) {
        let key = _mm512_set1_ps(v);
        let g = (_mm512_cmp_ps_mask::<_CMP_LE_OQ>(coarse, key).count_ones() as usize).min(15);
        let group = _mm512_loadu_ps(fine.add(g * 16));
        let local = _mm512_cmp_ps_mask::<_CMP_LE_OQ>(group, key).count_ones() as usize;
        let bin = (g * 16 + local).min(cap);
        *counts.add(bin * class_count + l as usize) += 1;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
#[inline]
unsafe fn le_mask8(ptr: *const f32, key: __m256) -> u32 {
    let cells = _mm256_loadu_ps(ptr);
    _mm256_movemask_ps(_mm256_cmp_ps::<_CMP_LE_OQ>(cells, key)) as u32
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
#[inline]
unsafe fn lookup_avx2_w16(table: &TwoLevelTable<f32>, v: f32) -> usize {
    let key = _mm256_set1_ps(v);
    let c = table.coarse.as_ptr();
    let g = ((le_mask8(c, key).count_ones() + le_mask8(c.add(8), key).count_ones()) as usize)
        .min(15);
    let f = table.fine.as_ptr().add(g * 16);
    let local = (le_mask8(f, key).count_ones() + le_mask8(f.add(8), key).count_ones()) as usize;
    (g * 16 + local).min(table.n_boundaries)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
unsafe fn fill_avx2_w16(
    table: &TwoLevelTable<f32>,
    values: &[f32],
    labels: &[u32],
    class_count: usize,
    counts: &mut [u32],
) {
    let counts = counts.as_mut_ptr();
    for (&v, &l) in values.iter().zip(labels) {
        let bin = lookup_avx2_w16(table, v);
        *counts.add(bin * class_count + l as usize) += 1;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
#[inline]
unsafe fn lookup_avx2_w8(table: &TwoLevelTable<f32>, v: f32) -> usize {
    let key = _mm256_set1_ps(v);
    let g = (le_mask8(table.coarse.as_ptr(), key).count_ones() as usize).min(7);
    let local = le_mask8(table.fine.as_ptr().add(g * 8), key).count_ones() as usize;
    (g * 8 + local).min(table.n_boundaries)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
unsafe fn fill_avx2_w8(
    table: &TwoLevelTable<f32>,
    values: &[f32],
    labels: &[u32],
    class_count: usize,
    counts: &mut [u32],
) {
    let counts = counts.as_mut_ptr();
    for (&v, &l) in values.iter().zip(labels) {
        let bin = lookup_avx2_w8(table, v);
        *counts.add(bin * class_count + l as usize) += 1;
    }
}
