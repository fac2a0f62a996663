//! Sparse random projection matrices and their application to active samples.
//!
//! A node samples one matrix with `ceil(1.5 sqrt(d))` rows. Instead of drawing
//! a uniform variate per cell, the total nonzero count is drawn once from
//! `Binomial(rows * d, density)` and that many distinct cells are placed with
//! Floyd's subset-sampling algorithm. Both constructions give the same
//! distribution of nonzero patterns.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::ColumnarDataset;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub n_features: usize,
    pub num_projections: usize,
    pub expected_total_nonzeros: usize,
    /// Per-cell nonzero probability.
    pub cell_density: f64,
}

impl ProjectionConfig {
    /// Defaults for `d` features: `ceil(1.5 sqrt(d))` rows and `round(3 sqrt(d))`
    /// expected nonzeros. Density is capped at 1 for tiny `d`.
    pub fn for_features(n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidConfig("projection needs n_features >= 1".into()));
        }
        let root = (n_features as f64).sqrt();
        let num_projections = ((1.5 * root).ceil() as usize).max(1);
        let expected_total_nonzeros = (3.0 * root).round() as usize;
        Self::new(n_features, num_projections, expected_total_nonzeros)
    }

    pub fn new(
        n_features: usize,
        num_projections: usize,
        expected_total_nonzeros: usize,
    ) -> Result<Self> {
        if n_features == 0 || num_projections == 0 {
            return Err(Error::InvalidConfig(
                "projection needs n_features >= 1 and num_projections >= 1".into(),
            ));
        }
        let cells = (num_projections * n_features) as f64;
        let cell_density = (expected_total_nonzeros as f64 / cells).min(1.0);
        if cell_density <= 0.0 {
            return Err(Error::InvalidConfig("projection density must be positive".into()));
        }
        Ok(ProjectionConfig {
            n_features,
            num_projections,
            expected_total_nonzeros,
            cell_density,
        })
    }

    #[inline]
    pub fn cell_count(&self) -> u64 {
        (self.num_projections as u64) * (self.n_features as u64)
    }
}

/// One nonzero of a sparse projection row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEntry {
    pub feature: u32,
    /// Always `-1.0` or `+1.0`.
    pub weight: f32,
}

/// Rows of sparse `(feature, weight)` entries stored back to back.
/// Rows may be empty; entries within a row are sorted by feature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectionMatrix {
    offsets: Vec<u32>,
    entries: Vec<ProjectionEntry>,
}

impl ProjectionMatrix {
    pub fn from_rows(rows: Vec<Vec<ProjectionEntry>>) -> Self {
        let mut m = ProjectionMatrix::default();
        m.offsets.push(0);
        for row in rows {
            m.entries.extend(row);
            m.offsets.push(m.entries.len() as u32);
        }
        m
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[ProjectionEntry] {
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ProjectionEntry]> + '_ {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    #[inline]
    pub fn total_nonzeros(&self) -> usize {
        self.entries.len()
    }

    fn clear(&mut self) {
        self.offsets.clear();
        self.entries.clear();
    }
}

/// Sample a fresh projection matrix.
pub fn sample_projection_matrix<R: Rng + ?Sized>(
    config: &ProjectionConfig,
    rng: &mut R,
) -> ProjectionMatrix {
    let mut out = ProjectionMatrix::default();
    let mut scratch = CellScratch::default();
    sample_projection_matrix_into(config, rng, &mut out, &mut scratch);
    out
}

/// Reusable buffers for cell placement.
#[derive(Debug, Default)]
pub struct CellScratch {
    cells: Vec<u64>,
    set: HashSet<u64>,
}

// Below this many chosen cells a linear scan beats hashing.
const LINEAR_MEMBERSHIP_LIMIT: u64 = 96;

pub fn sample_projection_matrix_into<R: Rng + ?Sized>(
    config: &ProjectionConfig,
    rng: &mut R,
    out: &mut ProjectionMatrix,
    scratch: &mut CellScratch,
) {
    let cells = config.cell_count();
    let total = if config.cell_density >= 1.0 {
        cells
    } else {
        Binomial::new(cells, config.cell_density)
            .expect("density validated in ProjectionConfig")
            .sample(rng)
    };
    floyd_sample(cells, total, rng, scratch);
    scratch.cells.sort_unstable();

    out.clear();
    out.offsets.push(0);
    let d = config.n_features as u64;
    let mut row = 0u64;
    for &cell in &scratch.cells {
        let r = cell / d;
        while row < r {
            out.offsets.push(out.entries.len() as u32);
            row += 1;
        }
        let weight = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.entries.push(ProjectionEntry {
            feature: (cell % d) as u32,
            weight,
        });
    }
    while (out.offsets.len() as u64) <= config.num_projections as u64 {
        out.offsets.push(out.entries.len() as u32);
    }
}

/// Floyd's algorithm: `amount` distinct values from `0..range` using exactly
/// `amount` random draws. Result left unsorted in `scratch.cells`.
fn floyd_sample<R: Rng + ?Sized>(range: u64, amount: u64, rng: &mut R, scratch: &mut CellScratch) {
    debug_assert!(amount <= range);
    scratch.cells.clear();
    let linear = amount <= LINEAR_MEMBERSHIP_LIMIT;
    if !linear {
        scratch.set.clear();
    }
    for j in (range - amount)..range {
        let t = rng.random_range(0..=j);
        let pick = if linear {
            if scratch.cells.contains(&t) {
                j
            } else {
                t
            }
        } else if scratch.set.insert(t) {
            t
        } else {
            scratch.set.insert(j);
            j
        };
        scratch.cells.push(pick);
    }
}

/// Project the active samples through one sparse row:
/// `out[j] = sum over (f, w) of w * column_f[active[j]]`, accumulated in `f64`.
pub fn apply_projection<T: Real>(
    dataset: &ColumnarDataset<T>,
    row: &[ProjectionEntry],
    active: &[u32],
) -> Vec<T> {
    let mut out = Vec::new();
    apply_projection_into(dataset, row, active, &mut out);
    out
}

pub fn apply_projection_into<T: Real>(
    dataset: &ColumnarDataset<T>,
    row: &[ProjectionEntry],
    active: &[u32],
    out: &mut Vec<T>,
) {
    out.clear();
    match row {
        [] => out.resize(active.len(), T::from_f64(0.0)),
        [a] => {
            let (ca, wa) = (dataset.column(a.feature as usize), a.weight as f64);
            out.extend(
                active
                    .iter()
                    .map(|&i| T::from_f64(0.0 + wa * ca[i as usize].to_f64())),
            );
        }
        [a, b] => {
            let (ca, wa) = (dataset.column(a.feature as usize), a.weight as f64);
            let (cb, wb) = (dataset.column(b.feature as usize), b.weight as f64);
            out.extend(active.iter().map(|&i| {
                let i = i as usize;
                T::from_f64(0.0 + wa * ca[i].to_f64() + wb * cb[i].to_f64())
            }));
        }
        _ => {
            let cols: Vec<(&[T], f64)> = row
                .iter()
                .map(|e| (dataset.column(e.feature as usize), e.weight as f64))
                .collect();
            out.extend(active.iter().map(|&i| {
                let i = i as usize;
                let acc = cols.iter().fold(0.0f64, |acc, (c, w)| acc + w * c[i].to_f64());
                T::from_f64(acc)
            }));
        }
    }
}

/// Project a single row-major sample; matches [`apply_projection`] bit for bit.
#[inline]
pub fn project_sample<T: Real>(row: &[ProjectionEntry], sample: &[T]) -> T {
    let acc = row.iter().fold(0.0f64, |acc, e| {
        acc + e.weight as f64 * sample[e.feature as usize].to_f64()
    });
    T::from_f64(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    #[test]
    fn default_sizes() {
        let c = ProjectionConfig::for_features(16).unwrap();
        assert_eq!(c.num_projections, 6);
        assert_eq!(c.expected_total_nonzeros, 12);
        assert!((c.cell_density - 0.125).abs() < 1e-15);
        let c = ProjectionConfig::for_features(10_000).unwrap();
        assert_eq!(c.num_projections, 150);
        assert!((c.cell_density - 2e-4).abs() < 1e-15);
        let c = ProjectionConfig::for_features(1).unwrap();
        assert!(c.cell_density <= 1.0);
    }

    #[test]
    fn matrix_invariants() {
        let cfg = ProjectionConfig::for_features(100).unwrap();
        let mut rng = StreamRng::seed_from_u64(3);
        for _ in 0..200 {
            let m = sample_projection_matrix(&cfg, &mut rng);
            assert_eq!(m.n_rows(), cfg.num_projections);
            for row in m.rows() {
                assert!(row.windows(2).all(|w| w[0].feature < w[1].feature));
                for e in row {
                    assert!((e.feature as usize) < 100);
                    assert!(e.weight == 1.0 || e.weight == -1.0);
                }
            }
        }
    }

    #[test]
    fn full_density_fills_every_cell() {
        let cfg = ProjectionConfig::new(3, 2, 100).unwrap();
        let m = sample_projection_matrix(&cfg, &mut StreamRng::seed_from_u64(0));
        assert_eq!(m.total_nonzeros(), 6);
    }

    #[test]
    fn large_matrices_use_hash_membership() {
        let cfg = ProjectionConfig::new(40_000, 10, 2_000).unwrap();
        let m = sample_projection_matrix(&cfg, &mut StreamRng::seed_from_u64(9));
        assert!(m.total_nonzeros() > LINEAR_MEMBERSHIP_LIMIT as usize);
        let mut seen = HashSet::new();
        for (r, row) in m.rows().enumerate() {
            for e in row {
                assert!(seen.insert((r, e.feature)));
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ProjectionConfig::for_features(50).unwrap();
        let a = sample_projection_matrix(&cfg, &mut StreamRng::seed_from_u64(42));
        let b = sample_projection_matrix(&cfg, &mut StreamRng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    fn tiny() -> ColumnarDataset<f64> {
        ColumnarDataset::new(
            vec![vec![3.0, 5.0], vec![1.0, 2.0]],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn two_term_sum() {
        let ds = tiny();
        let row = [
            ProjectionEntry { feature: 0, weight: 1.0 },
            ProjectionEntry { feature: 1, weight: -1.0 },
        ];
        assert_eq!(apply_projection(&ds, &row, &[0, 1]), vec![2.0, 3.0]);
        assert_eq!(apply_projection(&ds, &row[..1], &[1]), vec![5.0]);
        assert_eq!(apply_projection(&ds, &[], &[0, 1]), vec![0.0, 0.0]);
    }
}
