use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use soforest::projection::{sample_projection_matrix, ProjectionConfig};

/// Upper-tail p-value of a Pearson statistic over equiprobable cells.
fn uniform_p_value(observed: &[u64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let e = n as f64 / observed.len() as f64;
    let chi2: f64 = observed.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((observed.len() - 1) as f64).unwrap().cdf(chi2)
}

#[test]
fn nonzeros_spread_uniformly_over_cells() {
    let config = ProjectionConfig::for_features(64).unwrap();
    let (rows, d) = (config.num_projections, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut per_cell = vec![0u64; rows * d];
    let mut signs = [0u64; 2];
    for _ in 0..4000 {
        let m = sample_projection_matrix(&config, &mut rng);
        for (r, row) in m.rows().enumerate() {
            for e in row {
                per_cell[r * d + e.feature as usize] += 1;
                signs[(e.weight > 0.0) as usize] += 1;
            }
        }
    }
    assert!(uniform_p_value(&per_cell) > 0.001);
    assert!(uniform_p_value(&signs) > 0.001);
}

#[test]
fn large_dimension_count_moments() {
    let config = ProjectionConfig::for_features(10_000).unwrap();
    assert_eq!(config.num_projections, 150);
    assert_eq!(config.expected_total_nonzeros, 300);
    let cells = config.cell_count() as f64;
    let p = config.cell_density;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let draws = 2000;
    let totals: Vec<f64> = (0..draws)
        .map(|_| sample_projection_matrix(&config, &mut rng).total_nonzeros() as f64)
        .collect();
    let mean = totals.iter().sum::<f64>() / draws as f64;
    let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let want_var = cells * p * (1.0 - p);
    assert!((mean - 300.0).abs() < 4.0 * (want_var / draws as f64).sqrt());
    // Sample variance of ~2000 draws is within 15% with overwhelming probability.
    assert!((var / want_var - 1.0).abs() < 0.15, "var {var} vs {want_var}");
}
