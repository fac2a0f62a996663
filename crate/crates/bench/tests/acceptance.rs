//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! Run a subset by number: `cargo test -p soforest-bench --test acceptance -- 1 3`.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use soforest::calibrate::{calibrate_crossover, calibrate_split_paths, DEFAULT_BUDGET, DEFAULT_N_MAX, DEFAULT_N_MIN};
use soforest::forest::DecisionNode;
use soforest::projection::ProjectionConfig;
use soforest::split::{
    best_split_exact, best_split_histogram, bin_index_scalar, build_histogram, sample_boundaries, Backend, Binning,
    SplitSettings, TableLayout, TwoLevelTable, GAIN_EPSILON,
};
use soforest::{
    generate_trunk, load_model, sample_projection_matrix, save_model, train_forest, Breakeven, ColumnarDataset,
    SplitMode, TrainConfig,
};
use soforest_bench::{bench_mode_comparison, BenchMode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "binning equivalence", Duration::from_secs(10), binning_equivalence),
    (2, "projection sampler statistics", Duration::from_secs(30), sampler_statistics),
    (3, "split oracle equivalence", Duration::from_secs(30), split_oracles),
    (4, "purity", Duration::from_secs(60), purity),
    (5, "accuracy parity", Duration::from_secs(300), accuracy_parity),
    (6, "crossover sanity", Duration::from_secs(2), crossover_sanity),
    (7, "dynamic dominance", Duration::from_secs(600), dynamic_dominance),
    (8, "determinism", Duration::from_secs(120), determinism),
    (9, "model round trip", Duration::from_secs(60), model_round_trip),
];

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, limit, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        if elapsed > limit {
            o.pass = false;
            o.detail.push_str(&format!("; over time limit {limit:?}"));
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

// 1 ------------------------------------------------------------------------

fn random_boundaries(rng: &mut ChaCha8Rng, count: usize) -> Vec<f32> {
    let scale = 10f32.powi(rng.random_range(-3..4));
    let mut set = Vec::with_capacity(count);
    while set.len() < count {
        set.clear();
        set.extend((0..count * 2).map(|_| (rng.random::<f32>() * 2.0 - 1.0) * scale));
        // A few clustered values exercise adjacent floats.
        let base = set[0];
        set.extend((1..8).map(|k| f32::from_bits(base.to_bits() + k)));
        set.sort_by(f32::total_cmp);
        set.dedup();
        if set.len() >= count {
            let mut keep: Vec<usize> = rand::seq::index::sample(rng, set.len(), count).into_vec();
            keep.sort_unstable();
            set = keep.into_iter().map(|i| set[i]).collect();
        }
    }
    set
}

fn probe_values(rng: &mut ChaCha8Rng, boundaries: &[f32], count: usize) -> Vec<f32> {
    let lo = boundaries[0];
    let hi = *boundaries.last().unwrap();
    let span = (hi - lo).max(f32::MIN_POSITIVE);
    let mut out = vec![f32::NEG_INFINITY, f32::INFINITY, f32::MAX, f32::MIN, 0.0, -0.0, lo, hi];
    while out.len() < count {
        let b = boundaries[rng.random_range(0..boundaries.len())];
        out.push(match rng.random_range(0..4) {
            0 => b,
            1 => b.next_up(),
            2 => b.next_down(),
            _ => lo - span * 0.1 + rng.random::<f32>() * span * 1.2,
        });
    }
    out
}

fn binning_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let backends = Backend::available();
    let mut lookups = 0u64;
    let mut mismatches = 0u64;
    let mut hist_mismatches = 0u64;
    for (layout, n_boundaries) in [(TableLayout::Wide16, 255), (TableLayout::Narrow8, 63)] {
        for _ in 0..1000 {
            let boundaries = random_boundaries(&mut rng, n_boundaries);
            let values = probe_values(&mut rng, &boundaries, 1000);
            let table = TwoLevelTable::new(layout, &boundaries).unwrap();
            let labels: Vec<u32> = (0..values.len() as u32).map(|i| i % 3).collect();
            let mut expected = vec![0u32; (n_boundaries + 1) * 3];
            for (&v, &l) in values.iter().zip(&labels) {
                let want = bin_index_scalar(&boundaries, v);
                expected[want * 3 + l as usize] += 1;
                if soforest::split::bin_index_two_level(&table, v) != want {
                    mismatches += 1;
                }
                for &b in &backends {
                    if table.bin_index_with(b, v) != want {
                        mismatches += 1;
                    }
                }
                lookups += 1 + backends.len() as u64;
            }
            let hist = build_histogram(&values, &labels, &boundaries, 3);
            for b in 0..=n_boundaries {
                if hist.counts(b) != &expected[b * 3..b * 3 + 3] {
                    hist_mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && hist_mismatches == 0,
        format!(
            "{mismatches} lookup mismatches in {lookups} lookups over 2000 boundary sets \
             (backends {backends:?}), {hist_mismatches} histogram bin mismatches"
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn sampler_statistics() -> Outcome {
    let config = ProjectionConfig::for_features(100).unwrap();
    let cells = config.cell_count();
    let density = config.cell_density;
    let draws = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let (mut sum, mut sum_sq) = (0f64, 0f64);
    for _ in 0..draws {
        let z = sample_projection_matrix(&config, &mut rng).total_nonzeros() as u64;
        *counts.entry(z).or_default() += 1;
        sum += z as f64;
        sum_sq += (z * z) as f64;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq - sum * sum / draws as f64) / (draws as f64 - 1.0);
    let se = (var / draws as f64).sqrt();
    let target = cells as f64 * density;

    // Per-cell Bernoulli(density) trials: the total is Binomial(cells, density).
    let oracle = Binomial::new(density, cells).unwrap();
    let (chi2, dof) = chi_square(&counts, draws as f64, |k| oracle.pmf(k));
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2);
    let mean_ok = (mean - target).abs() <= 3.0 * se;
    outcome(
        p_value > 0.01 && mean_ok,
        format!(
            "chi2 {chi2:.2} on {dof} dof, p = {p_value:.3}; mean {mean:.3} vs {target} (3 SE = {:.3})",
            3.0 * se
        ),
    )
}

/// Pearson statistic with adjacent cells pooled until each expects ≥ 5.
fn chi_square(observed: &BTreeMap<u64, u64>, n: f64, pmf: impl Fn(u64) -> f64) -> (f64, usize) {
    let max = *observed.keys().last().unwrap();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    let mut cumulative = 0.0;
    for k in 0..=max {
        let p = pmf(k);
        cumulative += p;
        o += *observed.get(&k).unwrap_or(&0) as f64;
        e += n * p;
        if e >= 5.0 {
            cells.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    // Upper tail beyond the largest observation.
    e += n * (1.0 - cumulative).max(0.0);
    match cells.last_mut() {
        Some(last) if e < 5.0 => {
            last.0 += o;
            last.1 += e;
        }
        _ => cells.push((o, e)),
    }
    let chi2 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (chi2, cells.len() - 1)
}

// 3 ------------------------------------------------------------------------

fn entropy_bits(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Gain of sending `goes_left` values left, or `None` if a side is empty.
fn brute_gain(values: &[f32], labels: &[u32], classes: usize, goes_left: impl Fn(f32) -> bool) -> Option<f64> {
    let mut left = vec![0u32; classes];
    let mut right = vec![0u32; classes];
    for (&v, &l) in values.iter().zip(labels) {
        if goes_left(v) {
            left[l as usize] += 1;
        } else {
            right[l as usize] += 1;
        }
    }
    let (nl, nr) = (left.iter().sum::<u32>() as f64, right.iter().sum::<u32>() as f64);
    if nl == 0.0 || nr == 0.0 {
        return None;
    }
    let parent: Vec<u32> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
    let n = nl + nr;
    Some(entropy_bits(&parent) - nl / n * entropy_bits(&left) - nr / n * entropy_bits(&right))
}

/// Best (threshold, gain) over `candidates` scanned in ascending order; the
/// smallest threshold wins ties.
fn brute_best(scored: impl Iterator<Item = (f32, f64)>) -> Option<(f32, f64)> {
    let scored: Vec<(f32, f64)> = scored.collect();
    let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    if max <= GAIN_EPSILON {
        return None;
    }
    scored.into_iter().find(|s| s.1 >= max - 1e-9)
}

fn split_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut histogram_nodes = 0;
    for node in 0..500 {
        let n = rng.random_range(2..=200);
        let classes = rng.random_range(2..=4);
        // Quarter-integer grid: midpoints are exact and ties are common.
        let range = rng.random_range(1..=60);
        let values: Vec<f32> = (0..n)
            .map(|_| rng.random_range(-range..=range) as f32 * 0.25)
            .collect();
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..classes)).collect();

        let mut distinct = values.clone();
        distinct.sort_by(f32::total_cmp);
        distinct.dedup();
        let oracle = brute_best(distinct.windows(2).filter_map(|w| {
            let m = (w[0] + w[1]) / 2.0;
            brute_gain(&values, &labels, classes as usize, |v| v <= m).map(|g| (m, g))
        }));
        let got = best_split_exact(&values, &labels, classes as usize, 0).map(|c| (c.threshold, c.gain));
        if !same(got, oracle) {
            failures.push(format!("exact node {node}: {got:?} vs {oracle:?}"));
        }

        let boundaries = sample_boundaries(&values, rng.random_range(2..=64), &mut rng);
        if boundaries.is_empty() {
            continue;
        }
        histogram_nodes += 1;
        let hist = build_histogram(&values, &labels, &boundaries, classes as usize);
        let oracle = brute_best(boundaries.iter().filter_map(|&b| {
            brute_gain(&values, &labels, classes as usize, |v| v < b).map(|g| (b, g))
        }));
        let got = best_split_histogram(&hist, 0).map(|c| (c.threshold, c.gain));
        if !same(got, oracle) {
            failures.push(format!("histogram node {node}: {got:?} vs {oracle:?}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("500 exact and {histogram_nodes} histogram nodes match brute force")
        } else {
            format!("{} mismatches, first: {}", failures.len(), failures[0])
        },
    )
}

fn same(a: Option<(f32, f64)>, b: Option<(f32, f64)>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => a.0 == b.0 && (a.1 - b.1).abs() <= 1e-9,
        _ => false,
    }
}

// 4 ------------------------------------------------------------------------

fn purity() -> Outcome {
    let ds: ColumnarDataset = generate_trunk(2000, 10, 4).unwrap();
    let distinct: HashSet<Vec<u32>> = (0..ds.n_samples())
        .map(|i| ds.row(i).iter().map(|v| v.to_bits()).collect())
        .collect();
    if distinct.len() != ds.n_samples() {
        return outcome(false, "generated rows are not distinct".into());
    }
    let config = TrainConfig {
        n_trees: 100,
        seed: 4,
        ..Default::default()
    };
    let forest = train_forest(&ds, &config).unwrap();
    let (mut leaves, mut impure) = (0, 0);
    for tree in &forest.trees {
        for node in tree.nodes() {
            if let DecisionNode::Leaf { class_counts, .. } = node {
                leaves += 1;
                if class_counts.iter().filter(|&&c| c > 0).count() > 1 {
                    impure += 1;
                }
            }
        }
    }
    outcome(
        impure == 0,
        format!("{impure} impure of {leaves} leaves in 100 unlimited-depth trees"),
    )
}

// 5 ------------------------------------------------------------------------

fn accuracy_parity() -> Outcome {
    let modes = [
        ("exact", SplitMode::ExactOnly, Binning::TwoLevel),
        ("hist", SplitMode::HistogramOnly, Binning::TwoLevel),
        ("dynamic-scalar", SplitMode::Dynamic, Binning::Scalar),
        ("dynamic-two-level", SplitMode::Dynamic, Binning::TwoLevel),
    ];
    let seeds = 5;
    // per_seed[s][m]: test accuracy of mode m on seed s.
    let per_seed: Vec<Vec<f64>> = (0..seeds)
        .map(|seed| {
            let ds: ColumnarDataset = generate_trunk(10_000, 10, 100 + seed as u64).unwrap();
            let (train, test) = ds.split_head(0.8).unwrap();
            modes
                .iter()
                .map(|&(_, split_mode, binning)| {
                    let config = TrainConfig {
                        n_trees: 100,
                        split_mode,
                        binning,
                        seed: seed as u64,
                        ..Default::default()
                    };
                    train_forest(&train, &config).unwrap().accuracy(&test).unwrap()
                })
                .collect()
        })
        .collect();
    let means: Vec<f64> = (0..modes.len())
        .map(|m| per_seed.iter().map(|row| row[m]).sum::<f64>() / seeds as f64)
        .collect();
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let mean_spread = spread(&means);
    let worst_seed = per_seed.iter().map(|row| spread(row)).fold(0.0, f64::max);
    let summary: Vec<String> = modes
        .iter()
        .zip(&means)
        .map(|((name, ..), m)| format!("{name} {:.2}%", 100.0 * m))
        .collect();
    outcome(
        mean_spread <= 0.01,
        format!(
            "mean accuracy over {seeds} seeds: {}; spread {:.2} pp (largest single-seed spread {:.2} pp)",
            summary.join(", "),
            100.0 * mean_spread,
            100.0 * worst_seed
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn crossover_sanity() -> Outcome {
    let units = |n: usize| Duration::from_nanos(n as u64);
    let stub = calibrate_crossover(
        |n| units(2 * n),
        |n| units(1000 + n),
        DEFAULT_N_MIN,
        DEFAULT_N_MAX,
        Duration::from_secs(1),
    )
    .map(|c| c.breakeven_n);
    let start = Instant::now();
    let real = calibrate_split_paths::<f32>(SplitSettings::default(), DEFAULT_N_MIN, DEFAULT_N_MAX, DEFAULT_BUDGET);
    let real_time = start.elapsed();
    let real_ok = real.as_ref().is_ok_and(|c| {
        c.is_measured_crossing() && (DEFAULT_N_MIN..=DEFAULT_N_MAX).contains(&c.breakeven_n)
    });
    let real_desc = match &real {
        Ok(c) => format!(
            "breakeven {} bracketed by n = {} (probes {}), measured crossing {}",
            c.breakeven_n,
            c.breakeven_n + c.probe_step,
            c.samples.len(),
            c.is_measured_crossing()
        ),
        Err(e) => format!("error: {e}"),
    };
    outcome(
        stub.as_ref().ok() == Some(&1000) && real_ok && real_time <= Duration::from_millis(200),
        format!(
            "stub breakeven {stub:?}; real probes: {real_desc} in {:.0} ms",
            real_time.as_secs_f64() * 1e3
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn dynamic_dominance() -> Outcome {
    let ds: ColumnarDataset = generate_trunk(100_000, 1024, 7).unwrap();
    let config = TrainConfig {
        n_trees: 20,
        seed: 7,
        ..Default::default()
    };
    let workers = config.worker_count();
    let modes = [BenchMode::Exact, BenchMode::Histogram, BenchMode::DynamicTwoLevel];
    let c = bench_mode_comparison(&ds, &config, &modes).unwrap();
    let exact = c.seconds(BenchMode::Exact);
    let hist = c.seconds(BenchMode::Histogram);
    let dynamic = c.seconds(BenchMode::DynamicTwoLevel);
    let speedup = exact / dynamic;
    let vs_best = dynamic / exact.min(hist);
    outcome(
        vs_best <= 1.05 && speedup >= 1.2,
        format!(
            "{workers} worker(s), breakeven {}: exact {exact:.2}s, hist {hist:.2}s, dynamic {dynamic:.2}s; \
             speedup over exact {speedup:.2}x, dynamic / best single mode {vs_best:.3}",
            c.breakeven
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let ds: ColumnarDataset = generate_trunk(6000, 20, 8).unwrap();
    let probe: ColumnarDataset = generate_trunk(1000, 20, 80).unwrap();
    // A fixed breakeven: calibration measures the machine and may differ per run.
    let config = |n_workers| TrainConfig {
        n_trees: 24,
        seed: 8,
        breakeven: Breakeven::Fixed(700),
        n_workers,
        ..Default::default()
    };
    let one = train_forest(&ds, &config(1)).unwrap();
    let eight = train_forest(&ds, &config(8)).unwrap();
    let same_trees = one.trees == eight.trees;
    let p1 = one.predict_dataset(&probe).unwrap();
    let p8 = eight.predict_dataset(&probe).unwrap();
    let same_predictions = p1 == p8;
    outcome(
        same_trees && same_predictions,
        format!(
            "1 vs 8 workers: trees identical {same_trees}, predictions on 1000 samples identical {same_predictions}"
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn model_round_trip() -> Outcome {
    let ds: ColumnarDataset = generate_trunk(4000, 16, 9).unwrap();
    let probe: ColumnarDataset = generate_trunk(1000, 16, 90).unwrap();
    let forest = train_forest(
        &ds,
        &TrainConfig {
            n_trees: 30,
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    save_model(&forest, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let before = forest.predict_dataset(&probe).unwrap();
    let after = loaded.predict_dataset(&probe).unwrap();
    let bytes = std::fs::metadata(&path).unwrap().len();
    outcome(
        before == after && loaded == forest,
        format!(
            "{} of 1000 predictions identical after save/load ({bytes} byte model)",
            before.iter().zip(&after).filter(|(a, b)| a == b).count()
        ),
    )
}
