//! Instrumented training runs: per-depth timings, per-phase timings and
//! end-to-end mode comparisons, all emitted as CSV.
//!
//! CSV schemas:
//!
//! - depth profile: `depth,mode,seconds,nodes,samples`
//! - phase profile: `phase,depth_bucket,seconds`
//! - mode comparison: `mode,seconds,normalized`

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use soforest::forest::{resolve_breakeven, train_forest_profiled};
use soforest::profile::{depth_bucket_label, DepthTiming, Phase, PhaseTiming, DEPTH_BUCKETS};
use soforest::split::{Binning, SplitMethod};
use soforest::{train_forest, Breakeven, ColumnarDataset, Real, Result, SplitMode, TrainConfig};

/// Default desk-scale problem size.
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_FEATURES: usize = 256;

const PROFILE_MODES: [SplitMode; 3] = [SplitMode::ExactOnly, SplitMode::HistogramOnly, SplitMode::Dynamic];

/// `config` with the breakeven resolved once, so repeated runs share it.
pub fn with_fixed_breakeven<T: Real>(config: &TrainConfig) -> TrainConfig {
    let (b, _) = resolve_breakeven::<T>(&TrainConfig {
        split_mode: SplitMode::Dynamic,
        ..config.clone()
    });
    TrainConfig {
        breakeven: Breakeven::Fixed(b),
        ..config.clone()
    }
}

#[derive(Debug, Clone)]
pub struct ModeDepthTiming {
    pub mode: SplitMode,
    pub timing: DepthTiming,
    /// Wall time of the whole training run.
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct DepthProfile {
    pub breakeven: usize,
    pub modes: Vec<ModeDepthTiming>,
}

impl DepthProfile {
    pub fn mode(&self, mode: SplitMode) -> &ModeDepthTiming {
        self.modes.iter().find(|m| m.mode == mode).expect("mode profiled")
    }

    /// Deepest level reached by any mode, plus one.
    pub fn depth_count(&self) -> usize {
        self.modes.iter().map(|m| m.timing.depth_count()).max().unwrap_or(0)
    }

    /// One row per depth and mode; depths a mode never reached report zeros.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,mode,seconds,nodes,samples\n");
        for d in 0..self.depth_count() {
            for m in &self.modes {
                let s = m.timing.level(d);
                writeln!(
                    out,
                    "{d},{},{:.9},{},{}",
                    m.mode,
                    s.time.as_secs_f64(),
                    s.nodes,
                    s.samples
                )
                .unwrap();
            }
        }
        out
    }

    /// Fraction of a mode's split time spent at depths greater than `depth`.
    pub fn share_beyond(&self, mode: SplitMode, depth: usize) -> f64 {
        let t = &self.mode(mode).timing;
        let total = t.total().as_secs_f64();
        if total == 0.0 {
            return 0.0;
        }
        let deep: f64 = (depth + 1..t.depth_count())
            .map(|d| t.level(d).time.as_secs_f64())
            .sum();
        deep / total
    }
}

/// Train under exact, histogram and dynamic splitting with per-depth timers.
pub fn bench_depth_profile<T: Real>(dataset: &ColumnarDataset<T>, config: &TrainConfig) -> Result<DepthProfile> {
    let config = with_fixed_breakeven::<T>(config);
    let mut modes = Vec::new();
    for mode in PROFILE_MODES {
        let cfg = TrainConfig {
            split_mode: mode,
            ..config.clone()
        };
        let start = Instant::now();
        let (_, profile) = train_forest_profiled::<T, false>(dataset, &cfg)?;
        modes.push(ModeDepthTiming {
            mode,
            timing: profile.depth,
            total: start.elapsed(),
        });
    }
    let Breakeven::Fixed(breakeven) = config.breakeven else {
        unreachable!()
    };
    Ok(DepthProfile { breakeven, modes })
}

#[derive(Debug, Clone)]
pub struct PhaseProfile {
    pub binning: Binning,
    pub phases: PhaseTiming,
    /// Split-search time of all nodes, the sum the phases partition.
    pub split_time: Duration,
    /// Histogram-built nodes with at least this many samples, by phase.
    pub large_nodes: LargeNodeTiming,
}

/// Phase times restricted to depths whose nodes averaged at least
/// [`LARGE_NODE`] active samples.
#[derive(Debug, Clone, Default)]
pub struct LargeNodeTiming {
    pub depths: Vec<usize>,
    pub build_histogram: Duration,
}

pub const LARGE_NODE: u64 = 100_000;

impl PhaseProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,depth_bucket,seconds\n");
        for phase in Phase::ALL {
            for b in 0..DEPTH_BUCKETS.len() {
                writeln!(
                    out,
                    "{},{},{:.9}",
                    phase.name(),
                    depth_bucket_label(b),
                    self.phases.bucket(phase, b).as_secs_f64()
                )
                .unwrap();
            }
        }
        out
    }

    /// The phase with the most time in depth bucket `bucket`.
    pub fn dominant_phase(&self, bucket: usize) -> Phase {
        Phase::ALL
            .into_iter()
            .max_by_key(|&p| self.phases.bucket(p, bucket))
            .unwrap()
    }
}

/// Histogram-only training with per-phase timers, using `config.binning`.
pub fn bench_phase_profile<T: Real>(dataset: &ColumnarDataset<T>, config: &TrainConfig) -> Result<PhaseProfile> {
    let cfg = TrainConfig {
        split_mode: SplitMode::HistogramOnly,
        ..config.clone()
    };
    let (_, profile) = train_forest_profiled::<T, true>(dataset, &cfg)?;
    let depth = &profile.depth;
    let depths: Vec<usize> = (0..depth.depth_count())
        .filter(|&d| {
            let s = depth.stats(d, SplitMethod::Histogram);
            s.nodes > 0 && s.samples / s.nodes >= LARGE_NODE
        })
        .collect();
    let build_histogram = depths
        .iter()
        .map(|&d| profile.phases.at(Phase::BuildHistogram, d))
        .sum();
    Ok(PhaseProfile {
        binning: cfg.binning,
        split_time: depth.total(),
        phases: profile.phases,
        large_nodes: LargeNodeTiming {
            depths,
            build_histogram,
        },
    })
}

/// Phase profiles under scalar and two-level binning, in that order.
pub fn bench_binning_comparison<T: Real>(
    dataset: &ColumnarDataset<T>,
    config: &TrainConfig,
) -> Result<(PhaseProfile, PhaseProfile)> {
    let run = |binning| {
        bench_phase_profile(
            dataset,
            &TrainConfig {
                binning,
                ..config.clone()
            },
        )
    };
    Ok((run(Binning::Scalar)?, run(Binning::TwoLevel)?))
}

/// End-to-end configurations compared by [`bench_mode_comparison`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Exact,
    Histogram,
    DynamicScalar,
    DynamicTwoLevel,
}

impl BenchMode {
    pub const ALL: [BenchMode; 4] = [
        BenchMode::Exact,
        BenchMode::Histogram,
        BenchMode::DynamicScalar,
        BenchMode::DynamicTwoLevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Exact => "exact",
            BenchMode::Histogram => "hist",
            BenchMode::DynamicScalar => "dynamic-scalar",
            BenchMode::DynamicTwoLevel => "dynamic-two-level",
        }
    }

    /// `base` adjusted to this mode.
    pub fn config(self, base: &TrainConfig) -> TrainConfig {
        let (split_mode, binning) = match self {
            BenchMode::Exact => (SplitMode::ExactOnly, base.binning),
            BenchMode::Histogram => (SplitMode::HistogramOnly, base.binning),
            BenchMode::DynamicScalar => (SplitMode::Dynamic, Binning::Scalar),
            BenchMode::DynamicTwoLevel => (SplitMode::Dynamic, Binning::TwoLevel),
        };
        TrainConfig {
            split_mode,
            binning,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeComparison {
    pub breakeven: usize,
    pub rows: Vec<(BenchMode, Duration)>,
}

impl ModeComparison {
    pub fn seconds(&self, mode: BenchMode) -> f64 {
        self.rows
            .iter()
            .find(|r| r.0 == mode)
            .map(|r| r.1.as_secs_f64())
            .expect("mode measured")
    }

    /// Time relative to exact-only splitting.
    pub fn normalized(&self, mode: BenchMode) -> f64 {
        self.seconds(mode) / self.seconds(BenchMode::Exact)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,seconds,normalized\n");
        for &(mode, _) in &self.rows {
            writeln!(
                out,
                "{},{:.6},{:.6}",
                mode.name(),
                self.seconds(mode),
                self.normalized(mode)
            )
            .unwrap();
        }
        out
    }
}

/// Uninstrumented wall time of each mode in `modes`. Dynamic modes share one
/// breakeven, measured before any timing starts.
pub fn bench_mode_comparison<T: Real>(
    dataset: &ColumnarDataset<T>,
    config: &TrainConfig,
    modes: &[BenchMode],
) -> Result<ModeComparison> {
    let config = with_fixed_breakeven::<T>(config);
    let mut rows = Vec::new();
    for &mode in modes {
        let cfg = mode.config(&config);
        let start = Instant::now();
        std::hint::black_box(train_forest(dataset, &cfg)?);
        rows.push((mode, start.elapsed()));
    }
    let Breakeven::Fixed(breakeven) = config.breakeven else {
        unreachable!()
    };
    Ok(ModeComparison { breakeven, rows })
}
