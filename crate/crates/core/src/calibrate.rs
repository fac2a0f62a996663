//! Startup microbenchmark locating the node size where histogram split
//! search starts beating sort-based search on this machine.
//!
//! The search assumes a single crossing: below it sorting is faster, above it
//! histograms are. With several crossings it returns one of them.

use std::cell::RefCell;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::StreamRng;
use crate::split::exact::{best_split_exact_with, ExactScratch};
use crate::split::histogram::{
    best_split_histogram_with, build_histogram_into, sample_boundaries_into, Histogram,
    HistogramScratch,
};
use crate::split::SplitSettings;

pub const DEFAULT_BUDGET: Duration = Duration::from_millis(100);
pub const DEFAULT_N_MIN: usize = 64;
pub const DEFAULT_N_MAX: usize = 65_536;
/// Used when calibration cannot run.
pub const FALLBACK_BREAKEVEN: usize = 1024;
const MAX_REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossoverSample {
    pub n: usize,
    pub exact_time: Duration,
    pub histogram_time: Duration,
}

impl CrossoverSample {
    pub fn histogram_wins(&self) -> bool {
        self.histogram_time < self.exact_time
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossoverCalibration {
    /// Largest measured node size at which histograms did not win. Nodes with
    /// more active samples than this use histograms.
    pub breakeven_n: usize,
    /// Distance to the nearest measured size above `breakeven_n` where
    /// histograms won; 0 when no such bracket exists.
    pub probe_step: usize,
    pub samples: Vec<CrossoverSample>,
    pub budget: Duration,
}

impl CrossoverCalibration {
    pub fn sample_at(&self, n: usize) -> Option<&CrossoverSample> {
        self.samples.iter().find(|s| s.n == n)
    }

    /// Whether the measured samples bracket `breakeven_n`: histograms lose at
    /// `breakeven_n` and win at `breakeven_n + probe_step`. Degenerate
    /// outcomes (histograms always or never winning) have no bracket.
    pub fn is_measured_crossing(&self) -> bool {
        if self.probe_step == 0 {
            return false;
        }
        match (
            self.sample_at(self.breakeven_n),
            self.sample_at(self.breakeven_n + self.probe_step),
        ) {
            (Some(lo), Some(hi)) => !lo.histogram_wins() && hi.histogram_wins(),
            _ => false,
        }
    }

    /// Samples as `n,exact_seconds,histogram_seconds` CSV, sorted by `n`.
    pub fn samples_csv(&self) -> String {
        let mut rows = self.samples.clone();
        rows.sort_by_key(|s| s.n);
        let mut out = String::from("n,exact_seconds,histogram_seconds\n");
        for s in rows {
            out.push_str(&format!(
                "{},{:.9},{:.9}\n",
                s.n,
                s.exact_time.as_secs_f64(),
                s.histogram_time.as_secs_f64()
            ));
        }
        out
    }
}

/// Binary search over `[n_min, n_max]` for the node size where
/// `time_histogram(n) < time_exact(n)` first holds.
///
/// Histograms winning already at `n_min` gives `n_min`; never winning by
/// `n_max` gives `n_max + 1`. Otherwise the result is the largest measured
/// size where histograms lose, adjacent to a measured size where they win.
/// The search halves the bracket geometrically while it spans more than a
/// factor of four, then arithmetically, and stops early when `budget` runs out.
pub fn calibrate_crossover<E, H>(
    mut time_exact: E,
    mut time_histogram: H,
    n_min: usize,
    n_max: usize,
    budget: Duration,
) -> Result<CrossoverCalibration>
where
    E: FnMut(usize) -> Duration,
    H: FnMut(usize) -> Duration,
{
    if n_min == 0 || n_min >= n_max {
        return Err(Error::Calibration(format!(
            "need 0 < n_min < n_max, got [{n_min}, {n_max}]"
        )));
    }
    let start = Instant::now();
    let exhausted = || Error::Calibration("budget exhausted before any probe completed".into());
    if budget.is_zero() {
        return Err(exhausted());
    }
    let mut samples = Vec::new();
    let mut measure = |n: usize| {
        let s = CrossoverSample {
            n,
            exact_time: time_exact(n),
            histogram_time: time_histogram(n),
        };
        samples.push(s);
        s.histogram_wins()
    };
    let finish = |breakeven_n, probe_step, samples| CrossoverCalibration {
        breakeven_n,
        probe_step,
        samples,
        budget,
    };

    if measure(n_min) {
        return Ok(finish(n_min, 0, samples));
    }
    if start.elapsed() >= budget {
        return Err(exhausted());
    }
    if !measure(n_max) {
        return Ok(finish(n_max + 1, 0, samples));
    }
    let (mut lo, mut hi) = (n_min, n_max);
    while hi - lo > 1 && start.elapsed() < budget {
        let mid = if hi / lo > 4 {
            ((lo as f64) * (hi as f64)).sqrt() as usize
        } else {
            lo + (hi - lo) / 2
        }
        .clamp(lo + 1, hi - 1);
        if measure(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(finish(lo, hi - lo, samples))
}

/// Times the real split paths on a synthetic two-class Gaussian projection.
#[derive(Debug)]
pub struct SplitProbe<T> {
    values: Vec<T>,
    labels: Vec<u32>,
    settings: SplitSettings,
    deadline: Instant,
    rng: StreamRng,
    exact: ExactScratch<T>,
    hist: Histogram<T>,
    hist_scratch: HistogramScratch<T>,
    sample: Vec<T>,
    boundaries: Vec<T>,
    left: Vec<u32>,
}

impl<T: Real> SplitProbe<T> {
    pub fn new(settings: SplitSettings, n_max: usize, deadline: Instant, seed: u64) -> Self {
        let mut rng = StreamRng::seed_from_u64(seed);
        let labels: Vec<u32> = (0..n_max).map(|i| (i % 2) as u32).collect();
        let values = labels
            .iter()
            .map(|&c| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::from_f64(z + if c == 0 { 0.5 } else { -0.5 })
            })
            .collect();
        SplitProbe {
            values,
            labels,
            settings,
            deadline,
            rng,
            exact: ExactScratch::default(),
            hist: Histogram::default(),
            hist_scratch: HistogramScratch::default(),
            sample: Vec::new(),
            boundaries: Vec::new(),
            left: Vec::new(),
        }
    }

    /// Median of up to five runs of sort-based search on the first `n` values.
    pub fn time_exact(&mut self, n: usize) -> Duration {
        let n = n.min(self.values.len());
        self.median_time(|p| {
            std::hint::black_box(best_split_exact_with(
                &p.values[..n],
                &p.labels[..n],
                2,
                0,
                &mut p.exact,
            ));
        })
    }

    /// Median of up to five runs of the histogram path: boundary sampling,
    /// filling and boundary evaluation.
    pub fn time_histogram(&mut self, n: usize) -> Duration {
        let n = n.min(self.values.len());
        self.median_time(|p| {
            sample_boundaries_into(
                &p.values[..n],
                p.settings.bin_count,
                &mut p.rng,
                &mut p.sample,
                &mut p.boundaries,
            );
            if !p.boundaries.is_empty() {
                build_histogram_into(
                    &mut p.hist,
                    &mut p.hist_scratch,
                    &p.values[..n],
                    &p.labels[..n],
                    &p.boundaries,
                    2,
                    p.settings.binning,
                );
                std::hint::black_box(best_split_histogram_with(
                    &p.hist,
                    0,
                    &mut p.exact.xlogx,
                    &mut p.left,
                ));
            }
        })
    }

    fn median_time(&mut self, mut run: impl FnMut(&mut Self)) -> Duration {
        let mut times = Vec::with_capacity(MAX_REPETITIONS);
        while times.len() < MAX_REPETITIONS {
            let t = Instant::now();
            run(self);
            times.push(t.elapsed());
            // Shrink the repetition count once the budget is spent.
            if Instant::now() >= self.deadline {
                break;
            }
        }
        times.sort_unstable();
        times[times.len() / 2]
    }
}

/// Calibrate with the real split paths over the default search range.
pub fn calibrate_split_paths<T: Real>(
    settings: SplitSettings,
    n_min: usize,
    n_max: usize,
    budget: Duration,
) -> Result<CrossoverCalibration> {
    let deadline = Instant::now() + budget;
    let probe = RefCell::new(SplitProbe::<T>::new(settings, n_max, deadline, 0x5EED));
    calibrate_crossover(
        |n| probe.borrow_mut().time_exact(n),
        |n| probe.borrow_mut().time_histogram(n),
        n_min,
        n_max,
        deadline.saturating_duration_since(Instant::now()),
    )
}

/// Calibrated breakeven, or [`FALLBACK_BREAKEVEN`] with a warning when
/// calibration fails.
pub fn calibrate_or_fallback<T: Real>(
    settings: SplitSettings,
    budget: Duration,
) -> (usize, Option<CrossoverCalibration>) {
    match calibrate_split_paths::<T>(settings, DEFAULT_N_MIN, DEFAULT_N_MAX, budget) {
        Ok(c) => (c.breakeven_n, Some(c)),
        Err(e) => {
            log::warn!("{e}; using default breakeven {FALLBACK_BREAKEVEN}");
            (FALLBACK_BREAKEVEN, None)
        }
    }
}
