//! Training instrumentation: per-depth node timings and per-phase split timings.
//!
//! Recording is compiled out unless a training entry point is instantiated
//! with a recording [`Recorder`]. Each tree accumulates its own timings, and
//! they are merged once training finishes.

use std::time::{Duration, Instant};

use crate::split::SplitMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    SampleProjection,
    ApplyProjection,
    BuildHistogram,
    EvaluateSplits,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::SampleProjection,
        Phase::ApplyProjection,
        Phase::BuildHistogram,
        Phase::EvaluateSplits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::SampleProjection => "sample_projection",
            Phase::ApplyProjection => "apply_projection",
            Phase::BuildHistogram => "build_histogram",
            Phase::EvaluateSplits => "evaluate_splits",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Depth buckets used when reporting phase timings.
pub const DEPTH_BUCKETS: [(usize, Option<usize>); 4] =
    [(0, Some(4)), (5, Some(9)), (10, Some(14)), (15, None)];

pub fn depth_bucket(depth: usize) -> usize {
    (depth / 5).min(3)
}

pub fn depth_bucket_label(bucket: usize) -> String {
    match DEPTH_BUCKETS[bucket] {
        (lo, Some(hi)) => format!("{lo}-{hi}"),
        (lo, None) => format!("{lo}+"),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MethodStats {
    pub time: Duration,
    pub nodes: u64,
    pub samples: u64,
}

impl MethodStats {
    fn merge(&mut self, other: &MethodStats) {
        self.time += other.time;
        self.nodes += other.nodes;
        self.samples += other.samples;
    }
}

/// Split-search time of every node that attempted a split, by depth and method.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DepthTiming {
    /// `levels[depth][0]` is exact, `[1]` histogram.
    levels: Vec<[MethodStats; 2]>,
}

fn method_slot(m: SplitMethod) -> usize {
    match m {
        SplitMethod::Exact => 0,
        SplitMethod::Histogram => 1,
    }
}

impl DepthTiming {
    pub fn record(&mut self, depth: usize, method: SplitMethod, n_active: usize, time: Duration) {
        if self.levels.len() <= depth {
            self.levels.resize(depth + 1, Default::default());
        }
        let s = &mut self.levels[depth][method_slot(method)];
        s.time += time;
        s.nodes += 1;
        s.samples += n_active as u64;
    }

    pub fn merge(&mut self, other: &DepthTiming) {
        if self.levels.len() < other.levels.len() {
            self.levels.resize(other.levels.len(), Default::default());
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            a[0].merge(&b[0]);
            a[1].merge(&b[1]);
        }
    }

    /// Number of depths with at least one recorded node.
    pub fn depth_count(&self) -> usize {
        self.levels.len()
    }

    pub fn stats(&self, depth: usize, method: SplitMethod) -> MethodStats {
        self.levels
            .get(depth)
            .map(|l| l[method_slot(method)])
            .unwrap_or_default()
    }

    /// Both methods combined.
    pub fn level(&self, depth: usize) -> MethodStats {
        let mut s = self.stats(depth, SplitMethod::Exact);
        s.merge(&self.stats(depth, SplitMethod::Histogram));
        s
    }

    pub fn total(&self) -> Duration {
        (0..self.depth_count()).map(|d| self.level(d).time).sum()
    }
}

/// Time per split phase and depth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTiming {
    levels: Vec<[Duration; 4]>,
}

impl PhaseTiming {
    pub fn record(&mut self, phase: Phase, depth: usize, time: Duration) {
        if self.levels.len() <= depth {
            self.levels.resize(depth + 1, Default::default());
        }
        self.levels[depth][phase.slot()] += time;
    }

    pub fn merge(&mut self, other: &PhaseTiming) {
        if self.levels.len() < other.levels.len() {
            self.levels.resize(other.levels.len(), Default::default());
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn at(&self, phase: Phase, depth: usize) -> Duration {
        self.levels
            .get(depth)
            .map(|l| l[phase.slot()])
            .unwrap_or_default()
    }

    pub fn bucket(&self, phase: Phase, bucket: usize) -> Duration {
        (0..self.levels.len())
            .filter(|&d| depth_bucket(d) == bucket)
            .map(|d| self.at(phase, d))
            .sum()
    }

    /// One phase summed over every depth.
    pub fn total_of(&self, phase: Phase) -> Duration {
        self.levels.iter().map(|l| l[phase.slot()]).sum()
    }

    pub fn total(&self) -> Duration {
        self.levels.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingProfile {
    pub depth: DepthTiming,
    pub phases: PhaseTiming,
}

impl TrainingProfile {
    pub fn merge(&mut self, other: &TrainingProfile) {
        self.depth.merge(&other.depth);
        self.phases.merge(&other.phases);
    }
}

/// Hooks the trainer calls. The associated constants let the no-op recorder
/// compile every timer away.
pub trait Recorder: Default + Send {
    const NODES: bool;
    const PHASES: bool;

    fn node(&mut self, _depth: usize, _method: SplitMethod, _n_active: usize, _time: Duration) {}
    fn phase(&mut self, _phase: Phase, _depth: usize, _time: Duration) {}
    fn into_profile(self) -> TrainingProfile {
        TrainingProfile::default()
    }

    #[inline(always)]
    fn phase_start() -> Option<Instant> {
        Self::PHASES.then(Instant::now)
    }

    #[inline(always)]
    fn phase_end(&mut self, phase: Phase, depth: usize, start: Option<Instant>) {
        if let Some(t) = start {
            self.phase(phase, depth, t.elapsed());
        }
    }
}

#[derive(Debug, Default)]
pub struct NoRecorder;

impl Recorder for NoRecorder {
    const NODES: bool = false;
    const PHASES: bool = false;
}

/// Records node timings, and phase timings too when `PHASES` is set.
#[derive(Debug, Default)]
pub struct Profiler<const PHASES: bool> {
    profile: TrainingProfile,
}

impl<const P: bool> Recorder for Profiler<P> {
    const NODES: bool = true;
    const PHASES: bool = P;

    fn node(&mut self, depth: usize, method: SplitMethod, n_active: usize, time: Duration) {
        self.profile.depth.record(depth, method, n_active, time);
    }

    fn phase(&mut self, phase: Phase, depth: usize, time: Duration) {
        self.profile.phases.record(phase, depth, time);
    }

    fn into_profile(self) -> TrainingProfile {
        self.profile
    }
}

pub type DepthProfiler = Profiler<false>;
pub type PhaseProfiler = Profiler<true>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        assert_eq!(depth_bucket(0), 0);
        assert_eq!(depth_bucket(4), 0);
        assert_eq!(depth_bucket(5), 1);
        assert_eq!(depth_bucket(14), 2);
        assert_eq!(depth_bucket(40), 3);
        assert_eq!(depth_bucket_label(3), "15+");
        assert_eq!(depth_bucket_label(1), "5-9");
    }

    #[test]
    fn merge_adds_levels() {
        let mut a = DepthTiming::default();
        a.record(0, SplitMethod::Histogram, 100, Duration::from_millis(2));
        let mut b = DepthTiming::default();
        b.record(2, SplitMethod::Exact, 10, Duration::from_millis(1));
        b.record(0, SplitMethod::Histogram, 50, Duration::from_millis(1));
        a.merge(&b);
        assert_eq!(a.depth_count(), 3);
        assert_eq!(a.stats(0, SplitMethod::Histogram).nodes, 2);
        assert_eq!(a.stats(0, SplitMethod::Histogram).samples, 150);
        assert_eq!(a.total(), Duration::from_millis(4));
    }
}
