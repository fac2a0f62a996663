use serde::{Deserialize, Serialize};

use crate::data::DEFAULT_BOOTSTRAP_FRACTION;
use crate::error::{Error, Result};
use crate::projection::ProjectionConfig;
use crate::split::histogram::DEFAULT_BIN_COUNT;
use crate::split::{choose_method, Binning, SplitMethod, SplitMode, SplitSettings, TableLayout};

/// Node size above which dynamic mode switches to histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Breakeven {
    /// Measure with the startup microbenchmark.
    #[default]
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Breakeven {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Breakeven::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Breakeven::Fixed(n)),
            _ => Err(format!("breakeven must be `auto` or a positive integer, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub bin_count: usize,
    pub binning: Binning,
    pub split_mode: SplitMode,
    pub breakeven: Breakeven,
    pub bootstrap_fraction: f64,
    /// `None` grows every tree to purity.
    pub max_depth: Option<usize>,
    pub min_samples: usize,
    pub seed: u64,
    /// 0 uses every available core.
    pub n_workers: usize,
    pub max_split_retries: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 240,
            bin_count: DEFAULT_BIN_COUNT,
            binning: Binning::TwoLevel,
            split_mode: SplitMode::Dynamic,
            breakeven: Breakeven::Auto,
            bootstrap_fraction: DEFAULT_BOOTSTRAP_FRACTION,
            max_depth: None,
            min_samples: 2,
            seed: 0,
            n_workers: 0,
            max_split_retries: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if self.bin_count < 2 {
            return bad(format!("bin_count must be at least 2, got {}", self.bin_count));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return bad(format!(
                "bootstrap fraction {} not in (0, 1]",
                self.bootstrap_fraction
            ));
        }
        if self.breakeven == Breakeven::Fixed(0) {
            return bad("breakeven must be at least 1".into());
        }
        Ok(())
    }

    /// Whether histogram filling can use the two-level table at this bin count.
    pub fn two_level_supported(&self) -> bool {
        TableLayout::for_bin_count(self.bin_count).is_some()
    }

    pub fn split_settings(&self) -> SplitSettings {
        SplitSettings {
            bin_count: self.bin_count,
            binning: self.binning,
        }
    }

    pub fn worker_count(&self) -> usize {
        if self.n_workers > 0 {
            self.n_workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    pub(crate) fn tree_settings(&self, n_features: usize, breakeven: usize) -> Result<TreeSettings> {
        Ok(TreeSettings {
            split_mode: self.split_mode,
            breakeven,
            split: self.split_settings(),
            projection: ProjectionConfig::for_features(n_features)?,
            max_depth: self.max_depth,
            min_samples: self.min_samples,
            max_split_retries: self.max_split_retries,
        })
    }
}

/// Everything a single tree needs, with the breakeven resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSettings {
    pub split_mode: SplitMode,
    pub breakeven: usize,
    pub split: SplitSettings,
    pub projection: ProjectionConfig,
    pub max_depth: Option<usize>,
    pub min_samples: usize,
    pub max_split_retries: usize,
}

impl TreeSettings {
    pub fn new(config: &TrainConfig, n_features: usize, breakeven: usize) -> Result<Self> {
        config.validate()?;
        config.tree_settings(n_features, breakeven)
    }

    #[inline]
    pub fn method_for(&self, n_active: usize) -> SplitMethod {
        match self.split_mode {
            SplitMode::ExactOnly => SplitMethod::Exact,
            SplitMode::HistogramOnly => SplitMethod::Histogram,
            SplitMode::Dynamic => choose_method(n_active, self.breakeven),
        }
    }
}
