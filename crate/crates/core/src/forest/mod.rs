//! Forest training, prediction and persistence.

mod config;
mod model;
mod tree;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Breakeven, TrainConfig, TreeSettings};
pub use model::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use tree::{train_tree, DecisionNode, Tree, TreeWorkspace};

use crate::calibrate::{calibrate_or_fallback, CrossoverCalibration, DEFAULT_BUDGET};
use crate::data::{bootstrap_indices, ColumnarDataset};
use crate::error::{Error, Result};
use crate::profile::{DepthProfiler, NoRecorder, PhaseProfiler, Recorder, TrainingProfile};
use crate::real::{Precision, Real};
use crate::rng::tree_rng;
use crate::split::{Binning, SplitMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub class_count: usize,
    pub n_features: usize,
    /// Original class identifier of each class id.
    pub label_names: Vec<String>,
    pub precision: Precision,
    /// Present when the breakeven was measured at training time.
    pub calibration: Option<CrossoverCalibration>,
    /// Breakeven actually used by dynamic mode.
    pub breakeven: usize,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: u32,
    /// Fraction of trees voting for each class; sums to 1.
    pub votes: Vec<f64>,
}

impl Forest {
    /// Majority vote over the trees, lowest class id on ties.
    pub fn predict<T: Real>(&self, sample: &[T]) -> Result<Prediction> {
        self.check_input::<T>(sample.len())?;
        let mut tally = vec![0u32; self.class_count];
        for tree in &self.trees {
            tally[tree.predict(sample) as usize] += 1;
        }
        let class = tally
            .iter()
            .enumerate()
            .fold((0usize, 0u32), |best, (c, &n)| if n > best.1 { (c, n) } else { best })
            .0 as u32;
        let n = self.trees.len() as f64;
        Ok(Prediction {
            class,
            votes: tally.iter().map(|&t| t as f64 / n).collect(),
        })
    }

    /// Predict every row of `dataset` in parallel.
    pub fn predict_dataset<T: Real>(&self, dataset: &ColumnarDataset<T>) -> Result<Vec<Prediction>> {
        self.predict_columns(dataset.columns())
    }

    pub fn predict_columns<T: Real>(&self, columns: &[Vec<T>]) -> Result<Vec<Prediction>> {
        self.check_input::<T>(columns.len())?;
        let n = columns.first().map_or(0, Vec::len);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let row: Vec<T> = columns.iter().map(|c| c[i]).collect();
                self.predict(&row)
            })
            .collect()
    }

    /// Fraction of rows whose predicted class equals the label.
    pub fn accuracy<T: Real>(&self, dataset: &ColumnarDataset<T>) -> Result<f64> {
        let preds = self.predict_dataset(dataset)?;
        let hits = preds
            .iter()
            .zip(dataset.labels())
            .filter(|(p, &l)| p.class == l)
            .count();
        Ok(hits as f64 / preds.len().max(1) as f64)
    }

    fn check_input<T: Real>(&self, n_features: usize) -> Result<()> {
        if n_features != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: n_features,
            });
        }
        if T::PRECISION != self.precision {
            return Err(Error::InvalidConfig(format!(
                "model was trained on {} values, input is {}",
                self.precision,
                T::PRECISION
            )));
        }
        Ok(())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.trees.is_empty() || self.class_count < 2 || self.label_names.len() != self.class_count {
            return Err(Error::Format("inconsistent forest header".into()));
        }
        let bad_feature = self
            .trees
            .iter()
            .filter_map(Tree::max_feature)
            .any(|f| f as usize >= self.n_features);
        if bad_feature {
            return Err(Error::Format("tree references a feature out of range".into()));
        }
        Ok(())
    }
}

/// Train a forest. Trees are trained in parallel on `config.n_workers`
/// threads; the result does not depend on the thread count.
pub fn train_forest<T: Real>(dataset: &ColumnarDataset<T>, config: &TrainConfig) -> Result<Forest> {
    train_forest_recorded::<T, NoRecorder>(dataset, config).map(|(f, _)| f)
}

/// Train while recording per-depth node timings, plus per-phase timings when
/// `PHASES` is set.
pub fn train_forest_profiled<T: Real, const PHASES: bool>(
    dataset: &ColumnarDataset<T>,
    config: &TrainConfig,
) -> Result<(Forest, TrainingProfile)> {
    if PHASES {
        train_forest_recorded::<T, PhaseProfiler>(dataset, config)
    } else {
        train_forest_recorded::<T, DepthProfiler>(dataset, config)
    }
}

/// Breakeven for `config`, running the calibration microbenchmark if needed.
pub fn resolve_breakeven<T: Real>(config: &TrainConfig) -> (usize, Option<CrossoverCalibration>) {
    match (config.split_mode, config.breakeven) {
        (_, Breakeven::Fixed(n)) => (n, None),
        (SplitMode::Dynamic, Breakeven::Auto) => {
            calibrate_or_fallback::<T>(config.split_settings(), DEFAULT_BUDGET)
        }
        // Unused outside dynamic mode.
        (_, Breakeven::Auto) => (crate::calibrate::FALLBACK_BREAKEVEN, None),
    }
}

fn train_forest_recorded<T: Real, Rec: Recorder>(
    dataset: &ColumnarDataset<T>,
    config: &TrainConfig,
) -> Result<(Forest, TrainingProfile)> {
    config.validate()?;
    if config.binning == Binning::TwoLevel
        && config.split_mode != SplitMode::ExactOnly
        && !config.two_level_supported()
    {
        log::warn!(
            "two-level binning is unavailable at {} bins; using binary search",
            config.bin_count
        );
    }
    let (breakeven, calibration) = resolve_breakeven::<T>(config);
    let settings = config.tree_settings(dataset.n_features(), breakeven)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let n = dataset.n_samples();
    let results: Vec<(Tree, TrainingProfile)> = pool.install(|| {
        (0..config.n_trees)
            .into_par_iter()
            .map_init(TreeWorkspace::<T>::new, |ws, i| {
                let mut rng = tree_rng(config.seed, i as u64);
                let active = bootstrap_indices(n, config.bootstrap_fraction, rng.next_u64())
                    .expect("fraction validated");
                let mut rec = Rec::default();
                let tree = tree::grow_tree(
                    dataset,
                    active.into_inner(),
                    &settings,
                    rng.next_u64(),
                    0,
                    ws,
                    &mut rec,
                );
                (tree, rec.into_profile())
            })
            .collect()
    });

    let mut profile = TrainingProfile::default();
    let mut trees = Vec::with_capacity(results.len());
    for (tree, p) in results {
        profile.merge(&p);
        trees.push(tree);
    }
    let forest = Forest {
        trees,
        class_count: dataset.class_count(),
        n_features: dataset.n_features(),
        label_names: dataset.label_names().to_vec(),
        precision: T::PRECISION,
        calibration,
        breakeven,
        config: config.clone(),
    };
    Ok((forest, profile))
}
