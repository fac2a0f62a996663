pub mod calibrate;
pub mod data;
pub mod error;
pub mod forest;
pub mod profile;
pub mod projection;
pub mod real;
pub mod rng;
pub mod split;

pub use data::{bootstrap_sample, generate_trunk, load_csv, load_libsvm, ColumnarDataset, SampleIndexSet};
pub use error::{Error, Result};
pub use forest::{load_model, save_model, train_forest, Breakeven, Forest, Prediction, TrainConfig};
pub use projection::{apply_projection, sample_projection_matrix, ProjectionMatrix};
pub use real::{Precision, Real};
pub use split::{best_split_exact, best_split_histogram, build_histogram, SplitCandidate, SplitMode};
