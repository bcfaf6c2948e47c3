//! Random forests whose predictions are weighted sums of training labels.
//!
//! A fitted [`Forest`] keeps, in every leaf, the bootstrap count of each
//! training example that reached it. For a test object this yields a weight
//! per training example ([`forest_weights`]), and the forest prediction is
//! exactly the weighted sum of the training label rows
//! ([`predict_from_weights`]). The examples with non-zero weight therefore
//! explain the prediction without approximation.
//!
//! [`predict_top_k`] and [`predict_cumulative`] restrict a prediction to the
//! highest-weighted examples, trading a smaller explanation against
//! predictive performance, and [`harness`] measures that trade-off with
//! cross-validated sweeps.
//!
//! ```
//! use rf_explain::{datasets, fit, forest_weights, predict_top_k, HyperParams, Task};
//!
//! let data = datasets::synthetic_regression(200, 5, 0.1, 7).unwrap();
//! let forest = fit(&data, &HyperParams::new(Task::Regression).n_trees(20)).unwrap();
//! let weights = forest_weights(&forest, data.row(0));
//! let (prediction, explanation) = predict_top_k(&weights, data.labels(), 5).unwrap();
//! assert!(explanation.len() <= 5);
//! assert_eq!(explanation.recompute_prediction(), prediction);
//! ```

pub mod cli;
pub mod data;
pub mod datasets;
pub mod error;
pub mod explain;
pub mod forest;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod weights;

pub use data::{
    binarize_by_mean, equal_width_bin, kfold_split, load_csv, nested_subsample, Dataset, FoldPlan, LabelMatrix, Task,
};
pub use error::{Error, Result};
pub use explain::{predict_cumulative, predict_top_k, sorted_index, Explanation, ExplanationEntry, Selection};
pub use forest::{fit, predict_standard, tree_apply, Forest, HyperParams, Leaf, MaxFeatures, Prediction, TreeNode};
pub use harness::{feature_truncate, run_experiment, ExperimentConfig, ExperimentReport};
pub use metrics::{accuracy, auc, pearson_corr, rmse};
pub use model::TrainedModel;
pub use weights::{effective_count, forest_weights, predict_from_weights, tree_weights, WeightVector};
