//! From-scratch regression trees and tree ensembles (gradient boosting, a
//! second-order regularized boosting variant, random forest) with k-fold
//! cross-validation, exhaustive grid search and gain-based importances.

mod cv;
mod dataset;
mod ensemble;
mod error;
mod eval;
mod learner;
pub mod persist;
mod tree;

pub use cv::{fold_indices, grid_combinations, grid_search, kfold_cv, CvReport, Grid, GridResult};
pub use dataset::{split_indices, train_test_split, Dataset, TARGET_NAMES};
pub use ensemble::{
    feature_importance, fit_gradient_boosting, fit_random_forest, BoostParams, BoostVariant, Ensemble, EnsembleKind,
    ForestParams,
};
pub use error::{MlError, Result};
pub use eval::{eval_metrics, EvalReport};
pub use learner::{BoostLearner, ForestLearner, Learner, Params, Regressor};
pub use tree::{fit_regression_tree, Node, Tree, TreeParams};
