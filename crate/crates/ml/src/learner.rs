//! Hyperparameter-driven fitting used by cross-validation and grid search.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};

use crate::ensemble::{fit_gradient_boosting, fit_random_forest, BoostParams, BoostVariant, Ensemble, ForestParams};
use crate::error::{MlError, Result};

/// Named hyperparameter values. Integer-valued keys must hold whole numbers.
pub type Params = BTreeMap<String, f64>;

pub trait Regressor {
    fn predict_row(&self, row: ArrayView1<f64>) -> f64;

    fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

impl Regressor for Ensemble {
    fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        Ensemble::predict_row(self, row)
    }
}

pub trait Learner: Sync {
    type Model: Regressor;

    fn fit(&self, params: &Params, x: ArrayView2<f64>, y: &[f64]) -> Result<Self::Model>;
}

fn count(key: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e12 {
        Ok(v as usize)
    } else {
        Err(MlError::InvalidArgument(format!(
            "`{key}` must be a nonnegative integer, got {v}"
        )))
    }
}

fn depth(key: &str, v: f64) -> Result<Option<usize>> {
    if v < 0.0 {
        Ok(None)
    } else {
        count(key, v).map(Some)
    }
}

/// Gradient boosting with per-call overrides of [`BoostParams`].
#[derive(Debug, Clone, Copy)]
pub struct BoostLearner {
    pub base: BoostParams,
}

impl BoostLearner {
    pub fn new(variant: BoostVariant) -> Self {
        Self {
            base: BoostParams {
                variant,
                ..BoostParams::default()
            },
        }
    }

    pub fn resolve(&self, params: &Params) -> Result<BoostParams> {
        let mut p = self.base;
        for (key, &v) in params {
            match key.as_str() {
                "n_rounds" => p.n_rounds = count(key, v)?,
                "learning_rate" => p.learning_rate = v,
                "max_depth" => p.max_depth = depth(key, v)?,
                "min_samples_leaf" => p.min_samples_leaf = count(key, v)?,
                "lambda" => p.lambda = v,
                "gamma" => p.gamma = v,
                _ => {
                    return Err(MlError::InvalidArgument(format!(
                        "unknown boosting hyperparameter `{key}`"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl Learner for BoostLearner {
    type Model = Ensemble;

    fn fit(&self, params: &Params, x: ArrayView2<f64>, y: &[f64]) -> Result<Ensemble> {
        fit_gradient_boosting(x, y, &self.resolve(params)?)
    }
}

/// Random forest with per-call overrides of [`ForestParams`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ForestLearner {
    pub base: ForestParams,
}

impl ForestLearner {
    pub fn resolve(&self, params: &Params) -> Result<ForestParams> {
        let mut p = self.base;
        for (key, &v) in params {
            match key.as_str() {
                "n_trees" => p.n_trees = count(key, v)?,
                "max_depth" => p.max_depth = depth(key, v)?,
                "min_samples_leaf" => p.min_samples_leaf = count(key, v)?,
                "feature_subsample" => p.feature_subsample = v,
                "bootstrap" => p.bootstrap = v != 0.0,
                "seed" => p.seed = count(key, v)? as u64,
                _ => {
                    return Err(MlError::InvalidArgument(format!(
                        "unknown forest hyperparameter `{key}`"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl Learner for ForestLearner {
    type Model = Ensemble;

    fn fit(&self, params: &Params, x: ArrayView2<f64>, y: &[f64]) -> Result<Ensemble> {
        fit_random_forest(x, y, &self.resolve(params)?)
    }
}
