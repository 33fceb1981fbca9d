use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};
use crate::tree::{check_xy, grow, FeatureSampler, SplitRule, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Gbt,
    GbtRegularized,
    RandomForest,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Gbt => "gbt",
            EnsembleKind::GbtRegularized => "gbt_regularized",
            EnsembleKind::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub trees: Vec<Tree>,
    /// Shrinkage applied to every tree (1 for forests).
    pub learning_rate: f64,
    /// Constant term (0 for forests).
    pub base_score: f64,
    pub hyperparameters: BTreeMap<String, f64>,
    /// Split gain per feature summed over all trees.
    pub feature_gain: Vec<f64>,
}

impl Ensemble {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        match self.kind {
            EnsembleKind::RandomForest => sum / self.trees.len() as f64,
            _ => self.base_score + self.learning_rate * sum,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn n_features(&self) -> usize {
        self.feature_gain.len()
    }
}

/// Normalized total split gain per feature; all zeros when no tree splits.
pub fn feature_importance(m: &Ensemble) -> Vec<f64> {
    let total: f64 = m.feature_gain.iter().sum();
    if total > 0.0 {
        m.feature_gain.iter().map(|g| g / total).collect()
    } else {
        vec![0.0; m.feature_gain.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoostVariant {
    /// Trees fit to residuals by variance reduction; leaves are residual means.
    Plain,
    /// Second-order leaf weights and gains with L2 penalty `lambda` and
    /// split penalty `gamma`.
    Regularized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub variant: BoostVariant,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            variant: BoostVariant::Regularized,
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: Some(3),
            min_samples_leaf: 1,
            lambda: 1.0,
            gamma: 0.0,
        }
    }
}

impl BoostParams {
    fn record(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("n_rounds".into(), self.n_rounds as f64);
        m.insert("learning_rate".into(), self.learning_rate);
        m.insert("max_depth".into(), self.max_depth.map_or(-1.0, |d| d as f64));
        m.insert("min_samples_leaf".into(), self.min_samples_leaf as f64);
        if self.variant == BoostVariant::Regularized {
            m.insert("lambda".into(), self.lambda);
            m.insert("gamma".into(), self.gamma);
        }
        m
    }
}

/// Squared-error gradient boosting from a mean base score.
pub fn fit_gradient_boosting(x: ArrayView2<f64>, y: &[f64], params: &BoostParams) -> Result<Ensemble> {
    check_xy(x, y)?;
    if params.n_rounds == 0 {
        return Err(MlError::InvalidArgument("n_rounds must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(MlError::InvalidArgument(format!(
            "learning rate {} outside (0, 1]",
            params.learning_rate
        )));
    }
    if params.min_samples_leaf == 0 {
        return Err(MlError::InvalidArgument("min_samples_leaf must be at least 1".into()));
    }
    if !(params.lambda >= 0.0) || !(params.gamma >= 0.0) {
        return Err(MlError::InvalidArgument("lambda and gamma must be nonnegative".into()));
    }
    let (kind, rule) = match params.variant {
        BoostVariant::Plain => (EnsembleKind::Gbt, SplitRule::Variance),
        BoostVariant::Regularized => (
            EnsembleKind::GbtRegularized,
            SplitRule::Regularized {
                lambda: params.lambda,
                gamma: params.gamma,
            },
        ),
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };
    let n = y.len();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let rows: Vec<usize> = (0..n).collect();
    let mut prediction = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut feature_gain = vec![0.0; x.ncols()];
    for _ in 0..params.n_rounds {
        for ((r, &t), &p) in residual.iter_mut().zip(y).zip(&prediction) {
            *r = t - p;
        }
        let tree = grow(x, &residual, &rows, tree_params, rule, None);
        for (p, row) in prediction.iter_mut().zip(x.rows()) {
            *p += params.learning_rate * tree.predict_row(row);
        }
        for (g, t) in feature_gain.iter_mut().zip(&tree.feature_gain) {
            *g += t;
        }
        trees.push(tree);
    }
    Ok(Ensemble {
        kind,
        trees,
        learning_rate: params.learning_rate,
        base_score,
        hyperparameters: params.record(),
        feature_gain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features drawn for each split, in (0, 1].
    pub feature_subsample: f64,
    /// Draw `n` rows with replacement per tree; otherwise every tree sees all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: 1.0 / 3.0,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Bagged CART forest. Tree `t` draws from stream `t` of a ChaCha8 generator
/// keyed by the seed, so trees can be grown in any order or in parallel.
pub fn fit_random_forest(x: ArrayView2<f64>, y: &[f64], params: &ForestParams) -> Result<Ensemble> {
    check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(MlError::InvalidArgument("n_trees must be at least 1".into()));
    }
    if !(params.feature_subsample > 0.0 && params.feature_subsample <= 1.0) {
        return Err(MlError::InvalidArgument(format!(
            "feature_subsample {} outside (0, 1]",
            params.feature_subsample
        )));
    }
    if params.min_samples_leaf == 0 {
        return Err(MlError::InvalidArgument("min_samples_leaf must be at least 1".into()));
    }
    let n = y.len();
    let p = x.ncols();
    let mtry = ((params.feature_subsample * p as f64).round() as usize).clamp(1, p.max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let sampler = FeatureSampler { rng: &mut rng, mtry };
            grow(x, y, &rows, tree_params, SplitRule::Variance, Some(sampler))
        })
        .collect();
    let mut feature_gain = vec![0.0; p];
    for tree in &trees {
        for (g, t) in feature_gain.iter_mut().zip(&tree.feature_gain) {
            *g += t;
        }
    }
    let mut hyperparameters = BTreeMap::new();
    hyperparameters.insert("n_trees".into(), params.n_trees as f64);
    hyperparameters.insert("max_depth".into(), params.max_depth.map_or(-1.0, |d| d as f64));
    hyperparameters.insert("min_samples_leaf".into(), params.min_samples_leaf as f64);
    hyperparameters.insert("feature_subsample".into(), params.feature_subsample);
    hyperparameters.insert("bootstrap".into(), if params.bootstrap { 1.0 } else { 0.0 });
    hyperparameters.insert("seed".into(), params.seed as f64);
    Ok(Ensemble {
        kind: EnsembleKind::RandomForest,
        trees,
        learning_rate: 1.0,
        base_score: 0.0,
        hyperparameters,
        feature_gain,
    })
}
