use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MlError, Result};
use crate::eval::{eval_metrics, EvalReport};
use crate::learner::{Learner, Params, Regressor};

/// Candidate values per hyperparameter name.
pub type Grid = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    /// Fold-averaged MAE, MAPE and R²; `n` is the total row count.
    pub mean: EvalReport,
    /// Prediction for each row from the model that did not see it.
    pub out_of_fold: Vec<f64>,
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds; the first `n % k`
/// folds hold one extra row.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(MlError::InvalidArgument(format!("k = {k}: need at least two folds")));
    }
    if k > n {
        return Err(MlError::InvalidArgument(format!("k = {k} exceeds {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

pub fn kfold_cv<L: Learner>(
    x: ArrayView2<f64>,
    y: &[f64],
    k: usize,
    params: &Params,
    learner: &L,
    seed: u64,
) -> Result<CvReport> {
    if x.nrows() != y.len() {
        return Err(MlError::InvalidArgument(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    let n = y.len();
    let folds = fold_indices(n, k, seed)?;
    let mut out_of_fold = vec![0.0; n];
    let mut reports = Vec::with_capacity(k);
    let mut in_test = vec![false; n];
    for test in &folds {
        in_test.iter_mut().for_each(|v| *v = false);
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let x_train = x.select(Axis(0), &train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = learner.fit(params, x_train.view(), &y_train)?;
        let x_test = x.select(Axis(0), test);
        let pred = model.predict(x_test.view());
        let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        reports.push(eval_metrics(&truth, &pred)?);
        for (&i, p) in test.iter().zip(pred) {
            out_of_fold[i] = p;
        }
    }
    let kf = k as f64;
    let mean = EvalReport {
        mae: reports.iter().map(|r| r.mae).sum::<f64>() / kf,
        mape: reports.iter().map(|r| r.mape).sum::<f64>() / kf,
        r2: reports.iter().map(|r| r.r2).sum::<f64>() / kf,
        n,
        mape_excluded: reports.iter().map(|r| r.mape_excluded).sum(),
    };
    Ok(CvReport {
        folds: reports,
        mean,
        out_of_fold,
    })
}

/// Cartesian product in odometer order: keys ascending, the last key varying
/// fastest, values in the order given.
pub fn grid_combinations(grid: &Grid) -> Result<Vec<Params>> {
    if grid.is_empty() {
        return Err(MlError::InvalidArgument("empty hyperparameter grid".into()));
    }
    if let Some((key, _)) = grid.iter().find(|(_, v)| v.is_empty()) {
        return Err(MlError::InvalidArgument(format!("no values for `{key}`")));
    }
    let mut combos = vec![Params::new()];
    for (key, values) in grid {
        combos = combos
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |&v| {
                    let mut p = base.clone();
                    p.insert(key.clone(), v);
                    p
                })
            })
            .collect();
    }
    Ok(combos)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: Params,
    pub report: CvReport,
    /// Every combination with its mean CV MAE, in grid order.
    pub table: Vec<(Params, f64)>,
}

/// Exhaustive search minimizing mean k-fold MAE; the earliest combination in
/// grid order wins ties. Cells are evaluated in parallel and reduced in order.
pub fn grid_search<L: Learner>(
    x: ArrayView2<f64>,
    y: &[f64],
    grid: &Grid,
    k: usize,
    learner: &L,
    seed: u64,
) -> Result<GridResult> {
    let combos = grid_combinations(grid)?;
    let reports: Vec<CvReport> = combos
        .par_iter()
        .map(|p| kfold_cv(x, y, k, p, learner, seed))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.mean.mae < reports[best].mean.mae {
            best = i;
        }
    }
    let table = combos.iter().cloned().zip(reports.iter().map(|r| r.mean.mae)).collect();
    Ok(GridResult {
        best: combos[best].clone(),
        report: reports[best].clone(),
        table,
    })
}
