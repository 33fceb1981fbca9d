use crashlab_ml::{
    eval_metrics, fold_indices, grid_search, kfold_cv, BoostLearner, BoostVariant, Grid, Learner, MlError, Params,
    Regressor,
};
use ndarray::{Array2, ArrayView1, ArrayView2};
use proptest::prelude::*;

/// Predicts the last column, which the tests fill with the target itself.
struct Identity;
struct IdentityModel;

impl Regressor for IdentityModel {
    fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        row[row.len() - 1]
    }
}

impl Learner for Identity {
    type Model = IdentityModel;
    fn fit(&self, _: &Params, _: ArrayView2<f64>, _: &[f64]) -> crashlab_ml::Result<IdentityModel> {
        Ok(IdentityModel)
    }
}

/// Predicts the training mean, ignoring `params`.
struct MeanLearner;
struct Constant(f64);

impl Regressor for Constant {
    fn predict_row(&self, _: ArrayView1<f64>) -> f64 {
        self.0
    }
}

impl Learner for MeanLearner {
    type Model = Constant;
    fn fit(&self, _: &Params, _: ArrayView2<f64>, y: &[f64]) -> crashlab_ml::Result<Constant> {
        Ok(Constant(y.iter().sum::<f64>() / y.len() as f64))
    }
}

fn column(y: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((y.len(), 1), |(i, _)| y[i])
}

proptest! {
    #[test]
    fn folds_partition_exactly(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = fold_indices(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut seen = vec![0u8; n];
        for &i in folds.iter().flatten() {
            seen[i] += 1;
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(folds, fold_indices(n, k, seed).unwrap());
    }

    #[test]
    fn mean_learner_never_beats_zero_r2(y in prop::collection::vec(-100.0f64..100.0, 10..60), seed in any::<u64>()) {
        let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let x = column(&y);
        let cv = kfold_cv(x.view(), &y, 5, &Params::new(), &MeanLearner, seed).unwrap();
        let pooled = eval_metrics(&y, &cv.out_of_fold).unwrap();
        prop_assert!(pooled.r2 <= 1e-12, "pooled out-of-fold R² {}", pooled.r2);
    }
}

#[test]
fn ten_rows_five_folds() {
    let folds = fold_indices(10, 5, 1).unwrap();
    assert!(folds.iter().all(|f| f.len() == 2));
    assert!(matches!(fold_indices(4, 5, 1), Err(MlError::InvalidArgument(_))));
}

#[test]
fn identity_learner_is_perfect() {
    let y: Vec<f64> = (1..=25).map(|i| f64::from(i).sqrt()).collect();
    let x = column(&y);
    let cv = kfold_cv(x.view(), &y, 5, &Params::new(), &Identity, 9).unwrap();
    assert_eq!(cv.mean.mae, 0.0);
    assert_eq!(cv.mean.r2, 1.0);
    assert_eq!(cv.out_of_fold, y);
}

#[test]
fn single_combination_grid() {
    let y: Vec<f64> = (0..20).map(f64::from).collect();
    let x = column(&y);
    let mut g = Grid::new();
    g.insert("max_depth".into(), vec![2.0]);
    let r = grid_search(x.view(), &y, &g, 4, &BoostLearner::new(BoostVariant::Plain), 0).unwrap();
    assert_eq!(r.best["max_depth"], 2.0);
    assert_eq!(r.table.len(), 1);
}

#[test]
fn grid_picks_depth_that_separates() {
    // Eight-cell checkerboard over three binary features: needs depth 3.
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for rep in 0..10 {
        for cell in 0..8u32 {
            let bits = [cell & 1, (cell >> 1) & 1, (cell >> 2) & 1];
            rows.extend(bits.iter().map(|&b| f64::from(b) + 0.01 * f64::from(rep)));
            y.push(f64::from(bits[0] ^ bits[1] ^ bits[2]) * 10.0 + f64::from(cell));
        }
    }
    let x = Array2::from_shape_vec((y.len(), 3), rows).unwrap();
    let mut g = Grid::new();
    g.insert("max_depth".into(), vec![1.0, 3.0]);
    g.insert("learning_rate".into(), vec![1.0]);
    g.insert("n_rounds".into(), vec![1.0]);
    let r = grid_search(x.view(), &y, &g, 5, &BoostLearner::new(BoostVariant::Plain), 3).unwrap();
    assert_eq!(r.best["max_depth"], 3.0);
    assert!(r.table[1].1 < r.table[0].1);
}

#[test]
fn ties_go_to_first_in_grid_order() {
    let y: Vec<f64> = (0..30).map(|i| f64::from(i % 7)).collect();
    let x = column(&y);
    let mut g = Grid::new();
    g.insert("beta".into(), vec![3.0, 1.0, 2.0]);
    g.insert("alpha".into(), vec![5.0, 4.0]);
    let r = grid_search(x.view(), &y, &g, 5, &MeanLearner, 0).unwrap();
    assert_eq!(r.best["alpha"], 5.0);
    assert_eq!(r.best["beta"], 3.0);
    let again = grid_search(x.view(), &y, &g, 5, &MeanLearner, 0).unwrap();
    assert_eq!(r, again);
}

#[test]
fn empty_value_list_rejected() {
    let y = vec![1.0, 2.0, 3.0, 4.0];
    let x = column(&y);
    let mut g = Grid::new();
    g.insert("max_depth".into(), vec![]);
    let r = grid_search(x.view(), &y, &g, 2, &BoostLearner::new(BoostVariant::Plain), 0);
    assert!(matches!(r, Err(MlError::InvalidArgument(_))));
}

#[test]
fn hand_computed_metrics() {
    let r = eval_metrics(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    assert_eq!(r.mae, 1.0);
    assert!((r.mape - 100.0 * (1.0 + 0.5 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
    assert!((r.r2 + 0.5).abs() < 1e-12);
}
