use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MlError, Result};

/// Target names in report order.
pub const TARGET_NAMES: [&str; 4] = ["cle", "ea", "intrusion", "decel"];

/// Feature matrix plus named target vectors over the same rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub targets: BTreeMap<String, Vec<f64>>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Array2<f64>, targets: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if feature_names.len() != x.ncols() {
            return Err(MlError::InvalidArgument(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MlError::InvalidArgument(
                "feature matrix has missing or non-finite values".into(),
            ));
        }
        for (name, y) in &targets {
            if y.len() != x.nrows() {
                return Err(MlError::InvalidArgument(format!(
                    "target `{name}` has {} values for {} rows",
                    y.len(),
                    x.nrows()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(MlError::InvalidArgument(format!(
                    "target `{name}` has non-finite values"
                )));
            }
        }
        Ok(Self {
            feature_names,
            x,
            targets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn target(&self, name: &str) -> Result<&[f64]> {
        self.targets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| MlError::InvalidArgument(format!("unknown target `{name}`")))
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select(Axis(0), indices),
            targets: self
                .targets
                .iter()
                .map(|(k, y)| (k.clone(), indices.iter().map(|&i| y[i]).collect()))
                .collect(),
        }
    }
}

/// Seeded (train, test) row indices; the test set holds `ceil(n·fraction)`
/// rows (266 rows at 0.2 split 212/54).
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(MlError::InvalidArgument(format!("cannot split {n} rows")));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(MlError::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n_test = ((n as f64 * test_fraction - 1e-9).ceil() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = perm[..n_test].to_vec();
    let train = perm[n_test..].to_vec();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n_rows(), test_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}
