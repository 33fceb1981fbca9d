use serde::{Deserialize, Serialize};

use crate::error::{MlError, Result};

/// Entries with `|y_true|` at or below this are left out of MAPE.
pub const MAPE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    pub r2: f64,
    pub n: usize,
    /// Rows excluded from MAPE because `|y_true| <= 1e-12`.
    pub mape_excluded: usize,
}

pub fn eval_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<EvalReport> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(MlError::InvalidArgument(format!(
            "need equal nonzero lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = y_true.len() as f64;
    let mae = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).abs()).sum::<f64>() / n;

    let (ape_sum, ape_n) = y_true
        .iter()
        .zip(y_pred)
        .filter(|(t, _)| t.abs() > MAPE_EPSILON)
        .fold((0.0, 0usize), |(s, c), (t, p)| (s + ((t - p) / t).abs(), c + 1));
    if ape_n == 0 {
        return Err(MlError::UndefinedMetric("MAPE with all-zero true values".into()));
    }

    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MlError::UndefinedMetric("R² of a constant target".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum();

    Ok(EvalReport {
        mae,
        mape: 100.0 * ape_sum / ape_n as f64,
        r2: 1.0 - ss_res / ss_tot,
        n: y_true.len(),
        mape_excluded: y_true.len() - ape_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 2.0, 4.0];
        let r = eval_metrics(&y, &y).unwrap();
        assert_eq!((r.mae, r.mape, r.r2), (0.0, 0.0, 1.0));
    }

    #[test]
    fn hand_computed_vector() {
        let r = eval_metrics(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.mae - 1.0).abs() < 1e-15);
        assert!((r.mape - 100.0 * (1.0 + 0.5 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!((r.mape - 61.111111111).abs() < 1e-6);
        assert!((r.r2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn mean_prediction_has_zero_r2() {
        let r = eval_metrics(&[1.0, 2.0, 6.0], &[3.0; 3]).unwrap();
        assert!(r.r2.abs() < 1e-15);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(
            eval_metrics(&[0.0, 0.0], &[1.0, 1.0]),
            Err(MlError::UndefinedMetric(_))
        ));
        assert!(matches!(
            eval_metrics(&[2.0, 2.0], &[1.0, 1.0]),
            Err(MlError::UndefinedMetric(_))
        ));
        assert!(eval_metrics(&[], &[]).is_err());
        assert!(eval_metrics(&[1.0], &[1.0, 2.0]).is_err());
        let r = eval_metrics(&[0.0, 2.0, 4.0], &[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(r.mape_excluded, 1);
    }
}
