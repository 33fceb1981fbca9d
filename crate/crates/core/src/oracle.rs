//! Closed-form reference equations for the four crash targets, in the
//! symbols a = layer count, b = ply thickness (mm), c = layer temperature
//! (°C), d = punch/die temperature (°C).

use crate::doe::DesignPoint;
use crate::error::{CoreError, Result};
use crate::metrics::CrashMetrics;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table3Inputs<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl Table3Inputs<f64> {
    pub fn from_point(p: &DesignPoint) -> Self {
        Self {
            a: f64::from(p.n_layers),
            b: p.thickness,
            c: p.layer_temp,
            d: p.tool_temp,
        }
    }
}

pub fn oracle_cle<T: Real>(v: &Table3Inputs<T>) -> Result<T> {
    let Table3Inputs { a, c, d, .. } = *v;
    let l = T::lit;
    let pole = l(-1088.0) + l(8.0) * c + d;
    if pole.abs() <= l(1e-9) * l(1088.0) {
        return Err(CoreError::SingularInput(format!(
            "8c + d = 1088 (c = {c}, d = {d}) is a pole of the CLE equation"
        )));
    }
    let a2 = a * a;
    let num = l(-297024.0) + l(2184.0) * c + l(273.0) * d - l(272.0) * a2 + l(2.0) * c * a2;
    Ok(num / (l(490.0) * pole))
}

pub fn oracle_ea<T: Real>(v: &Table3Inputs<T>) -> T {
    let Table3Inputs { a, b, .. } = *v;
    let l = T::lit;
    l(1303.0) + l(8.0) * a * a * b * b * b * (l(-33.0) + (l(3.0) + a) * b * a)
}

pub fn oracle_intrusion<T: Real>(v: &Table3Inputs<T>) -> T {
    let Table3Inputs { a, b, .. } = *v;
    let l = T::lit;
    l(-0.692) * a * b + l(0.390) * a + l(1.819) * b + l(17.116)
}

pub fn oracle_deceleration<T: Real>(v: &Table3Inputs<T>) -> T {
    let Table3Inputs { a, b, .. } = *v;
    let l = T::lit;
    l(136.585) * a - l(1874.219) * b + l(10032.0)
}

pub fn oracle_metrics<T: Real>(v: &Table3Inputs<T>) -> Result<CrashMetrics<T>> {
    Ok(CrashMetrics {
        cle: oracle_cle(v)?,
        ea: oracle_ea(v),
        intrusion: oracle_intrusion(v),
        deceleration: oracle_deceleration(v),
    })
}

/// Evaluates the reference equations at a design point.
pub fn reference_oracle(p: &DesignPoint) -> Result<CrashMetrics<f64>> {
    oracle_metrics(&Table3Inputs::from_point(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spot_values() {
        let v = Table3Inputs {
            a: 8.0,
            b: 0.25,
            c: 300.0,
            d: 120.0,
        };
        let m = oracle_metrics(&v).unwrap();
        assert!(rel(m.ea, 1215.0) < 1e-12);
        assert!(rel(m.intrusion, 19.30675) < 1e-12);
        assert!(rel(m.deceleration, 10656.12525) < 1e-12);
        assert!(rel(m.cle, 411928.0 / 701680.0) < 1e-12);
        let v16 = Table3Inputs { a: 16.0, ..v };
        assert!(rel(oracle_ea(&v16), 2679.0) < 1e-12);
    }

    #[test]
    fn pole_is_rejected() {
        let v = Table3Inputs {
            a: 8.0,
            b: 0.25,
            c: 133.0,
            d: 24.0,
        };
        assert!(matches!(oracle_cle(&v), Err(CoreError::SingularInput(_))));
    }

    #[test]
    fn single_precision_evaluation() {
        let v = Table3Inputs {
            a: 8.0f32,
            b: 0.25,
            c: 300.0,
            d: 120.0,
        };
        let m = oracle_metrics(&v).unwrap();
        assert!((m.ea - 1215.0).abs() < 1e-2);
    }
}
