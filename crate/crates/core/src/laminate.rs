//! Orthotropic ply card and classical-laminate in-plane modulus.

use crate::doe::DesignPoint;
use crate::error::{CoreError, Result};
use crate::scalar::Real;

/// Enclosure ply properties. Moduli and stresses in GPa, density in kg/mm³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialCard<T> {
    pub density: T,
    pub e1: T,
    pub e2: T,
    pub g12: T,
    pub nu12: T,
    pub yield_stress: T,
    pub hardening_multiplier: T,
    pub hardening_exponent: T,
    /// Fiber strain at which damage starts to grow.
    pub tensile_initial_strain: T,
    pub tensile_ultimate_strain: T,
    pub ultimate_damage: T,
}

impl<T: Real> Default for MaterialCard<T> {
    fn default() -> Self {
        Self {
            density: T::lit(1.8e-6),
            e1: T::lit(125.0),
            e2: T::lit(8.0),
            g12: T::lit(7.0),
            nu12: T::lit(0.33),
            yield_stress: T::lit(0.02),
            hardening_multiplier: T::lit(1.3),
            hardening_exponent: T::lit(0.64),
            tensile_initial_strain: T::lit(0.012),
            tensile_ultimate_strain: T::lit(0.014),
            ultimate_damage: T::lit(0.99),
        }
    }
}

impl<T: Real> MaterialCard<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.density, self.e1, self.e2, self.g12, self.yield_stress];
        if pos.iter().any(|v| !(*v > T::zero())) {
            return Err(CoreError::InvalidArgument(
                "density, moduli and yield stress must be positive".into(),
            ));
        }
        if !(self.nu12 > T::zero() && self.nu12 < T::lit(0.5)) {
            return Err(CoreError::InvalidArgument(format!(
                "nu12 = {} outside (0, 0.5)",
                self.nu12
            )));
        }
        if !(self.ultimate_damage >= T::zero() && self.ultimate_damage < T::one()) {
            return Err(CoreError::InvalidArgument("ultimate damage must lie in [0, 1)".into()));
        }
        if !(self.tensile_initial_strain > T::zero() && self.tensile_initial_strain <= self.tensile_ultimate_strain) {
            return Err(CoreError::InvalidArgument(
                "damage strains must satisfy 0 < initial <= ultimate".into(),
            ));
        }
        if self.hardening_multiplier < T::zero() || !(self.hardening_exponent > T::zero()) {
            return Err(CoreError::InvalidArgument(
                "hardening law parameters out of range".into(),
            ));
        }
        Ok(())
    }

    /// Reduced stiffness terms (Q11, Q22, Q12, Q66) of the ply, GPa.
    pub fn reduced_stiffness(&self) -> [T; 4] {
        let nu21 = self.nu12 * self.e2 / self.e1;
        let denom = T::one() - self.nu12 * nu21;
        [self.e1 / denom, self.e2 / denom, self.nu12 * self.e2 / denom, self.g12]
    }
}

/// Ply-averaged in-plane stiffness `A/h` (entries 11, 22, 12, 66, 16, 26) of an
/// equal-thickness stack with the given ply angles in degrees.
pub fn averaged_stiffness<T: Real>(angles_deg: &[T], mat: &MaterialCard<T>) -> [T; 6] {
    let [q11, q22, q12, q66] = mat.reduced_stiffness();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut acc = [T::zero(); 6];
    for &angle in angles_deg {
        let (s, c) = angle.to_radians().sin_cos();
        let (c2, s2) = (c * c, s * s);
        let s2c2 = s2 * c2;
        let quartic = s2 * s2 + c2 * c2;
        let bar = [
            q11 * c2 * c2 + two * (q12 + two * q66) * s2c2 + q22 * s2 * s2,
            q11 * s2 * s2 + two * (q12 + two * q66) * s2c2 + q22 * c2 * c2,
            (q11 + q22 - four * q66) * s2c2 + q12 * quartic,
            (q11 + q22 - two * q12 - two * q66) * s2c2 + q66 * quartic,
            (q11 - q12 - two * q66) * c2 * c * s - (q22 - q12 - two * q66) * c * s2 * s,
            (q11 - q12 - two * q66) * c * s2 * s - (q22 - q12 - two * q66) * c2 * c * s,
        ];
        for (a, b) in acc.iter_mut().zip(bar) {
            *a = *a + b;
        }
    }
    let n = T::from_usize(angles_deg.len().max(1)).expect("ply count");
    acc.map(|v| v / n)
}

/// Effective in-plane modulus along the laminate x axis, `1 / a11` with
/// `a = (A/h)⁻¹`, GPa.
pub fn in_plane_modulus<T: Real>(angles_deg: &[T], mat: &MaterialCard<T>) -> T {
    let [a11, a22, a12, a66, a16, a26] = averaged_stiffness(angles_deg, mat);
    let det = a11 * (a22 * a66 - a26 * a26) - a12 * (a12 * a66 - a26 * a16) + a16 * (a12 * a26 - a22 * a16);
    det / (a22 * a66 - a26 * a26)
}

/// Effective modulus of the design point's layup, GPa.
pub fn laminate_modulus(p: &DesignPoint, mat: &MaterialCard<f64>) -> f64 {
    in_plane_modulus(&p.orientation.angles_deg(), mat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_ply_gives_e1() {
        let e = 70.0;
        let nu = 0.3;
        let iso = MaterialCard {
            e1: e,
            e2: e,
            g12: e / (2.0 * (1.0 + nu)),
            nu12: nu,
            ..MaterialCard::<f64>::default()
        };
        for layup in [
            [0.0, 45.0, -45.0, 90.0],
            [30.0, -30.0, 60.0, -60.0],
            [10.0, 10.0, 10.0, 10.0],
        ] {
            assert!((in_plane_modulus(&layup, &iso) - e).abs() < 1e-9 * e);
        }
    }

    #[test]
    fn unidirectional_ply_gives_e1_and_e2() {
        let m = MaterialCard::<f64>::default();
        assert!((in_plane_modulus(&[0.0], &m) - 125.0).abs() < 1e-9);
        assert!((in_plane_modulus(&[90.0], &m) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn single_precision_agrees() {
        let m64 = MaterialCard::<f64>::default();
        let m32 = MaterialCard::<f32>::default();
        let a64 = in_plane_modulus(&[0.0, 45.0, -45.0, 90.0], &m64);
        let a32 = in_plane_modulus(&[0.0f32, 45.0, -45.0, 90.0], &m32);
        assert!(((a32 as f64) - a64).abs() < 1e-4 * a64);
    }

    #[test]
    fn card_validation() {
        assert!(MaterialCard::<f64>::default().validate().is_ok());
        let bad = MaterialCard {
            nu12: 0.6,
            ..MaterialCard::<f64>::default()
        };
        assert!(bad.validate().is_err());
    }
}
