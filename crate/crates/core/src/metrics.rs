//! Crashworthiness targets extracted from an impact trace.

use crate::crashsim::CrashTrace;
use crate::error::{CoreError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrashMetrics<T> {
    /// Crush load efficiency, mean over peak contact force.
    pub cle: T,
    /// Absorbed energy, J.
    pub ea: T,
    /// Peak displacement, mm.
    pub intrusion: T,
    /// Peak deceleration, m/s².
    pub deceleration: T,
}

/// Mean contact force over samples with positive force, divided by the peak.
pub fn crush_load_efficiency<T: Real>(tr: &CrashTrace<T>) -> Result<T> {
    let peak = tr.force.iter().copied().fold(T::zero(), T::max);
    if !(peak > T::zero()) {
        return Err(CoreError::UndefinedMetric(
            "crush load efficiency of a trace without contact force".into(),
        ));
    }
    let (sum, count) = tr
        .force
        .iter()
        .filter(|&&f| f > T::zero())
        .fold((T::zero(), 0usize), |(s, n), &f| (s + f, n + 1));
    let mean = sum / T::from_usize(count).expect("count");
    Ok((mean / peak).min(T::one()))
}

/// Kinetic energy lost, cross-checked against the peak of internal plus
/// dissipated energy.
pub fn energy_absorbed<T: Real>(tr: &CrashTrace<T>) -> Result<T> {
    let Some(&ke0) = tr.kinetic_energy.first() else {
        return Err(CoreError::InvalidArgument("empty trace".into()));
    };
    let ke_min = tr.kinetic_energy.iter().copied().fold(ke0, T::min);
    let by_kinetic = ke0 - ke_min;
    let by_internal = tr
        .internal_energy
        .iter()
        .zip(&tr.dissipated_energy)
        .map(|(&ie, &d)| ie + d)
        .fold(T::zero(), T::max);
    if (by_kinetic - by_internal).abs() > T::lit(1e-4) * ke0 {
        return Err(CoreError::InconsistentTrace(format!(
            "kinetic energy loss {by_kinetic} J disagrees with absorbed energy {by_internal} J"
        )));
    }
    Ok(by_kinetic)
}

/// Peak displacement in mm.
pub fn intrusion<T: Real>(tr: &CrashTrace<T>) -> T {
    tr.displacement.iter().copied().fold(T::zero(), T::max) * T::lit(1000.0)
}

/// Peak contact force over mass.
pub fn peak_deceleration<T: Real>(tr: &CrashTrace<T>) -> Result<T> {
    if tr.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "deceleration needs at least two samples".into(),
        ));
    }
    Ok(tr.force.iter().copied().fold(T::zero(), T::max) / tr.mass)
}

/// Peak `|dv/dt|` by central differences. Only for cross-checking
/// [`peak_deceleration`] on smooth traces.
pub fn peak_deceleration_fd<T: Real>(tr: &CrashTrace<T>) -> T {
    let two_dt = T::lit(2.0) * tr.dt_out;
    tr.velocity
        .windows(3)
        .map(|w| ((w[2] - w[0]) / two_dt).abs())
        .fold(T::zero(), T::max)
}

pub fn extract_metrics<T: Real>(tr: &CrashTrace<T>) -> Result<CrashMetrics<T>> {
    Ok(CrashMetrics {
        cle: crush_load_efficiency(tr)?,
        ea: energy_absorbed(tr)?,
        intrusion: intrusion(tr),
        deceleration: peak_deceleration(tr)?,
    })
}
