//! Single degree-of-freedom side-pole impact model.
//!
//! The formed enclosure plus payload is a lumped mass striking a rigid pole.
//! Resistance is compression-only: linear elastic up to yield, power-law
//! hardening afterwards, and a damage variable that ramps with the peak
//! fiber strain and scales the whole resisting force by `(1 − d)`. A
//! stiffness-proportional dashpot acts only while in contact.
//!
//! Displacement `x` is positive into the enclosure. All internal quantities
//! are SI; the design point and material card are converted on entry.

use std::io::Write;

use crate::doe::DesignPoint;
use crate::error::{CoreError, Result};
use crate::fmt::sig;
use crate::forming::{FormingOutcome, ToolGeometry};
use crate::laminate::{in_plane_modulus, MaterialCard};
use crate::scalar::Real;

pub const GPA_TO_PA: f64 = 1.0e9;
pub const MM_TO_M: f64 = 1.0e-3;
/// kg/mm³ to kg/m³
pub const KG_PER_MM3_TO_KG_PER_M3: f64 = 1.0e9;
/// 35 km/h in m/s.
pub const DEFAULT_IMPACT_VELOCITY: f64 = 35.0 / 3.6;

pub const TRACE_HEADER: &str = "t_s,force_N,disp_m,vel_mps,ke_J,ie_J,diss_J";

/// Contact damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping<T> {
    /// Fraction of critical damping of the undamaged elastic contact; the
    /// stiffness-proportional coefficient is `β = 2ζ/ω`.
    Ratio(T),
    /// Stiffness-proportional coefficient `β` in seconds, used as given.
    Beta(T),
}

/// Constants of the reduced-order model that do not come from the design
/// point or the material card.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomConstants<T> {
    /// Maps displacement to fiber strain (`ε = x / L`), m. Pole diameter.
    pub characteristic_length: T,
    /// Effective width of laminate carrying the pole load, m. Lumps the wall,
    /// ribs and lid into one section; the default puts mid-range stacks near
    /// damage onset at the nominal impact energy.
    pub load_path_width: T,
    /// Non-structural battery mass, kg.
    pub payload_mass: T,
    pub damping: Damping<T>,
    /// Pole friction coefficient. Kept for completeness; a normal-impact
    /// model has no tangential motion for it to act on.
    pub friction: T,
}

impl<T: Real> Default for RomConstants<T> {
    fn default() -> Self {
        Self {
            characteristic_length: T::lit(0.254),
            load_path_width: T::lit(25.0),
            payload_mass: T::lit(100.0),
            damping: Damping::Ratio(T::lit(0.01)),
            friction: T::lit(0.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomModel<T> {
    /// Enclosure plus payload, kg.
    pub mass: T,
    /// N/m
    pub k_elastic: T,
    /// m
    pub characteristic_length: T,
    /// Initial yield force, N. Infinite disables plasticity.
    pub yield_force: T,
    pub hardening_multiplier: T,
    pub hardening_exponent: T,
    /// Peak displacement at which damage starts, m. Infinite disables damage.
    pub damage_onset: T,
    /// Peak displacement at which damage saturates, m.
    pub damage_ultimate: T,
    pub ultimate_damage: T,
    /// Stiffness-proportional damping coefficient, s.
    pub damping_beta: T,
}

impl<T: Real> RomModel<T> {
    /// Undamped, unyielding, undamageable spring-mass.
    pub fn linear_elastic(mass: T, k_elastic: T) -> Self {
        Self {
            mass,
            k_elastic,
            characteristic_length: T::lit(0.254),
            yield_force: T::infinity(),
            hardening_multiplier: T::zero(),
            hardening_exponent: T::one(),
            damage_onset: T::infinity(),
            damage_ultimate: T::infinity(),
            ultimate_damage: T::zero(),
            damping_beta: T::zero(),
        }
    }

    /// Undamaged elastic circular frequency, rad/s.
    pub fn omega(&self) -> T {
        (self.k_elastic / self.mass).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mass > T::zero()
            && self.k_elastic > T::zero()
            && self.characteristic_length > T::zero()
            && self.yield_force > T::zero()
            && self.damping_beta >= T::zero()
            && self.ultimate_damage >= T::zero()
            && self.ultimate_damage < T::one()
            && self.damage_onset > T::zero()
            && self.damage_onset <= self.damage_ultimate;
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidArgument(format!(
                "inconsistent reduced-order model {self:?}"
            )))
        }
    }

    pub fn cast<U: Real>(&self) -> RomModel<U> {
        let c = |v: T| U::lit(v.as_f64());
        RomModel {
            mass: c(self.mass),
            k_elastic: c(self.k_elastic),
            characteristic_length: c(self.characteristic_length),
            yield_force: c(self.yield_force),
            hardening_multiplier: c(self.hardening_multiplier),
            hardening_exponent: c(self.hardening_exponent),
            damage_onset: c(self.damage_onset),
            damage_ultimate: c(self.damage_ultimate),
            ultimate_damage: c(self.ultimate_damage),
            damping_beta: c(self.damping_beta),
        }
    }

    /// Flow force at accumulated plastic displacement `xp`.
    fn flow_force(&self, xp: T) -> T {
        let eps_p = (xp / self.characteristic_length).max(T::zero());
        self.yield_force * (T::one() + self.hardening_multiplier * eps_p.powf(self.hardening_exponent))
    }

    fn damage(&self, x_peak: T) -> T {
        if !(x_peak > self.damage_onset) {
            T::zero()
        } else if x_peak >= self.damage_ultimate || self.damage_ultimate == self.damage_onset {
            self.ultimate_damage
        } else {
            self.ultimate_damage * (x_peak - self.damage_onset) / (self.damage_ultimate - self.damage_onset)
        }
    }
}

/// Reduces a formed design point to a [`RomModel`].
pub fn build_rom(
    p: &DesignPoint,
    forming: &FormingOutcome,
    mat: &MaterialCard<f64>,
    geom: &ToolGeometry,
    consts: &RomConstants<f64>,
) -> Result<RomModel<f64>> {
    if !forming.feasible {
        return Err(CoreError::ContractViolation(
            "crash model requested for a design that failed forming".into(),
        ));
    }
    mat.validate()?;
    if !(forming.knockdown > 0.0 && forming.knockdown <= 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "knockdown {} outside (0, 1]",
            forming.knockdown
        )));
    }
    let length = consts.characteristic_length;
    let stack_m = p.stack_thickness() * MM_TO_M;
    let section = stack_m * consts.load_path_width;
    let density = mat.density * KG_PER_MM3_TO_KG_PER_M3;
    let sheet_area_m2 = geom.sheet_area() * MM_TO_M * MM_TO_M;
    let enclosure_mass = density * sheet_area_m2 * stack_m;
    let modulus = in_plane_modulus(&p.orientation.angles_deg(), mat) * GPA_TO_PA;
    let k_elastic = forming.knockdown * modulus * section / length;
    let mass = enclosure_mass + consts.payload_mass;
    let damping_beta = match consts.damping {
        Damping::Ratio(zeta) => 2.0 * zeta / (k_elastic / mass).sqrt(),
        Damping::Beta(beta) => beta,
    };
    let rom = RomModel {
        mass,
        k_elastic,
        characteristic_length: length,
        yield_force: mat.yield_stress * GPA_TO_PA * section,
        hardening_multiplier: mat.hardening_multiplier,
        hardening_exponent: mat.hardening_exponent,
        damage_onset: mat.tensile_initial_strain * length,
        damage_ultimate: mat.tensile_ultimate_strain * length,
        ultimate_damage: mat.ultimate_damage,
        damping_beta,
    };
    rom.validate()?;
    Ok(rom)
}

/// Time stepping controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    /// m/s
    pub impact_velocity: T,
    /// s
    pub duration: T,
    /// Output sampling step, s.
    pub dt_out: T,
    /// Internal step as a fraction of the critical step `2/ω`.
    pub step_fraction: T,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            impact_velocity: T::lit(DEFAULT_IMPACT_VELOCITY),
            duration: T::lit(1.0e-2),
            dt_out: T::lit(1.0e-5),
            step_fraction: T::lit(0.02),
        }
    }
}

/// Uniformly sampled impact history.
#[derive(Debug, Clone, PartialEq)]
pub struct CrashTrace<T> {
    pub dt_out: T,
    pub duration: T,
    /// Lumped mass used to produce the trace, kg.
    pub mass: T,
    /// Total contact force on the mass, N (≥ 0).
    pub force: Vec<T>,
    /// m
    pub displacement: Vec<T>,
    /// Permanent (plastic) displacement, m.
    pub residual: Vec<T>,
    /// m/s
    pub velocity: Vec<T>,
    pub kinetic_energy: Vec<T>,
    /// Recoverable strain energy, J.
    pub internal_energy: Vec<T>,
    /// Plastic, damage and damping work, J.
    pub dissipated_energy: Vec<T>,
}

impl<T: Real> CrashTrace<T> {
    pub fn len(&self) -> usize {
        self.force.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        self.dt_out * T::from_usize(i).expect("sample index")
    }

    pub fn initial_energy(&self) -> T {
        self.kinetic_energy.first().copied().unwrap_or_else(T::zero)
    }

    /// Worst absolute deviation of KE + IE + dissipated from the initial energy.
    pub fn max_energy_error(&self) -> T {
        let e0 = self.initial_energy();
        (0..self.len())
            .map(|i| (self.kinetic_energy[i] + self.internal_energy[i] + self.dissipated_energy[i] - e0).abs())
            .fold(T::zero(), T::max)
    }

    /// First time after impact at which the displacement returns to zero,
    /// linearly interpolated between samples. `None` if it never does.
    pub fn return_time(&self) -> Option<T> {
        (1..self.len()).find_map(|i| {
            let (x0, x1) = (self.displacement[i - 1], self.displacement[i]);
            (x0 > T::zero() && x1 <= T::zero()).then(|| self.time(i - 1) + self.dt_out * x0 / (x0 - x1))
        })
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{TRACE_HEADER}")?;
        for i in 0..self.len() {
            let cols = [
                self.time(i),
                self.force[i],
                self.displacement[i],
                self.velocity[i],
                self.kinetic_energy[i],
                self.internal_energy[i],
                self.dissipated_energy[i],
            ];
            let line: Vec<String> = cols.iter().map(|v| sig(v.as_f64(), 9)).collect();
            writeln!(sink, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Integrates with the internal step picked from [`SolverSettings::default`]'s
/// step fraction.
pub fn integrate<T: Real>(rom: &RomModel<T>, v0: T, duration: T, dt_out: T) -> Result<CrashTrace<T>> {
    let substeps = auto_substeps(rom, dt_out, SolverSettings::<T>::default().step_fraction)?;
    integrate_substeps(rom, v0, duration, dt_out, substeps)
}

/// Integrates with explicit settings.
pub fn integrate_with<T: Real>(rom: &RomModel<T>, s: &SolverSettings<T>) -> Result<CrashTrace<T>> {
    let substeps = auto_substeps(rom, s.dt_out, s.step_fraction)?;
    integrate_substeps(rom, s.impact_velocity, s.duration, s.dt_out, substeps)
}

/// Number of internal steps per output interval for a step no larger than
/// `fraction · 2/ω`, also keeping the explicit dashpot update stable.
pub fn auto_substeps<T: Real>(rom: &RomModel<T>, dt_out: T, fraction: T) -> Result<usize> {
    if !(dt_out > T::zero()) || !(fraction > T::zero()) {
        return Err(CoreError::InvalidArgument(
            "dt_out and step fraction must be positive".into(),
        ));
    }
    let two = T::lit(2.0);
    let mut dt = fraction * two / rom.omega();
    if rom.damping_beta > T::zero() {
        // dashpot rate c/m = β·ω²
        dt = dt.min(fraction * two / (rom.damping_beta * rom.omega() * rom.omega()));
    }
    (dt_out / dt)
        .ceil()
        .to_usize()
        .map(|n| n.max(1))
        .ok_or_else(|| CoreError::InvalidArgument("internal step count overflow".into()))
}

struct Contact<T> {
    plastic: T,
    peak: T,
    damage: T,
}

impl<T: Real> Contact<T> {
    /// Updates the history variables for displacement `x`, returning the
    /// resisting (non-viscous) force.
    fn update(&mut self, rom: &RomModel<T>, x: T) -> T {
        if x > self.peak {
            self.peak = x;
            self.damage = self.damage.max(rom.damage(x));
        }
        let k = rom.k_elastic;
        let stretch = x - self.plastic;
        if stretch <= T::zero() {
            return T::zero();
        }
        if k * stretch > rom.flow_force(self.plastic) {
            self.plastic = self.plastic + return_map(rom, self.plastic, stretch);
        }
        (T::one() - self.damage) * k * (x - self.plastic).max(T::zero())
    }

    fn strain_energy(&self, rom: &RomModel<T>, x: T) -> T {
        let stretch = (x - self.plastic).max(T::zero());
        T::lit(0.5) * (T::one() - self.damage) * rom.k_elastic * stretch * stretch
    }
}

/// Plastic increment `Δ` solving `k·(stretch − Δ) = flow(xp + Δ)` by bisection.
fn return_map<T: Real>(rom: &RomModel<T>, xp: T, stretch: T) -> T {
    let k = rom.k_elastic;
    let residual = |d: T| k * (stretch - d) - rom.flow_force(xp + d);
    let (mut lo, mut hi) = (T::zero(), stretch);
    let tol = T::epsilon() * T::lit(4.0) * (xp.abs() + stretch);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if residual(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    T::lit(0.5) * (lo + hi)
}

/// Velocity-Verlet integration with `substeps` internal steps per output
/// interval.
///
/// The dashpot uses the half-step velocity. Work of the contact force is
/// accumulated by the trapezoidal rule, so `KE + IE + dissipated` is
/// conserved up to `O(F²Δt²/m)`; a drift beyond `1e-4·E0` is reported as a
/// solver error.
pub fn integrate_substeps<T: Real>(
    rom: &RomModel<T>,
    v0: T,
    duration: T,
    dt_out: T,
    substeps: usize,
) -> Result<CrashTrace<T>> {
    if !(duration > T::zero()) || !(dt_out > T::zero()) {
        return Err(CoreError::InvalidArgument(
            "duration and dt_out must be positive".into(),
        ));
    }
    if substeps == 0 {
        return Err(CoreError::InvalidArgument(
            "at least one internal step per output".into(),
        ));
    }
    if !(v0 >= T::zero()) {
        return Err(CoreError::InvalidArgument(format!(
            "impact velocity {v0} must be nonnegative"
        )));
    }
    rom.validate()?;
    let ratio = duration / dt_out;
    let intervals = ratio.round();
    if (ratio - intervals).abs() > T::lit(1e-6) * ratio.max(T::one()) {
        return Err(CoreError::InvalidArgument(format!(
            "duration {duration} is not a multiple of dt_out {dt_out}"
        )));
    }
    let intervals = intervals.to_usize().expect("output count");
    let n_sub = T::from_usize(substeps).expect("substep count");
    let dt = dt_out / n_sub;
    let critical = T::lit(2.0) / rom.omega();
    if dt > critical * T::lit(0.5) {
        return Err(CoreError::InvalidArgument(format!(
            "internal step {dt} s exceeds half the critical step {critical} s"
        )));
    }

    let half = T::lit(0.5);
    let m = rom.mass;
    let e0 = half * m * v0 * v0;
    let tol = T::lit(1e-4) * e0;

    let cap = intervals + 1;
    let mut tr = CrashTrace {
        dt_out,
        duration,
        mass: m,
        force: Vec::with_capacity(cap),
        displacement: Vec::with_capacity(cap),
        residual: Vec::with_capacity(cap),
        velocity: Vec::with_capacity(cap),
        kinetic_energy: Vec::with_capacity(cap),
        internal_energy: Vec::with_capacity(cap),
        dissipated_energy: Vec::with_capacity(cap),
    };

    let mut state = Contact {
        plastic: T::zero(),
        peak: T::zero(),
        damage: T::zero(),
    };
    let (mut x, mut v) = (T::zero(), v0);
    let (mut f_spring, mut f_damp) = (T::zero(), T::zero());
    let (mut work_spring, mut work_damp) = (T::zero(), T::zero());

    let record = |tr: &mut CrashTrace<T>, x: T, v: T, f: T, state: &Contact<T>, ws: T, wd: T| -> Result<()> {
        let ke = half * m * v * v;
        let ie = state.strain_energy(rom, x);
        let diss = ws - ie + wd;
        let err = (ke + ie + diss - e0).abs();
        if err > tol {
            return Err(CoreError::Solver(format!(
                "energy balance violated at t = {}: |error| = {err} J exceeds {tol} J",
                tr.time(tr.force.len())
            )));
        }
        tr.force.push(f);
        tr.displacement.push(x);
        tr.residual.push(state.plastic);
        tr.velocity.push(v);
        tr.kinetic_energy.push(ke);
        tr.internal_energy.push(ie);
        tr.dissipated_energy.push(diss.max(T::zero()));
        Ok(())
    };

    record(&mut tr, x, v, T::zero(), &state, work_spring, work_damp)?;
    for _ in 0..intervals {
        for _ in 0..substeps {
            let force = f_spring + f_damp;
            let v_half = v - force / m * dt * half;
            let x_new = x + v_half * dt;
            let spring = state.update(rom, x_new);
            let in_contact = x_new > state.plastic;
            let dashpot = if in_contact {
                rom.damping_beta * (T::one() - state.damage) * rom.k_elastic * v_half
            } else {
                T::zero()
            };
            // Unilateral: the pole can push but never pull.
            let total = (spring + dashpot).max(T::zero());
            let dashpot = total - spring;
            let dx = x_new - x;
            work_spring = work_spring + half * (f_spring + spring) * dx;
            work_damp = work_damp + half * (f_damp + dashpot) * dx;
            v = v_half - total / m * dt * half;
            x = x_new;
            f_spring = spring;
            f_damp = dashpot;
        }
        record(&mut tr, x, v, f_spring + f_damp, &state, work_spring, work_damp)?;
    }
    Ok(tr)
}
