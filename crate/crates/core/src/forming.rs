//! Reduced-order stand-in for the thermoforming step.
//!
//! Three pieces: blank cutout sizing, a deterministic feasibility gate, and a
//! scalar stiffness knockdown that carries forming-induced fiber shear into
//! the crash model.

use crate::doe::{DesignPoint, Interval};
use crate::error::{CoreError, Result};

/// Punch and blank dimensions, mm / mm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolGeometry {
    pub punch_outer_area: f64,
    pub sheet_length: f64,
    pub sheet_width: f64,
}

impl Default for ToolGeometry {
    /// 1500 x 1052 mm sheet; punch area chosen so the corner cutout is 105 mm.
    fn default() -> Self {
        Self {
            punch_outer_area: 1_622_100.0,
            sheet_length: 1500.0,
            sheet_width: 1052.0,
        }
    }
}

impl ToolGeometry {
    pub fn sheet_area(&self) -> f64 {
        self.sheet_length * self.sheet_width
    }
}

/// Side of the square corner cutout, mm.
pub fn cutout_size(geom: &ToolGeometry) -> Result<f64> {
    if !(geom.punch_outer_area > 0.0 && geom.sheet_length > 0.0 && geom.sheet_width > 0.0) {
        return Err(CoreError::InvalidGeometry("dimensions must be positive".into()));
    }
    let excess = geom.punch_outer_area - geom.sheet_area();
    if excess < 0.0 {
        return Err(CoreError::InvalidGeometry(format!(
            "punch outer area {} mm² is smaller than sheet area {} mm²",
            geom.punch_outer_area,
            geom.sheet_area()
        )));
    }
    Ok((excess / 4.0).sqrt())
}

/// Constants of the feasibility score and the shear knockdown.
///
/// score = w_temp·(T_layer − temp_ref) − w_velocity·(v − velocity_ref)²
///       − w_stack·(n·t − stack_ref) − w_gap·max(0, gap_ref − (T_layer − T_tool))
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormingModel {
    /// 1/°C
    pub w_temp: f64,
    /// 1/(m/s)²
    pub w_velocity: f64,
    /// 1/mm
    pub w_stack: f64,
    /// 1/°C
    pub w_gap: f64,
    pub temp_ref: f64,
    pub velocity_ref: f64,
    /// mm
    pub stack_ref: f64,
    pub gap_ref: f64,
    /// Shear angle at the fastest, coldest corner, degrees.
    pub max_shear_deg: f64,
    /// Punch velocity span over which shear ramps from zero to its maximum.
    pub shear_velocity: Interval,
    /// Layer temperature span; shear vanishes at `hi` and peaks at `lo`.
    pub shear_temp: Interval,
}

impl Default for FormingModel {
    fn default() -> Self {
        // Weights calibrated so ~65% of a default 400-point LHS forms.
        Self {
            w_temp: 1.0,
            w_velocity: 10.0,
            w_stack: 10.0,
            w_gap: 0.5,
            temp_ref: 240.0,
            velocity_ref: 5.0,
            stack_ref: 2.0,
            gap_ref: 140.0,
            max_shear_deg: 20.0,
            shear_velocity: Interval::new(4.0, 6.5),
            shear_temp: Interval::new(200.0, 400.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormingOutcome {
    pub feasible: bool,
    pub feasibility_score: f64,
    /// Stiffness multiplier in (0, 1].
    pub knockdown: f64,
    /// mm
    pub cutout_size: f64,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn feasibility_score(p: &DesignPoint, m: &FormingModel) -> f64 {
    let gap = p.layer_temp - p.tool_temp;
    m.w_temp * (p.layer_temp - m.temp_ref)
        - m.w_velocity * (p.punch_velocity - m.velocity_ref).powi(2)
        - m.w_stack * (p.stack_thickness() - m.stack_ref)
        - m.w_gap * (m.gap_ref - gap).max(0.0)
}

/// Surrogate forming shear angle, radians.
pub fn shear_angle(p: &DesignPoint, m: &FormingModel) -> f64 {
    let v = &m.shear_velocity;
    let t = &m.shear_temp;
    let speed = if v.hi > v.lo {
        clamp01((p.punch_velocity - v.lo) / (v.hi - v.lo))
    } else {
        0.0
    };
    let cold = if t.hi > t.lo {
        clamp01((t.hi - p.layer_temp) / (t.hi - t.lo))
    } else {
        0.0
    };
    m.max_shear_deg.to_radians() * speed * cold
}

/// cos² of the surrogate shear angle.
pub fn shear_knockdown(p: &DesignPoint, m: &FormingModel) -> f64 {
    let theta = shear_angle(p, m);
    if theta == 0.0 {
        1.0
    } else {
        theta.cos().powi(2)
    }
}

pub fn forming_feasibility(p: &DesignPoint, m: &FormingModel, geom: &ToolGeometry) -> Result<FormingOutcome> {
    let score = feasibility_score(p, m);
    if !score.is_finite() {
        return Err(CoreError::InvalidArgument(format!("non-finite design point {p:?}")));
    }
    Ok(FormingOutcome {
        feasible: score >= 0.0,
        feasibility_score: score,
        knockdown: shear_knockdown(p, m),
        cutout_size: cutout_size(geom)?,
    })
}
