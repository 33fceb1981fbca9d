//! Design-space sampling, a reduced-order thermoforming gate, a single
//! degree-of-freedom side-pole impact solver and the crashworthiness metrics
//! extracted from its traces.
//!
//! The numerical kernels ([`laminate`], [`crashsim`], [`metrics`], [`oracle`])
//! are generic over [`Real`]; the aliases below pin them to `f64`, which is
//! what the pipeline uses.

pub mod crashsim;
pub mod doe;
mod error;
pub mod fmt;
pub mod forming;
pub mod laminate;
pub mod metrics;
pub mod oracle;
mod scalar;

pub use error::{CoreError, Result};
pub use scalar::Real;

pub use crashsim::{build_rom, integrate, integrate_substeps, Damping, RomConstants, SolverSettings};
pub use doe::{lhs_sample, read_doe, snap, write_doe, DesignPoint, DoeMatrix, Interval, Orientation, ParameterSpace};
pub use forming::{cutout_size, forming_feasibility, shear_knockdown, FormingModel, FormingOutcome, ToolGeometry};
pub use laminate::{laminate_modulus, MaterialCard};
pub use metrics::{
    crush_load_efficiency, energy_absorbed, extract_metrics, intrusion, peak_deceleration, CrashMetrics,
};
pub use oracle::{reference_oracle, Table3Inputs};

/// Reduced-order model in double precision.
pub type RomModel = crashsim::RomModel<f64>;
/// Sampled impact trace in double precision.
pub type CrashTrace = crashsim::CrashTrace<f64>;
/// Single-precision trace, handy for memory-bound campaign post-processing.
pub type CrashTraceF32 = crashsim::CrashTrace<f32>;
pub type RomModelF32 = crashsim::RomModel<f32>;
