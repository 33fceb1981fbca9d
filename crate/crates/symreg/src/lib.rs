//! Symbolic regression by tree-based genetic programming over four named
//! inputs `a, b, c, d`.
//!
//! Expressions use `+ − × ÷`, negation and squaring over variables and real
//! constants. [`evolve`] returns the complexity/holdout-error Pareto front of
//! everything it evaluated.

mod constants;
mod error;
mod expr;
mod front;
mod gp;

pub use constants::{fit_constants, mae};
pub use error::{Result, SymregError};
pub use expr::{eval_expr, Expression, Node, N_VARS, VAR_NAMES};
pub use front::{FrontMember, ParetoFront, FRONT_HEADER};
pub use gp::{evolve, holdout_split, SymregConfig};
