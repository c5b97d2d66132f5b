//! Boundary feedback stabilization of a stationary shock for scalar
//! conservation laws `u_t + f(u)_x = 0` on `(0, L)` with uniformly convex flux.
//!
//! * [`flux`]: convex flux models, branch inverses, Godunov flux.
//! * [`states`]: cell-averaged states and initial data families.
//! * [`controller`]: the saturated windowed-average feedback law.
//! * [`solver`]: Godunov integration in open and closed loop.
//! * [`oracle`]: front-tracking exact solutions and backward characteristics.
//! * [`stability`]: explicit constants, parameter checks, shock tracking, decay fits.
//! * [`dde`]: scalar delay equations with time-varying delay and the contraction check.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dde;
pub mod flux;
pub mod oracle;
pub mod solver;
pub mod stability;
pub mod states;

pub use controller::{ControlSample, ControllerError, ControllerParams};
pub use dde::{DdeError, DelaySystem};
pub use flux::{FluxError, FluxKind, FluxModel};
pub use oracle::{FrontSolution, OracleError, PiecewiseConstant};
pub use solver::{SolverConfig, SolverError, Trajectory};
pub use stability::{StabilityConstants, StabilityError};
pub use states::{GridState, Perturbation, StateError};
