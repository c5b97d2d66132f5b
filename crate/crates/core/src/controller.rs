//! Saturated boundary feedback acting on the windowed mean deviation from the target shock.

use thiserror::Error;

use crate::flux::{FluxError, FluxModel};
use crate::states::{integrate_cells, GridState};

/// Minimum number of cells that must cover the observation window `[alpha - delta, alpha + delta]`.
pub const MIN_WINDOW_CELLS: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("[alpha - delta, alpha + delta] = [{lo}, {hi}] is not inside (0, {length})")]
    WindowOutsideDomain { lo: f64, hi: f64, length: f64 },
    #[error("controller parameter {name} = {value} must be positive")]
    NonPositive { name: &'static str, value: f64 },
    #[error("observation window spans {cells:.2} cells, need at least {MIN_WINDOW_CELLS}")]
    MeshTooCoarse { cells: f64 },
    #[error("state length {state} does not match controller domain {expected}")]
    DomainMismatch { state: f64, expected: f64 },
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// Target position, window, gain and level of the feedback law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub length: f64,
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub m: f64,
    pub u_l: f64,
    pub u_r: f64,
}

/// One evaluation of the feedback loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub observation: f64,
    pub actuation: f64,
    pub datum: f64,
}

impl ControllerParams {
    pub fn new(
        flux: &FluxModel,
        length: f64,
        alpha: f64,
        delta: f64,
        epsilon: f64,
        nu: f64,
        m: f64,
    ) -> Result<Self, ControllerError> {
        for (name, value) in [
            ("L", length),
            ("delta", delta),
            ("epsilon", epsilon),
            ("nu", nu),
            ("m", m),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ControllerError::NonPositive { name, value });
            }
        }
        let (lo, hi) = (alpha - delta, alpha + delta);
        if !(lo > 0.0 && hi < length) {
            return Err(ControllerError::WindowOutsideDomain { lo, hi, length });
        }
        let (u_l, u_r) = flux.shock_state_pair(m)?;
        Ok(ControllerParams {
            length,
            alpha,
            delta,
            epsilon,
            nu,
            m,
            u_l,
            u_r,
        })
    }

    /// The saturation `A_{eps,nu}`: odd, nondecreasing, clipped at `+-epsilon`.
    pub fn saturate(&self, z: f64) -> f64 {
        if z <= -self.nu {
            -self.epsilon
        } else if z >= self.nu {
            self.epsilon
        } else {
            self.epsilon * z / self.nu
        }
    }

    /// Mean of `u - target` over `[alpha - delta, alpha + delta]`, integrated exactly.
    pub fn observe(&self, state: &GridState) -> Result<f64, ControllerError> {
        if (state.length() - self.length).abs() > 1e-12 * self.length {
            return Err(ControllerError::DomainMismatch {
                state: state.length(),
                expected: self.length,
            });
        }
        let cells = 2.0 * self.delta / state.dx();
        if cells < MIN_WINDOW_CELLS {
            return Err(ControllerError::MeshTooCoarse { cells });
        }
        Ok(self.observe_cells(&state.values, state.dx()))
    }

    pub(crate) fn observe_cells(&self, values: &[f64], dx: f64) -> f64 {
        let integral =
            integrate_cells(values, dx, self.alpha - self.delta, self.alpha + self.delta);
        let target = self.delta * (self.u_l + self.u_r);
        (integral - target) / (2.0 * self.delta)
    }

    /// `u_l(m) - A(O(u))`, the Dirichlet datum imposed at `x = 0`.
    pub fn left_boundary_value(&self, state: &GridState) -> Result<f64, ControllerError> {
        Ok(self.sample(state)?.datum)
    }

    pub fn sample(&self, state: &GridState) -> Result<ControlSample, ControllerError> {
        let observation = self.observe(state)?;
        Ok(self.sample_from_observation(observation))
    }

    pub fn sample_from_observation(&self, observation: f64) -> ControlSample {
        let actuation = self.saturate(observation);
        ControlSample {
            observation,
            actuation,
            datum: self.u_l - actuation,
        }
    }

    /// `(u_l - u_r) / 2`, the observation produced by a shock outside the window.
    pub fn nu0(&self) -> f64 {
        0.5 * (self.u_l - self.u_r)
    }
}
