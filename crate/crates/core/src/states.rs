//! Cell-averaged states on a uniform mesh of `(0, L)` and the initial data
//! families used by the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flux::{FluxError, FluxModel};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("shock position {position} is outside (0, {length})")]
    BadPosition { position: f64, length: f64 },
    #[error("mesh needs at least {MIN_CELLS} cells and a positive length (got n = {n_cells}, L = {length})")]
    BadMesh { n_cells: usize, length: f64 },
    #[error("cell {cell} value {value} leaves the working interval [{lo}, {hi}]")]
    OutOfRange {
        cell: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// Cell averages of `u(t, .)` on a uniform mesh of `(0, length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    length: f64,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridState {
    pub fn new(length: f64, values: Vec<f64>, time: f64) -> Result<Self, StateError> {
        if values.len() < MIN_CELLS || !(length > 0.0 && length.is_finite()) {
            return Err(StateError::BadMesh {
                n_cells: values.len(),
                length,
            });
        }
        Ok(GridState {
            length,
            values,
            time,
        })
    }

    /// Cell averages of `profile` using `samples` midpoint sub-samples per cell.
    pub fn from_profile(
        length: f64,
        n_cells: usize,
        samples: usize,
        profile: impl Fn(f64) -> f64,
    ) -> Result<Self, StateError> {
        let dx = length / n_cells as f64;
        let samples = samples.max(1);
        let values = (0..n_cells)
            .map(|i| {
                let x0 = i as f64 * dx;
                (0..samples)
                    .map(|k| profile(x0 + (k as f64 + 0.5) * dx / samples as f64))
                    .sum::<f64>()
                    / samples as f64
            })
            .collect();
        Self::new(length, values, 0.0)
    }

    pub fn constant(length: f64, n_cells: usize, value: f64) -> Result<Self, StateError> {
        Self::new(length, vec![value; n_cells], 0.0)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Index of the cell containing `x`, clamped to the mesh.
    pub fn cell_index(&self, x: f64) -> usize {
        let i = (x / self.dx()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.n_cells() - 1)
        }
    }

    /// `dx * sum(u_i)`.
    pub fn mass(&self) -> f64 {
        self.dx() * self.values.iter().sum::<f64>()
    }

    /// Total variation of the cell averages.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Exact integral of the piecewise-constant state over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        integrate_cells(&self.values, self.dx(), a, b)
    }

    pub fn check_range(&self, flux: &FluxModel) -> Result<(), StateError> {
        let (lo, hi) = flux.working_interval();
        match self.values.iter().position(|&v| !(v >= lo && v <= hi)) {
            Some(cell) => Err(StateError::OutOfRange {
                cell,
                value: self.values[cell],
                lo,
                hi,
            }),
            None => Ok(()),
        }
    }
}

/// Exact integral over `[a, b]` of the piecewise-constant function with cell
/// averages `values` on cells of width `dx` starting at `x = 0`.
pub fn integrate_cells(values: &[f64], dx: f64, a: f64, b: f64) -> f64 {
    let length = dx * values.len() as f64;
    let (a, b) = (a.max(0.0), b.min(length));
    if b <= a {
        return 0.0;
    }
    let index = |x: f64| ((x / dx).floor().max(0.0) as usize).min(values.len() - 1);
    let mut total = 0.0;
    for (i, v) in values.iter().enumerate().take(index(b) + 1).skip(index(a)) {
        let lo = (i as f64 * dx).max(a);
        let hi = ((i + 1) as f64 * dx).min(b);
        if hi > lo {
            total += v * (hi - lo);
        }
    }
    total
}

/// Down-jump from `left` to `right` at `position`, with exact averages in the cut cell.
pub fn step_profile(
    length: f64,
    n_cells: usize,
    position: f64,
    left: f64,
    right: f64,
) -> Result<GridState, StateError> {
    if !(position > 0.0 && position < length) {
        return Err(StateError::BadPosition { position, length });
    }
    let dx = length / n_cells as f64;
    let values = (0..n_cells)
        .map(|i| {
            let x0 = i as f64 * dx;
            let x1 = (i + 1) as f64 * dx;
            if x1 <= position {
                left
            } else if x0 >= position {
                right
            } else {
                let frac = (position - x0) / dx;
                frac * left + (1.0 - frac) * right
            }
        })
        .collect();
    GridState::new(length, values, 0.0)
}

/// The target `u_l(m) 1_{x < alpha} + u_r(m) 1_{x >= alpha}` sampled by exact cell averages.
pub fn stationary_shock(
    length: f64,
    n_cells: usize,
    alpha: f64,
    m: f64,
    flux: &FluxModel,
) -> Result<GridState, StateError> {
    let (u_l, u_r) = flux.shock_state_pair(m)?;
    step_profile(length, n_cells, alpha, u_l, u_r)
}

/// The stationary shock profile placed at `beta` instead of the target.
pub fn shifted_shock(
    length: f64,
    n_cells: usize,
    beta: f64,
    m: f64,
    flux: &FluxModel,
) -> Result<GridState, StateError> {
    stationary_shock(length, n_cells, beta, m, flux)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// `amplitude * sin(2 pi wavenumber x / L)`, cell-averaged exactly.
    Sine { amplitude: f64, wavenumber: f64 },
    /// Independent uniform draws in `[-amplitude, amplitude]` per cell.
    Random { amplitude: f64, seed: u64 },
}

impl Perturbation {
    pub fn amplitude(&self) -> f64 {
        match *self {
            Perturbation::Sine { amplitude, .. } | Perturbation::Random { amplitude, .. } => {
                amplitude
            }
        }
    }
}

/// Adds a deterministic perturbation to `base`. Values leaving the working
/// interval are an error rather than being clipped.
pub fn perturbed_shock(
    base: &GridState,
    perturbation: Perturbation,
    flux: &FluxModel,
) -> Result<GridState, StateError> {
    let dx = base.dx();
    let length = base.length();
    let mut values = base.values.clone();
    match perturbation {
        Perturbation::Sine {
            amplitude,
            wavenumber,
        } => {
            if amplitude != 0.0 && wavenumber != 0.0 {
                let k = 2.0 * std::f64::consts::PI * wavenumber / length;
                for (i, v) in values.iter_mut().enumerate() {
                    let (x0, x1) = (i as f64 * dx, (i + 1) as f64 * dx);
                    // exact cell average of sin(k x)
                    *v += amplitude * ((k * x0).cos() - (k * x1).cos()) / (k * dx);
                }
            }
        }
        Perturbation::Random { amplitude, seed } => {
            if amplitude != 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for v in values.iter_mut() {
                    *v += amplitude * rng.gen_range(-1.0..=1.0);
                }
            }
        }
    }
    let out = GridState::new(length, values, base.time)?;
    out.check_range(flux)?;
    Ok(out)
}
