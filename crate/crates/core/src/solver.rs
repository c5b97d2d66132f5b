//! First-order Godunov finite-volume integration on `(0, L)`.
//!
//! Boundary data enter through ghost-cell Riemann problems: the interface
//! flux at `x = 0` is `F(datum, u_1)` and at `x = L` it is `F(u_n, datum)`.

use thiserror::Error;

use crate::controller::{ControlSample, ControllerError, ControllerParams};
use crate::flux::FluxModel;
use crate::states::GridState;

pub const DEFAULT_CFL: f64 = 0.5;

/// Relative slack used when deciding that a snapshot time has been reached.
const TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("all wave speeds vanish and no time-step cap was given")]
    ZeroWaveSpeed,
    #[error("cell {cell} became non-finite at t = {time}")]
    NonFinite { cell: usize, time: f64 },
    #[error("meshes differ: {0} cells / L = {1} vs {2} cells / L = {3}")]
    MeshMismatch(usize, f64, usize, f64),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
}

impl SolverConfig {
    /// `cfl = 0.5` and fifty snapshot intervals.
    pub fn new(t_end: f64) -> Self {
        SolverConfig {
            cfl: DEFAULT_CFL,
            t_end,
            snapshot_every: t_end / 50.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::BadConfig(format!(
                "cfl = {} is outside (0, 1]",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::BadConfig(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        if !(self.snapshot_every > 0.0 && self.snapshot_every.is_finite()) {
            return Err(SolverError::BadConfig(format!(
                "snapshot_every = {} must be positive",
                self.snapshot_every
            )));
        }
        Ok(())
    }
}

/// Controller evaluation recorded at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlRecord {
    pub t: f64,
    pub observation: f64,
    pub actuation: f64,
    pub datum: f64,
}

/// First and last cell values at the start of a step, standing in for `u(t, 0+)` and `u(t, L-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRecord {
    pub t: f64,
    pub left_datum: f64,
    pub right_datum: f64,
    pub first: f64,
    pub last: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<GridState>,
    pub controller_trace: Vec<ControlRecord>,
    pub boundary_traces: Vec<BoundaryRecord>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &GridState {
        self.snapshots
            .last()
            .expect("trajectory has at least the initial snapshot")
    }
}

/// Everything known about one completed step, handed to observers.
pub struct StepView<'a> {
    pub t: f64,
    pub dt: f64,
    pub dx: f64,
    pub before: &'a [f64],
    pub after: &'a [f64],
    /// `n + 1` interface fluxes, boundary interfaces included.
    pub fluxes: &'a [f64],
    pub left_datum: f64,
    pub right_datum: f64,
    pub control: Option<ControlSample>,
}

pub trait StepObserver {
    fn on_step(&mut self, view: &StepView<'_>);
}

impl<F: FnMut(&StepView<'_>)> StepObserver for F {
    fn on_step(&mut self, view: &StepView<'_>) {
        self(view)
    }
}

/// Observer that ignores every step.
pub struct NoObserver;

impl StepObserver for NoObserver {
    fn on_step(&mut self, _view: &StepView<'_>) {}
}

/// Largest stable step: `cfl * dx / max|f'|` over the cells and both data.
/// Returns `None` when every wave speed vanishes.
pub fn stable_dt(
    flux: &FluxModel,
    values: &[f64],
    left: f64,
    right: f64,
    dx: f64,
    cfl: f64,
) -> Option<f64> {
    let speed = flux
        .max_wave_speed(values)
        .max(flux.deriv(left).abs())
        .max(flux.deriv(right).abs());
    (speed > 0.0).then(|| cfl * dx / speed)
}

/// Fills `fluxes` with the `n + 1` Godunov interface fluxes.
pub fn interface_fluxes(
    flux: &FluxModel,
    values: &[f64],
    left: f64,
    right: f64,
    fluxes: &mut Vec<f64>,
) {
    let n = values.len();
    fluxes.clear();
    fluxes.reserve(n + 1);
    fluxes.push(flux.godunov_flux(left, values[0]));
    for w in values.windows(2) {
        fluxes.push(flux.godunov_flux(w[0], w[1]));
    }
    fluxes.push(flux.godunov_flux(values[n - 1], right));
}

/// Conservative update with a prescribed `dt`; `fluxes` receives the interface fluxes used.
pub fn apply_step(
    flux: &FluxModel,
    values: &mut [f64],
    left: f64,
    right: f64,
    dt: f64,
    dx: f64,
    fluxes: &mut Vec<f64>,
) {
    interface_fluxes(flux, values, left, right, fluxes);
    let ratio = dt / dx;
    for (i, v) in values.iter_mut().enumerate() {
        *v -= ratio * (fluxes[i + 1] - fluxes[i]);
    }
}

/// Result of a single adaptive step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: GridState,
    pub dt: f64,
    pub fluxes: Vec<f64>,
}

/// One adaptive Godunov step. `max_dt` caps the step and stands in when all
/// wave speeds vanish; without a finite cap that case is [`SolverError::ZeroWaveSpeed`].
pub fn step(
    state: &GridState,
    left: f64,
    right: f64,
    flux: &FluxModel,
    cfl: f64,
    max_dt: f64,
) -> Result<StepOutcome, SolverError> {
    let dx = state.dx();
    let dt = match stable_dt(flux, &state.values, left, right, dx, cfl) {
        Some(dt) => dt.min(max_dt),
        None if max_dt.is_finite() => max_dt,
        None => return Err(SolverError::ZeroWaveSpeed),
    };
    let mut values = state.values.clone();
    let mut fluxes = Vec::new();
    apply_step(flux, &mut values, left, right, dt, dx, &mut fluxes);
    let time = state.time + dt;
    check_finite(&values, time)?;
    Ok(StepOutcome {
        state: GridState::new(state.length(), values, time).expect("mesh unchanged"),
        dt,
        fluxes,
    })
}

fn check_finite(values: &[f64], time: f64) -> Result<(), SolverError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(cell) => Err(SolverError::NonFinite { cell, time }),
        None => Ok(()),
    }
}

/// Where the left boundary datum comes from during a run.
enum LeftBoundary<'a> {
    Given(&'a dyn Fn(f64) -> f64),
    Feedback(&'a ControllerParams),
}

fn integrate(
    u0: &GridState,
    left: LeftBoundary<'_>,
    right: &dyn Fn(f64) -> f64,
    flux: &FluxModel,
    config: &SolverConfig,
    observer: &mut dyn StepObserver,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    if let LeftBoundary::Feedback(params) = &left {
        params.observe(u0)?;
    }
    let dx = u0.dx();
    let length = u0.length();
    let mut values = u0.values.clone();
    let mut before = values.clone();
    let mut fluxes = Vec::with_capacity(values.len() + 1);
    let mut t = u0.time;
    let t_end = t + config.t_end;

    let mut traj = Trajectory {
        snapshots: vec![GridState::new(length, values.clone(), t).expect("mesh")],
        ..Default::default()
    };
    let mut next_snapshot_index = 1usize;
    let snapshot_time = |k: usize| (u0.time + k as f64 * config.snapshot_every).min(t_end);

    let slack = TIME_SLACK * t_end.abs().max(1.0);
    while t < t_end - slack {
        let target = snapshot_time(next_snapshot_index);
        let control = match &left {
            LeftBoundary::Given(_) => None,
            LeftBoundary::Feedback(params) => {
                Some(params.sample_from_observation(params.observe_cells(&values, dx)))
            }
        };
        let left_datum = match (&left, control) {
            (LeftBoundary::Given(f), _) => f(t),
            (_, Some(c)) => c.datum,
            _ => unreachable!(),
        };
        let right_datum = right(t);

        if let Some(c) = control {
            traj.controller_trace.push(ControlRecord {
                t,
                observation: c.observation,
                actuation: c.actuation,
                datum: c.datum,
            });
        }
        traj.boundary_traces.push(BoundaryRecord {
            t,
            left_datum,
            right_datum,
            first: values[0],
            last: values[values.len() - 1],
        });

        let remaining = target - t;
        let mut dt = match stable_dt(flux, &values, left_datum, right_datum, dx, config.cfl) {
            Some(dt) => dt.min(remaining),
            None => remaining.min(config.snapshot_every),
        };
        // a step landing within rounding of the target is snapped onto it
        let reached = dt >= remaining - slack;
        if reached {
            dt = remaining;
        }
        before.copy_from_slice(&values);
        apply_step(
            flux,
            &mut values,
            left_datum,
            right_datum,
            dt,
            dx,
            &mut fluxes,
        );
        let t_new = if reached { target } else { t + dt };
        check_finite(&values, t_new)?;
        observer.on_step(&StepView {
            t,
            dt,
            dx,
            before: &before,
            after: &values,
            fluxes: &fluxes,
            left_datum,
            right_datum,
            control,
        });
        t = t_new;
        traj.steps += 1;
        if reached {
            traj.snapshots
                .push(GridState::new(length, values.clone(), t).expect("mesh"));
            next_snapshot_index += 1;
        }
    }
    Ok(traj)
}

/// Integrates with prescribed boundary data `t -> datum`.
pub fn run_open_loop(
    u0: &GridState,
    left_datum: &dyn Fn(f64) -> f64,
    right_datum: &dyn Fn(f64) -> f64,
    flux: &FluxModel,
    config: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    run_open_loop_observed(u0, left_datum, right_datum, flux, config, &mut NoObserver)
}

pub fn run_open_loop_observed(
    u0: &GridState,
    left_datum: &dyn Fn(f64) -> f64,
    right_datum: &dyn Fn(f64) -> f64,
    flux: &FluxModel,
    config: &SolverConfig,
    observer: &mut dyn StepObserver,
) -> Result<Trajectory, SolverError> {
    integrate(
        u0,
        LeftBoundary::Given(left_datum),
        right_datum,
        flux,
        config,
        observer,
    )
}

/// Closed loop: the left datum is recomputed from the current state each step
/// (explicit lag of one step); the right datum is fixed at `u_r(m)`.
pub fn run_closed_loop(
    u0: &GridState,
    controller: &ControllerParams,
    flux: &FluxModel,
    config: &SolverConfig,
) -> Result<Trajectory, SolverError> {
    run_closed_loop_observed(u0, controller, flux, config, &mut NoObserver)
}

pub fn run_closed_loop_observed(
    u0: &GridState,
    controller: &ControllerParams,
    flux: &FluxModel,
    config: &SolverConfig,
    observer: &mut dyn StepObserver,
) -> Result<Trajectory, SolverError> {
    let u_r = controller.u_r;
    integrate(
        u0,
        LeftBoundary::Feedback(controller),
        &move |_| u_r,
        flux,
        config,
        observer,
    )
}

/// `dx * sum |a_i - b_i|`.
pub fn l1_distance(a: &GridState, b: &GridState) -> Result<f64, SolverError> {
    if a.n_cells() != b.n_cells() || (a.length() - b.length()).abs() > 1e-12 * a.length() {
        return Err(SolverError::MeshMismatch(
            a.n_cells(),
            a.length(),
            b.n_cells(),
            b.length(),
        ));
    }
    Ok(a.dx()
        * a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>())
}

/// Godunov numerical entropy flux for the Kruzkov pair `|u - k|`.
#[inline]
pub fn kruzkov_entropy_flux(flux: &FluxModel, a: f64, b: f64, k: f64) -> f64 {
    flux.godunov_flux(a.max(k), b.max(k)) - flux.godunov_flux(a.min(k), b.min(k))
}

/// Largest cell entropy residual
/// `|u_i^{n+1} - k| - |u_i^n - k| + dt/dx (G_{i+1/2} - G_{i-1/2})` over all cells;
/// nonpositive for an entropy-stable step.
pub fn max_entropy_residual(flux: &FluxModel, view: &StepView<'_>, k: f64) -> f64 {
    let n = view.before.len();
    let ratio = view.dt / view.dx;
    let ghost = |i: isize| -> f64 {
        if i < 0 {
            view.left_datum
        } else if i as usize >= n {
            view.right_datum
        } else {
            view.before[i as usize]
        }
    };
    let mut worst = f64::NEG_INFINITY;
    let mut g_left = kruzkov_entropy_flux(flux, ghost(-1), ghost(0), k);
    for i in 0..n {
        let g_right = kruzkov_entropy_flux(flux, ghost(i as isize), ghost(i as isize + 1), k);
        let r = (view.after[i] - k).abs() - (view.before[i] - k).abs() + ratio * (g_right - g_left);
        worst = worst.max(r);
        g_left = g_right;
    }
    worst
}
