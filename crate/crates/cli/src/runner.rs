//! Orchestration of every run mode and the artifact tree each one writes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shockloop::dde::{verify_decay, DdeTrajectory, DecayReport};
use shockloop::oracle::{default_eta, FrontEvent};
use shockloop::solver::{
    l1_distance, run_closed_loop_observed, run_open_loop, NoObserver, StepObserver,
};
use shockloop::stability::{
    classify_zones, delay_at, fit_decay, locate_shock, validate_parameters, DecayFit,
    ValidationReport, ZoneSnapshot,
};
use shockloop::states::{perturbed_shock, shifted_shock, stationary_shock};
use shockloop::{
    ControllerError, ControllerParams, DdeError, DelaySystem, FluxError, FluxModel, FrontSolution,
    GridState, OracleError, Perturbation, PiecewiseConstant, SolverConfig, SolverError,
    StabilityConstants, StabilityError, StateError, Trajectory,
};
use thiserror::Error;

use crate::config::{ConfigError, Horizon, InitialData, Mode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dde(#[from] DdeError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// Process exit status, one per error family.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Parse(_)) => 2,
            RunError::Config(ConfigError::Validation(_)) => 3,
            RunError::Io { .. } => 4,
            RunError::Flux(_) | RunError::State(_) => 5,
            RunError::Controller(_) => 6,
            RunError::Solver(_) => 7,
            RunError::Stability(_) => 8,
            RunError::Oracle(_) => 9,
            RunError::Dde(_) => 10,
            RunError::Pool(_) => 11,
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Fixed float formatting: 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

struct Out {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Out {
    fn create(path: PathBuf) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| RunError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        let f = File::create(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Out {
            path,
            w: BufWriter::new(f),
        })
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.w, "{s}").map_err(|source| RunError::Io {
            path: self.path.clone(),
            source,
        })
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> Result<()> {
        self.line(&format!("{key} = {value}"))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|source| RunError::Io {
            path: self.path,
            source,
        })
    }
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    let mut o = Out::create(path)?;
    o.w.write_all(text.as_bytes())
        .map_err(|source| RunError::Io {
            path: o.path.clone(),
            source,
        })?;
    o.finish()
}

/// Grid state as `x,u`, one row per cell center.
pub fn write_state_csv(path: PathBuf, state: &GridState) -> Result<()> {
    let mut o = Out::create(path)?;
    o.line("x,u")?;
    for (i, u) in state.values.iter().enumerate() {
        o.line(&format!(
            "{},{}",
            fmt_f64(state.cell_center(i)),
            fmt_f64(*u)
        ))?;
    }
    o.finish()
}

pub fn snapshot_name(t: f64) -> String {
    format!("t_{t:012.6}.csv")
}

fn write_snapshots(dir: &Path, traj: &Trajectory) -> Result<()> {
    for s in &traj.snapshots {
        write_state_csv(dir.join("snapshots").join(snapshot_name(s.time)), s)?;
    }
    Ok(())
}

/// Runs `config`, writing the artifact tree into `out`.
pub fn run(config: &RunConfig, out: &Path, jobs: usize) -> Result<()> {
    let problems = config.validate();
    if !problems.is_empty() {
        return Err(ConfigError::Validation(problems).into());
    }
    fs::create_dir_all(out).map_err(|source| RunError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    write_text(out.join("config.snapshot"), &config.to_ini())?;
    match config.mode {
        Mode::ClosedLoop => {
            let run = simulate_closed_loop(config)?;
            write_closed_loop(out, config, &run)
        }
        Mode::OpenLoop => run_open_mode(config, out),
        Mode::Sweep => run_sweep(config, out, jobs),
        Mode::ConvergenceStudy => {
            let study = convergence_study(config)?;
            write_convergence(out, &study)
        }
        Mode::DelayOdeVerify => {
            let runs = dde_verification(config)?;
            write_dde(out, config, &runs)
        }
    }
}

pub fn controller_params(config: &RunConfig, flux: &FluxModel) -> Result<ControllerParams> {
    Ok(ControllerParams::new(
        flux,
        config.length,
        config.alpha,
        config.delta,
        config.epsilon,
        config.nu,
        config.m,
    )?)
}

pub fn initial_state(config: &RunConfig, flux: &FluxModel) -> Result<GridState> {
    let (l, n, m) = (config.length, config.n_cells, config.m);
    let target = stationary_shock(l, n, config.alpha, m, flux)?;
    let state = match config.initial {
        InitialData::Target => target,
        InitialData::ShiftedShock { beta } => shifted_shock(l, n, beta, m, flux)?,
        InitialData::Sine {
            amplitude,
            wavenumber,
        } => perturbed_shock(
            &target,
            Perturbation::Sine {
                amplitude,
                wavenumber,
            },
            flux,
        )?,
        InitialData::Random { amplitude } => perturbed_shock(
            &target,
            Perturbation::Random {
                amplitude,
                seed: config.seed,
            },
            flux,
        )?,
        InitialData::Constant { value } => GridState::constant(l, n, value)?,
    };
    state.check_range(flux)?;
    Ok(state)
}

fn t_end(config: &RunConfig, constants: Option<&StabilityConstants>) -> f64 {
    match (config.horizon, constants) {
        (Horizon::Fixed(t), _) => t,
        (Horizon::AfterT4(margin), Some(c)) => c.t4 + margin,
        (Horizon::AfterT4(margin), None) => margin,
    }
}

fn solver_config(config: &RunConfig, t_end: f64) -> SolverConfig {
    SolverConfig {
        cfl: config.cfl,
        t_end,
        snapshot_every: config.snapshot_every.unwrap_or(t_end / 50.0),
    }
}

/// One row of the closed-loop time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub beta: Option<f64>,
    pub observation: f64,
    pub tau: Option<f64>,
    pub l1_error: f64,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopAnalysis {
    pub constants: StabilityConstants,
    pub validation: ValidationReport,
    pub series: Vec<SeriesRow>,
    pub fit: Option<DecayFit>,
    pub fit_window: (f64, f64),
    pub envelope_worst_ratio: f64,
    pub zones: Vec<ZoneSnapshot>,
    /// Snapshots with `t >= T3` whose shock leaves the window by more than one cell.
    pub confinement_violations: usize,
    /// Snapshots with `t >= T3` whose delay leaves the bracket by more than `2 dx`.
    pub delay_violations: usize,
    pub beta_final: Option<f64>,
    pub l1_final: f64,
    pub converged: bool,
}

pub struct ClosedLoopRun {
    pub flux: FluxModel,
    pub params: ControllerParams,
    pub trajectory: Trajectory,
    pub analysis: ClosedLoopAnalysis,
}

pub fn simulate_closed_loop(config: &RunConfig) -> Result<ClosedLoopRun> {
    simulate_closed_loop_observed(config, &mut NoObserver)
}

pub fn simulate_closed_loop_observed(
    config: &RunConfig,
    observer: &mut dyn StepObserver,
) -> Result<ClosedLoopRun> {
    let flux = config.flux_model()?;
    let params = controller_params(config, &flux)?;
    let constants = StabilityConstants::from_controller(&flux, &params)?;
    let u0 = initial_state(config, &flux)?;
    let t_end = t_end(config, Some(&constants));
    let mut trajectory =
        run_closed_loop_observed(&u0, &params, &flux, &solver_config(config, t_end), observer)?;
    if config.trace_stride > 1 {
        let stride = config.trace_stride;
        trajectory.controller_trace = trajectory
            .controller_trace
            .iter()
            .copied()
            .step_by(stride)
            .collect();
    }
    let analysis = analyze_closed_loop(&flux, &params, constants, &trajectory)?;
    Ok(ClosedLoopRun {
        flux,
        params,
        trajectory,
        analysis,
    })
}

pub fn analyze_closed_loop(
    flux: &FluxModel,
    params: &ControllerParams,
    constants: StabilityConstants,
    trajectory: &Trajectory,
) -> Result<ClosedLoopAnalysis> {
    let validation = validate_parameters(flux, &constants);
    let first = &trajectory.snapshots[0];
    let (n, dx) = (first.n_cells(), first.dx());
    let target = stationary_shock(params.length, n, params.alpha, params.m, flux)?;
    let mut series = Vec::with_capacity(trajectory.snapshots.len());
    for s in &trajectory.snapshots {
        series.push(SeriesRow {
            t: s.time,
            beta: locate_shock(s, flux, params.m).ok(),
            observation: params.observe(s)?,
            tau: delay_at(s, flux, params.alpha, params.delta).ok(),
            l1_error: l1_distance(s, &target)?,
        });
    }
    let t_final = trajectory.final_state().time;
    let l1: Vec<(f64, f64)> = series.iter().map(|r| (r.t, r.l1_error)).collect();
    // past T4 when the run reaches it with a few samples left, else the second half
    let enough = l1.iter().filter(|(t, _)| *t >= constants.t4).count() >= 3;
    let fit_window = if enough {
        (constants.t4, t_final)
    } else {
        (0.5 * t_final, t_final)
    };
    let fit = fit_decay(&l1, fit_window.0, fit_window.1).ok();
    let envelope_worst_ratio = fit
        .map(|f| f.worst_ratio(&l1, fit_window.0, fit_window.1))
        .unwrap_or(f64::NAN);
    let zones = classify_zones(trajectory, flux, &constants);
    let (lo, hi) = constants.delay_bracket(flux);
    let late = series.iter().filter(|r| r.t >= constants.t3);
    let confinement_violations = late
        .clone()
        .filter(|r| {
            !r.beta.is_some_and(|b| {
                b > params.alpha - params.delta - dx && b < params.alpha + params.delta + dx
            })
        })
        .count();
    let delay_violations = late
        .filter(|r| {
            !r.tau
                .is_some_and(|tau| tau >= lo - 2.0 * dx && tau <= hi + 2.0 * dx)
        })
        .count();
    let last = series.last().expect("initial snapshot");
    let beta_final = last.beta;
    Ok(ClosedLoopAnalysis {
        constants,
        validation,
        fit,
        fit_window,
        envelope_worst_ratio,
        zones,
        confinement_violations,
        delay_violations,
        beta_final,
        l1_final: last.l1_error,
        converged: beta_final.is_some_and(|b| (b - params.alpha).abs() < 0.01),
        series,
    })
}

pub fn write_closed_loop(dir: &Path, config: &RunConfig, run: &ClosedLoopRun) -> Result<()> {
    let a = &run.analysis;
    write_snapshots(dir, &run.trajectory)?;

    let mut o = Out::create(dir.join("controller.csv"))?;
    o.line("t,O,A,u_left_datum")?;
    for r in &run.trajectory.controller_trace {
        o.line(&format!(
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.observation),
            fmt_f64(r.actuation),
            fmt_f64(r.datum)
        ))?;
    }
    o.finish()?;

    let mut o = Out::create(dir.join("series.csv"))?;
    o.line("t,beta,O,tau,l1_error")?;
    for r in &a.series {
        o.line(&format!(
            "{},{},{},{},{}",
            fmt_f64(r.t),
            opt(r.beta),
            fmt_f64(r.observation),
            opt(r.tau),
            fmt_f64(r.l1_error)
        ))?;
    }
    o.finish()?;

    let mut o = Out::create(dir.join("stability_report.txt"))?;
    for (k, v) in a.constants.entries() {
        o.kv(k, fmt_f64(v))?;
    }
    o.kv("max_curvature", fmt_f64(a.constants.max_curvature))?;
    let v = &a.validation;
    let ineqs = [
        ("gain_0", v.gain[0]),
        ("gain_1", v.gain[1]),
        ("speed_0", v.speeds[0]),
        ("speed_1", v.speeds[1]),
        ("delay_continuity", v.delay_continuity),
        ("contraction", v.contraction),
    ];
    for (name, q) in ineqs {
        o.kv(&format!("{name}.lhs"), fmt_f64(q.lhs))?;
        o.kv(&format!("{name}.rhs"), fmt_f64(q.rhs))?;
        o.kv(&format!("{name}.holds"), q.holds())?;
    }
    for (name, ok) in v.verdicts() {
        o.kv(name, ok)?;
    }
    let (lo, hi) = a.constants.delay_bracket(&run.flux);
    o.kv("delay_bracket_lo", fmt_f64(lo))?;
    o.kv("delay_bracket_hi", fmt_f64(hi))?;
    o.kv("delay_violations", a.delay_violations)?;
    o.kv("confinement_violations", a.confinement_violations)?;
    o.kv("zone_snapshots", a.zones.len())?;
    o.kv(
        "zone_three_expected",
        a.zones.iter().filter(|z| z.expect_three).count(),
    )?;
    o.kv(
        "zone_two_expected",
        a.zones.iter().filter(|z| z.expect_two).count(),
    )?;
    o.kv(
        "zone_inconsistent",
        a.zones.iter().filter(|z| !z.consistent()).count(),
    )?;
    o.kv(
        "zone_max_middle_after_t2",
        a.zones
            .iter()
            .filter(|z| z.expect_two)
            .map(|z| z.middle_cells)
            .max()
            .unwrap_or(0),
    )?;
    o.finish()?;

    let mut o = Out::create(dir.join("summary.txt"))?;
    o.kv("mode", config.mode.name())?;
    o.kv("steps", run.trajectory.steps)?;
    o.kv("t_end", fmt_f64(run.trajectory.final_state().time))?;
    o.kv("alpha", fmt_f64(run.params.alpha))?;
    o.kv("beta_final", opt(a.beta_final))?;
    o.kv("converged", a.converged)?;
    o.kv("l1_final", fmt_f64(a.l1_final))?;
    o.kv("C_fit", opt(a.fit.map(|f| f.rate)))?;
    o.kv("fit_prefactor", opt(a.fit.map(|f| f.prefactor)))?;
    o.kv("fit_window_start", fmt_f64(a.fit_window.0))?;
    o.kv("fit_window_end", fmt_f64(a.fit_window.1))?;
    o.kv("envelope_worst_ratio", fmt_f64(a.envelope_worst_ratio))?;
    for (name, ok) in a.validation.verdicts() {
        o.kv(name, ok)?;
    }
    o.kv("parameters_valid", a.validation.all_pass())?;
    o.finish()
}

fn run_open_mode(config: &RunConfig, dir: &Path) -> Result<()> {
    let flux = config.flux_model()?;
    let (u_l, u_r) = flux.shock_state_pair(config.m)?;
    let left = config.left_datum.unwrap_or(u_l);
    let right = config.right_datum.unwrap_or(u_r);
    let u0 = initial_state(config, &flux)?;
    let t_end = t_end(config, None);
    let traj = run_open_loop(
        &u0,
        &|_| left,
        &|_| right,
        &flux,
        &solver_config(config, t_end),
    )?;
    write_snapshots(dir, &traj)?;

    let mut o = Out::create(dir.join("boundary.csv"))?;
    o.line("t,left_datum,right_datum,u_first,u_last")?;
    for (k, r) in traj.boundary_traces.iter().enumerate() {
        if k % config.trace_stride == 0 {
            o.line(&format!(
                "{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.left_datum),
                fmt_f64(r.right_datum),
                fmt_f64(r.first),
                fmt_f64(r.last)
            ))?;
        }
    }
    o.finish()?;

    let target = stationary_shock(config.length, config.n_cells, config.alpha, config.m, &flux)?;
    let fin = traj.final_state();
    let mut o = Out::create(dir.join("summary.txt"))?;
    o.kv("mode", config.mode.name())?;
    o.kv("steps", traj.steps)?;
    o.kv("t_end", fmt_f64(fin.time))?;
    o.kv("left_datum", fmt_f64(left))?;
    o.kv("right_datum", fmt_f64(right))?;
    o.kv("beta_final", opt(locate_shock(fin, &flux, config.m).ok()))?;
    o.kv("l1_final", fmt_f64(l1_distance(fin, &target)?))?;
    o.finish()
}

/// Closed-loop configurations of a sweep, in output order.
pub fn sweep_members(config: &RunConfig) -> Vec<RunConfig> {
    let mut out = Vec::new();
    for &epsilon in &config.sweep_epsilon {
        for &nu in &config.sweep_nu {
            for &seed in &config.sweep_seeds {
                let mut c = config.clone();
                c.mode = Mode::ClosedLoop;
                c.epsilon = epsilon;
                c.nu = nu;
                c.seed = seed;
                out.push(c);
            }
        }
    }
    out
}

fn run_sweep(config: &RunConfig, dir: &Path, jobs: usize) -> Result<()> {
    let members = sweep_members(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let results: Vec<Result<ClosedLoopRun>> =
        pool.install(|| members.par_iter().map(simulate_closed_loop).collect());
    let mut o = Out::create(dir.join("sweep_summary.csv"))?;
    o.line("run,epsilon,nu,seed,parameters_valid,converged,beta_final,l1_final,C_fit,confinement_violations")?;
    for (k, (member, result)) in members.iter().zip(results).enumerate() {
        let run = result?;
        let name = format!("run_{k:03}");
        let sub = dir.join(&name);
        write_text(sub.join("config.snapshot"), &member.to_ini())?;
        write_closed_loop(&sub, member, &run)?;
        let a = &run.analysis;
        o.line(&format!(
            "{name},{},{},{},{},{},{},{},{},{}",
            fmt_f64(member.epsilon),
            fmt_f64(member.nu),
            member.seed,
            a.validation.all_pass(),
            a.converged,
            opt(a.beta_final),
            fmt_f64(a.l1_final),
            opt(a.fit.map(|f| f.rate)),
            a.confinement_violations
        ))?;
    }
    o.finish()
}

/// Solver error against the front-tracking solution for one Riemann problem.
#[derive(Debug, Clone)]
pub struct ConvergenceProblem {
    pub left: f64,
    pub right: f64,
    /// `(n_cells, dx, l1_error)` per mesh.
    pub errors: Vec<(usize, f64, f64)>,
    pub order: f64,
    pub fitted_order: f64,
    pub events: Vec<FrontEvent>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub flux_name: &'static str,
    pub problems: Vec<ConvergenceProblem>,
    /// Finest-pair order of the error summed over all problems.
    pub total_order: f64,
    /// Least-squares order of the summed error.
    pub total_fitted_order: f64,
    /// Worst `error / |left - right|` on the finest mesh.
    pub finest_relative_error: f64,
}

/// Order from the two finest meshes: `log2(e_coarse / e_fine) / log2(n_fine / n_coarse)`.
pub fn observed_order(points: &[(usize, f64)]) -> f64 {
    match points {
        [.., (n0, e0), (n1, e1)] => (e0 / e1).log2() / (*n1 as f64 / *n0 as f64).log2(),
        _ => f64::NAN,
    }
}

/// Least-squares slope of `-log2(error)` against `log2(n)` over every mesh.
pub fn fitted_order(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.1.max(1e-300).log2()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

pub fn convergence_study(config: &RunConfig) -> Result<ConvergenceStudy> {
    let flux = config.flux_model()?;
    let (length, t) = (config.length, config.conv_time);
    let x0 = config.riemann_position.unwrap_or(0.5 * length);
    let mut problems = Vec::new();
    for &(left, right) in &config.riemann {
        let data = PiecewiseConstant::riemann(x0, left, right);
        let eta = config.eta.unwrap_or_else(|| default_eta(&data));
        let exact = FrontSolution::evolve(&flux, &data, t, eta)?;
        let profile = exact.profile_at(t)?;
        let mut errors = Vec::new();
        for &n in &config.conv_cells {
            let u0 = GridState::new(length, data.cell_averages(0.0, length, n), 0.0)?;
            let sc = SolverConfig {
                cfl: config.cfl,
                t_end: t,
                snapshot_every: t,
            };
            let traj = run_open_loop(&u0, &|_| left, &|_| right, &flux, &sc)?;
            let fin = traj.final_state();
            let reference = profile.cell_averages(0.0, length, n);
            let err = fin.dx()
                * fin
                    .values
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            errors.push((n, fin.dx(), err));
        }
        let pts: Vec<(usize, f64)> = errors.iter().map(|e| (e.0, e.2)).collect();
        let (order, fitted) = (observed_order(&pts), fitted_order(&pts));
        problems.push(ConvergenceProblem {
            left,
            right,
            errors,
            order,
            fitted_order: fitted,
            events: exact.events.clone(),
        });
    }
    let totals: Vec<(usize, f64)> = config
        .conv_cells
        .iter()
        .enumerate()
        .map(|(k, &n)| (n, problems.iter().map(|p| p.errors[k].2).sum()))
        .collect();
    let finest_relative_error = problems
        .iter()
        .map(|p| {
            p.errors.last().expect("meshes").2 / (p.left - p.right).abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok(ConvergenceStudy {
        flux_name: config.flux.name(),
        total_order: observed_order(&totals),
        total_fitted_order: fitted_order(&totals),
        finest_relative_error,
        problems,
    })
}

fn write_convergence(dir: &Path, study: &ConvergenceStudy) -> Result<()> {
    let mut o = Out::create(dir.join("convergence.csv"))?;
    o.line("problem,left,right,n_cells,dx,l1_error")?;
    for (k, p) in study.problems.iter().enumerate() {
        for &(n, dx, err) in &p.errors {
            o.line(&format!(
                "{k},{},{},{n},{},{}",
                fmt_f64(p.left),
                fmt_f64(p.right),
                fmt_f64(dx),
                fmt_f64(err)
            ))?;
        }
    }
    o.finish()?;
    for (k, p) in study.problems.iter().enumerate() {
        let mut o = Out::create(dir.join("fronts").join(format!("events_{k:02}.csv")))?;
        o.line("t_event,x_event,left_state,right_state_before,right_state_after")?;
        for e in &p.events {
            o.line(&format!(
                "{},{},{},{},{}",
                fmt_f64(e.t),
                fmt_f64(e.x),
                fmt_f64(e.left_state),
                fmt_f64(e.right_state_before),
                fmt_f64(e.right_state_after)
            ))?;
        }
        o.finish()?;
    }
    let mut o = Out::create(dir.join("summary.txt"))?;
    o.kv("mode", Mode::ConvergenceStudy.name())?;
    o.kv("flux", study.flux_name)?;
    o.kv("problems", study.problems.len())?;
    for (k, p) in study.problems.iter().enumerate() {
        o.kv(&format!("observed_order_{k:02}"), fmt_f64(p.order))?;
        o.kv(&format!("fitted_order_{k:02}"), fmt_f64(p.fitted_order))?;
    }
    o.kv("observed_order", fmt_f64(study.total_order))?;
    o.kv("fitted_order", fmt_f64(study.total_fitted_order))?;
    o.kv(
        "finest_relative_error",
        fmt_f64(study.finest_relative_error),
    )?;
    o.finish()
}

pub struct DdeRun {
    pub system: DelaySystem,
    pub trajectory: DdeTrajectory,
    pub report: DecayReport,
}

/// Random systems from one seeded stream; checks start at `2 tau_max`.
pub fn dde_verification(config: &RunConfig) -> Result<Vec<DdeRun>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.dde.seed);
    let systems: Vec<DelaySystem> = (0..config.dde.systems)
        .map(|_| DelaySystem::random(&mut rng))
        .collect();
    systems
        .into_iter()
        .map(|system| {
            let t_end = config.dde.horizon * system.tau_max;
            let dt = config.dde.dt_fraction * system.tau_min;
            let trajectory = system.simulate(t_end, dt)?;
            let report = verify_decay(&trajectory, &system, 2.0 * system.tau_max);
            Ok(DdeRun {
                system,
                trajectory,
                report,
            })
        })
        .collect()
}

fn write_dde(dir: &Path, config: &RunConfig, runs: &[DdeRun]) -> Result<()> {
    for (k, r) in runs.iter().enumerate() {
        let mut o = Out::create(dir.join("dde").join(format!("system_{k:03}.csv")))?;
        o.line("t,theta")?;
        for (t, v) in r.trajectory.forward() {
            o.line(&format!("{},{}", fmt_f64(t), fmt_f64(v)))?;
        }
        o.finish()?;
    }
    let flag = |c: Option<bool>| match c {
        Some(true) => "true",
        Some(false) => "false",
        None => "skipped",
    };
    let mut o = Out::create(dir.join("dde_report.txt"))?;
    for (k, r) in runs.iter().enumerate() {
        let (s, rep) = (&r.system, &r.report);
        let p = format!("system_{k:03}");
        o.kv(&format!("{p}.tau_min"), fmt_f64(s.tau_min))?;
        o.kv(&format!("{p}.tau_max"), fmt_f64(s.tau_max))?;
        o.kv(&format!("{p}.eps_g"), fmt_f64(s.eps_g))?;
        o.kv(&format!("{p}.c"), fmt_f64(s.c))?;
        o.kv(&format!("{p}.K"), opt(rep.k))?;
        o.kv(&format!("{p}.t_start"), fmt_f64(rep.t_start))?;
        o.kv(&format!("{p}.tolerance"), fmt_f64(rep.tolerance))?;
        o.kv(&format!("{p}.monotone"), flag(rep.monotone))?;
        o.kv(&format!("{p}.worst_increase"), fmt_f64(rep.worst_increase))?;
        o.kv(&format!("{p}.contraction"), flag(rep.contraction))?;
        o.kv(&format!("{p}.worst_ratio"), fmt_f64(rep.worst_ratio))?;
        o.kv(&format!("{p}.envelope"), flag(rep.envelope))?;
        o.kv(
            &format!("{p}.worst_envelope_excess"),
            fmt_f64(rep.worst_envelope_excess),
        )?;
    }
    o.finish()?;
    let passed = runs.iter().filter(|r| r.report.all_pass()).count();
    let worst_ratio_over_k = runs
        .iter()
        .filter_map(|r| r.report.k.map(|k| r.report.worst_ratio / k))
        .fold(0.0, f64::max);
    let mut o = Out::create(dir.join("summary.txt"))?;
    o.kv("mode", config.mode.name())?;
    o.kv("systems", runs.len())?;
    o.kv("passed", passed)?;
    o.kv("all_pass", passed == runs.len())?;
    o.kv("worst_ratio_over_K", fmt_f64(worst_ratio_over_k))?;
    o.finish()
}
