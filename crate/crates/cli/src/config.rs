//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use shockloop::flux::{FluxKind, FluxModel};
use shockloop::ControllerParams;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse errors: {}", join(.0))]
    Parse(Vec<LineError>),
    #[error("invalid configuration: {}", join(.0))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ClosedLoop,
    OpenLoop,
    ConvergenceStudy,
    DelayOdeVerify,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::ClosedLoop => "closed-loop",
            Mode::OpenLoop => "open-loop",
            Mode::ConvergenceStudy => "convergence-study",
            Mode::DelayOdeVerify => "delay-ode-verify",
            Mode::Sweep => "sweep",
        }
    }

    fn uses_controller(self) -> bool {
        matches!(self, Mode::ClosedLoop | Mode::OpenLoop | Mode::Sweep)
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "closed-loop" => Mode::ClosedLoop,
            "open-loop" => Mode::OpenLoop,
            "convergence-study" => Mode::ConvergenceStudy,
            "delay-ode-verify" => Mode::DelayOdeVerify,
            "sweep" => Mode::Sweep,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    Target,
    ShiftedShock { beta: f64 },
    Sine { amplitude: f64, wavenumber: f64 },
    Random { amplitude: f64 },
    Constant { value: f64 },
}

/// Final time: fixed, or a margin past the fourth stability time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    AfterT4(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdeConfig {
    pub systems: usize,
    pub seed: u64,
    /// Horizon in units of `tau_max`.
    pub horizon: f64,
    /// `dt = dt_fraction * tau_min`.
    pub dt_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub flux: FluxKind,
    pub length: f64,
    pub n_cells: usize,
    pub cfl: f64,
    pub horizon: Horizon,
    /// `None` means `t_end / 50`.
    pub snapshot_every: Option<f64>,
    /// Controller trace keeps every `trace_stride`-th step.
    pub trace_stride: usize,
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub m: f64,
    pub initial: InitialData,
    pub seed: u64,
    pub left_datum: Option<f64>,
    pub right_datum: Option<f64>,
    pub sweep_epsilon: Vec<f64>,
    pub sweep_nu: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
    pub riemann: Vec<(f64, f64)>,
    pub riemann_position: Option<f64>,
    pub conv_cells: Vec<usize>,
    pub conv_time: f64,
    pub eta: Option<f64>,
    pub dde: DdeConfig,
}

const KEYS: &[&str] = &[
    "mode",
    "flux",
    "flux_scale",
    "length",
    "n_cells",
    "cfl",
    "t_end",
    "snapshot_every",
    "trace_stride",
    "alpha",
    "delta",
    "epsilon",
    "nu",
    "m",
    "initial",
    "initial_beta",
    "initial_value",
    "perturbation_amplitude",
    "perturbation_wavenumber",
    "seed",
    "left_datum",
    "right_datum",
    "sweep_epsilon",
    "sweep_nu",
    "sweep_seeds",
    "riemann_left",
    "riemann_right",
    "riemann_position",
    "conv_cells",
    "conv_time",
    "eta",
    "dde_systems",
    "dde_seed",
    "dde_horizon",
    "dde_dt_fraction",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    errors: Vec<LineError>,
}

impl Entries {
    fn err(&mut self, line: usize, message: String) {
        self.errors.push(LineError { line, message });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let (line, raw) = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let raw = raw.to_string();
                self.err(line, format!("`{key}`: cannot parse `{raw}`"));
                None
            }
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> T {
        self.get(key).unwrap_or(default)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Option<Vec<T>> {
        let (line, raw) = self.raw(key)?;
        let raw = raw.to_string();
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<T>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.err(line, format!("`{key}`: cannot parse list item `{item}`"));
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Records a missing required key (line 0: not tied to a line).
    fn required<T: FromStr>(&mut self, key: &str, needed: bool) -> Option<T> {
        if self.raw(key).is_none() {
            if needed {
                self.err(0, format!("missing required key `{key}`"));
            }
            return None;
        }
        self.get(key)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = Entries {
        map: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            e.err(line, format!("expected `key = value`, got `{content}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            e.err(line, format!("unknown key `{key}`"));
        } else if value.is_empty() {
            e.err(line, format!("`{key}` has no value"));
        } else if let Some((first, _)) = e.map.get(key) {
            let first = *first;
            e.err(
                line,
                format!("duplicate key `{key}` (first set on line {first})"),
            );
        } else {
            e.map.insert(key.to_string(), (line, value.to_string()));
        }
    }

    let mode: Mode = e.or("mode", Mode::ClosedLoop);
    let controlled = mode.uses_controller();
    let flux_name: String = e.or("flux", "burgers".to_string());
    let flux_scale: f64 = e.or("flux_scale", 1.0);
    let flux = match FluxKind::from_name(&flux_name, flux_scale) {
        Ok(f) => Some(f),
        Err(err) => {
            let line = e.raw("flux").map(|p| p.0).unwrap_or(0);
            e.err(line, err.to_string());
            None
        }
    };
    let horizon = match e.raw("t_end") {
        Some((_, v)) if v.starts_with("auto") => {
            let margin = v
                .trim_start_matches("auto")
                .trim()
                .trim_start_matches('+')
                .trim();
            if margin.is_empty() {
                Some(Horizon::AfterT4(50.0))
            } else {
                match margin.parse::<f64>() {
                    Ok(m) => Some(Horizon::AfterT4(m)),
                    Err(_) => {
                        let line = e.raw("t_end").map(|p| p.0).unwrap_or(0);
                        e.err(line, format!("`t_end`: cannot parse `{v}`"));
                        None
                    }
                }
            }
        }
        _ => e.required::<f64>("t_end", controlled).map(Horizon::Fixed),
    };
    let initial_name: String = e.or("initial", "target".to_string());
    let initial = match initial_name.as_str() {
        "target" => Some(InitialData::Target),
        "shifted-shock" => e
            .required("initial_beta", true)
            .map(|beta| InitialData::ShiftedShock { beta }),
        "perturbed-sine" => {
            let amplitude = e.required("perturbation_amplitude", true);
            let wavenumber = e.or("perturbation_wavenumber", 1.0);
            amplitude.map(|amplitude| InitialData::Sine {
                amplitude,
                wavenumber,
            })
        }
        "perturbed-random" => e
            .required("perturbation_amplitude", true)
            .map(|amplitude| InitialData::Random { amplitude }),
        "constant" => e
            .required("initial_value", true)
            .map(|value| InitialData::Constant { value }),
        other => {
            let line = e.raw("initial").map(|p| p.0).unwrap_or(0);
            e.err(line, format!("unknown initial data `{other}`"));
            None
        }
    };
    let sweeping = mode == Mode::Sweep;
    let seed: u64 = e.or("seed", 1);
    let riemann_left: Vec<f64> = e.list("riemann_left").unwrap_or_default();
    let riemann_right: Vec<f64> = e.list("riemann_right").unwrap_or_default();
    if riemann_left.len() != riemann_right.len() {
        let line = e.raw("riemann_right").map(|p| p.0).unwrap_or(0);
        e.err(
            line,
            format!(
                "riemann_left has {} entries but riemann_right has {}",
                riemann_left.len(),
                riemann_right.len()
            ),
        );
    }
    let cfg = RunConfig {
        mode,
        flux: flux.unwrap_or(FluxKind::Burgers { scale: 1.0 }),
        length: e.or(
            "length",
            if mode == Mode::ConvergenceStudy {
                2.0
            } else {
                1.0
            },
        ),
        n_cells: e.required("n_cells", controlled).unwrap_or(0),
        cfl: e.or("cfl", shockloop::solver::DEFAULT_CFL),
        horizon: horizon.unwrap_or(Horizon::Fixed(0.0)),
        snapshot_every: e.get("snapshot_every"),
        trace_stride: e.or("trace_stride", 1),
        alpha: e.required("alpha", controlled).unwrap_or(0.0),
        delta: e.required("delta", controlled).unwrap_or(0.0),
        epsilon: e
            .required("epsilon", controlled && !sweeping)
            .unwrap_or(0.0),
        nu: e.required("nu", controlled && !sweeping).unwrap_or(0.0),
        m: e.required("m", controlled).unwrap_or(0.0),
        initial: initial.unwrap_or(InitialData::Target),
        seed,
        left_datum: e.get("left_datum"),
        right_datum: e.get("right_datum"),
        sweep_epsilon: e.list("sweep_epsilon").unwrap_or_default(),
        sweep_nu: e.list("sweep_nu").unwrap_or_default(),
        sweep_seeds: e.list("sweep_seeds").unwrap_or_else(|| vec![seed]),
        riemann: riemann_left.into_iter().zip(riemann_right).collect(),
        riemann_position: e.get("riemann_position"),
        conv_cells: e
            .list("conv_cells")
            .unwrap_or_else(|| vec![100, 200, 400, 800]),
        conv_time: e.or("conv_time", 0.3),
        eta: e.get("eta"),
        dde: DdeConfig {
            systems: e.or("dde_systems", 100),
            seed: e.or("dde_seed", 1),
            horizon: e.or("dde_horizon", 20.0),
            dt_fraction: e.or("dde_dt_fraction", 0.01),
        },
    };
    if !e.errors.is_empty() {
        e.errors.sort_by_key(|l| l.line);
        return Err(ConfigError::Parse(e.errors));
    }
    let problems = cfg.validate();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(problems))
    }
}

impl RunConfig {
    /// Every violated precondition, in a fixed order.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let flux = FluxModel::new(self.flux, -1.0, 1.0).map(|_| ());
        if let Err(err) = flux {
            out.push(format!("flux: {err}"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            out.push(format!("length = {} must be positive", self.length));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            out.push(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if self.trace_stride == 0 {
            out.push("trace_stride must be at least 1".into());
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0 && s.is_finite()) {
                out.push(format!("snapshot_every = {s} must be positive"));
            }
        }
        match self.mode {
            Mode::ClosedLoop | Mode::OpenLoop | Mode::Sweep => self.validate_controlled(&mut out),
            Mode::ConvergenceStudy => self.validate_convergence(&mut out),
            Mode::DelayOdeVerify => self.validate_dde(&mut out),
        }
        out
    }

    fn validate_controlled(&self, out: &mut Vec<String>) {
        match self.horizon {
            Horizon::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                out.push(format!("t_end = {t} must be positive"))
            }
            Horizon::AfterT4(m) if !(m >= 0.0 && m.is_finite()) => {
                out.push(format!("t_end margin {m} must be nonnegative"))
            }
            _ => {}
        }
        if self.n_cells < shockloop::states::MIN_CELLS {
            out.push(format!(
                "n_cells = {} must be at least {}",
                self.n_cells,
                shockloop::states::MIN_CELLS
            ));
        }
        if !(self.alpha - self.delta > 0.0 && self.alpha + self.delta < self.length) {
            out.push(format!(
                "[α−δ,α+δ]⊂(0,L) violated: [{}, {}] with L = {}",
                self.alpha - self.delta,
                self.alpha + self.delta,
                self.length
            ));
        }
        if self.delta > 0.0 && self.n_cells > 0 {
            let cells = 2.0 * self.delta * self.n_cells as f64 / self.length;
            if cells < shockloop::controller::MIN_WINDOW_CELLS {
                out.push(format!(
                    "observation window covers {cells:.2} cells, need at least {}",
                    shockloop::controller::MIN_WINDOW_CELLS
                ));
            }
        }
        if !(self.m > 0.0) {
            out.push(format!("m = {} must be positive", self.m));
        }
        let gains: Vec<(f64, f64)> = if self.mode == Mode::Sweep {
            if self.sweep_epsilon.is_empty() || self.sweep_nu.is_empty() {
                out.push("sweep needs nonempty sweep_epsilon and sweep_nu".into());
            }
            if self.sweep_seeds.is_empty() {
                out.push("sweep_seeds must not be empty".into());
            }
            self.sweep_epsilon
                .iter()
                .flat_map(|&eps| self.sweep_nu.iter().map(move |&nu| (eps, nu)))
                .collect()
        } else {
            vec![(self.epsilon, self.nu)]
        };
        let Ok(flux) = self.flux_model() else {
            return;
        };
        for (eps, nu) in gains {
            if let Err(err) =
                ControllerParams::new(&flux, self.length, self.alpha, self.delta, eps, nu, self.m)
            {
                let msg = format!("controller (epsilon = {eps}, nu = {nu}): {err}");
                if !out.iter().any(|o| o.starts_with("[α−δ,α+δ]")) || !msg.contains("not inside")
                {
                    out.push(msg);
                }
            }
        }
        if let InitialData::ShiftedShock { beta } = self.initial {
            if !(beta > 0.0 && beta < self.length) {
                out.push(format!("initial_beta = {beta} must lie in (0, L)"));
            }
        }
        if let InitialData::Sine { amplitude, .. } | InitialData::Random { amplitude } =
            self.initial
        {
            if !(amplitude >= 0.0) {
                out.push(format!(
                    "perturbation_amplitude = {amplitude} must be nonnegative"
                ));
            }
        }
    }

    fn validate_convergence(&self, out: &mut Vec<String>) {
        if self.riemann.is_empty() {
            out.push("convergence-study needs riemann_left and riemann_right".into());
        }
        if self.conv_cells.len() < 2 {
            out.push("conv_cells needs at least two meshes".into());
        }
        if self
            .conv_cells
            .iter()
            .any(|&n| n < shockloop::states::MIN_CELLS)
        {
            out.push("every conv_cells entry must be at least 4".into());
        }
        if !(self.conv_time > 0.0) {
            out.push(format!("conv_time = {} must be positive", self.conv_time));
        }
        let x0 = self.riemann_position.unwrap_or(self.length / 2.0);
        if !(x0 > 0.0 && x0 < self.length) {
            out.push(format!("riemann_position = {x0} must lie in (0, L)"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                out.push(format!("eta = {eta} must be positive"));
            }
        }
        if let Ok(flux) = self.flux_model() {
            for &(a, b) in &self.riemann {
                if !(flux.contains(a) && flux.contains(b)) {
                    out.push(format!(
                        "riemann states ({a}, {b}) outside the flux interval"
                    ));
                }
                // causality margin: waves must not reach either boundary by conv_time
                let reach = flux.deriv(a).abs().max(flux.deriv(b).abs()) * self.conv_time;
                if x0 - reach <= 0.0 || x0 + reach >= self.length {
                    out.push(format!(
                        "riemann ({a}, {b}): waves reach a boundary before conv_time"
                    ));
                }
            }
        }
    }

    fn validate_dde(&self, out: &mut Vec<String>) {
        if self.dde.systems == 0 {
            out.push("dde_systems must be at least 1".into());
        }
        if !(self.dde.horizon > 0.0) {
            out.push(format!(
                "dde_horizon = {} must be positive",
                self.dde.horizon
            ));
        }
        if !(self.dde.dt_fraction > 0.0 && self.dde.dt_fraction <= 0.1) {
            out.push(format!(
                "dde_dt_fraction = {} must lie in (0, 0.1]",
                self.dde.dt_fraction
            ));
        }
    }

    /// Flux on an interval wide enough for every state the run can produce.
    pub fn flux_model(&self) -> Result<FluxModel, shockloop::FluxError> {
        let mut reach: f64 = 1.0;
        if self.m > 0.0 {
            if let Ok(f) = FluxModel::new(self.flux, -50.0, 50.0) {
                if let Ok((ul, ur)) = f.shock_state_pair(self.m) {
                    reach = reach.max(ul.abs()).max(ur.abs());
                }
            }
        }
        for &(a, b) in &self.riemann {
            reach = reach.max(a.abs()).max(b.abs());
        }
        for d in [self.left_datum, self.right_datum].into_iter().flatten() {
            reach = reach.max(d.abs());
        }
        if let InitialData::Constant { value } = self.initial {
            reach = reach.max(value.abs());
        }
        FluxModel::new(self.flux, -3.0 * reach, 3.0 * reach)
    }

    /// Replaces every seed (perturbations, sweeps and random delay systems).
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sweep_seeds = vec![seed];
        self.dde.seed = seed;
    }

    /// Canonical echo with every default filled in; parses back to `self`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.name().into());
        kv("flux", self.flux.name().into());
        kv("flux_scale", format!("{:?}", self.flux.scale()));
        kv("length", format!("{:?}", self.length));
        kv("cfl", format!("{:?}", self.cfl));
        match self.mode {
            Mode::ClosedLoop | Mode::OpenLoop | Mode::Sweep => {
                kv("n_cells", self.n_cells.to_string());
                kv(
                    "t_end",
                    match self.horizon {
                        Horizon::Fixed(t) => format!("{t:?}"),
                        Horizon::AfterT4(m) => format!("auto + {m:?}"),
                    },
                );
                if let Some(sn) = self.snapshot_every {
                    kv("snapshot_every", format!("{sn:?}"));
                }
                kv("trace_stride", self.trace_stride.to_string());
                kv("alpha", format!("{:?}", self.alpha));
                kv("delta", format!("{:?}", self.delta));
                if self.mode == Mode::Sweep {
                    kv("sweep_epsilon", list(&self.sweep_epsilon));
                    kv("sweep_nu", list(&self.sweep_nu));
                    kv(
                        "sweep_seeds",
                        self.sweep_seeds
                            .iter()
                            .map(u64::to_string)
                            .collect::<Vec<_>>()
                            .join(", "),
                    );
                } else {
                    kv("epsilon", format!("{:?}", self.epsilon));
                    kv("nu", format!("{:?}", self.nu));
                }
                kv("m", format!("{:?}", self.m));
                match self.initial {
                    InitialData::Target => kv("initial", "target".into()),
                    InitialData::ShiftedShock { beta } => {
                        kv("initial", "shifted-shock".into());
                        kv("initial_beta", format!("{beta:?}"));
                    }
                    InitialData::Sine {
                        amplitude,
                        wavenumber,
                    } => {
                        kv("initial", "perturbed-sine".into());
                        kv("perturbation_amplitude", format!("{amplitude:?}"));
                        kv("perturbation_wavenumber", format!("{wavenumber:?}"));
                    }
                    InitialData::Random { amplitude } => {
                        kv("initial", "perturbed-random".into());
                        kv("perturbation_amplitude", format!("{amplitude:?}"));
                    }
                    InitialData::Constant { value } => {
                        kv("initial", "constant".into());
                        kv("initial_value", format!("{value:?}"));
                    }
                }
                kv("seed", self.seed.to_string());
                if let Some(d) = self.left_datum {
                    kv("left_datum", format!("{d:?}"));
                }
                if let Some(d) = self.right_datum {
                    kv("right_datum", format!("{d:?}"));
                }
            }
            Mode::ConvergenceStudy => {
                let (l, r): (Vec<f64>, Vec<f64>) = self.riemann.iter().copied().unzip();
                kv("riemann_left", list(&l));
                kv("riemann_right", list(&r));
                if let Some(x) = self.riemann_position {
                    kv("riemann_position", format!("{x:?}"));
                }
                kv(
                    "conv_cells",
                    self.conv_cells
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(", "),
                );
                kv("conv_time", format!("{:?}", self.conv_time));
                if let Some(eta) = self.eta {
                    kv("eta", format!("{eta:?}"));
                }
            }
            Mode::DelayOdeVerify => {
                kv("dde_systems", self.dde.systems.to_string());
                kv("dde_seed", self.dde.seed.to_string());
                kv("dde_horizon", format!("{:?}", self.dde.horizon));
                kv("dde_dt_fraction", format!("{:?}", self.dde.dt_fraction));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# demo
t_end = 100
n_cells = 200
alpha = 0.4
delta = 0.1
epsilon = 0.005
nu = 1.2
m = 0.5
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.mode, Mode::ClosedLoop);
        assert_eq!(c.cfl, 0.5);
        assert_eq!(c.snapshot_every, None);
        assert_eq!(c.horizon, Horizon::Fixed(100.0));
        assert_eq!(c.flux.name(), "burgers");
        assert_eq!(c.initial, InitialData::Target);
    }

    #[test]
    fn echo_round_trips() {
        let texts = [
            MINIMAL.to_string(),
            format!("{MINIMAL}initial = perturbed-sine\nperturbation_amplitude = 0.3\nsnapshot_every = 2.5\n"),
            "mode = convergence-study\nflux = cosh\nriemann_left = 1, -1\nriemann_right = -0.6, 1\n".to_string(),
            "mode = delay-ode-verify\ndde_systems = 5\n".to_string(),
            "mode = sweep\nt_end = auto + 20\nn_cells = 200\nalpha = 0.4\ndelta = 0.1\nm = 0.5\nsweep_epsilon = 0.005, 0.01\nsweep_nu = 1.2, 2\ninitial = shifted-shock\ninitial_beta = 0.7\n".to_string(),
        ];
        for t in texts {
            let c = parse_config(&t).unwrap();
            assert_eq!(parse_config(&c.to_ini()).unwrap(), c, "{t}");
        }
    }

    #[test]
    fn window_outside_domain() {
        let text = MINIMAL.replace("alpha = 0.4", "alpha = 1.5");
        match parse_config(&text) {
            Err(ConfigError::Validation(v)) => {
                assert!(
                    v.iter().any(|m| m.contains("[α−δ,α+δ]⊂(0,L) violated")),
                    "{v:?}"
                )
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_are_collected() {
        let text = format!("{MINIMAL}nu = 2\nbogus = 1\nthis line is broken\ncfl = fast\n");
        match parse_config(&text) {
            Err(ConfigError::Parse(errs)) => {
                let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
                assert_eq!(lines, vec![9, 10, 11, 12], "{errs:?}");
                assert!(errs[0].message.contains("duplicate"));
                assert!(errs[1].message.contains("unknown key"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_keys_reported() {
        match parse_config("n_cells = 10\n") {
            Err(ConfigError::Parse(errs)) => {
                assert!(
                    errs.iter()
                        .filter(|e| e.message.contains("missing"))
                        .count()
                        >= 5
                )
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_override() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.override_seed(99);
        assert_eq!(
            (c.seed, c.dde.seed, c.sweep_seeds.clone()),
            (99, 99, vec![99])
        );
    }
}
