//! Explicit constants and times of the closed-loop stability argument, plus
//! the diagnostics that check them on simulated trajectories.

use thiserror::Error;

use crate::controller::ControllerParams;
use crate::flux::{FluxError, FluxModel};
use crate::solver::Trajectory;
use crate::states::GridState;

/// Values below this are clamped before taking logarithms in [`fit_decay`].
pub const LOG_FLOOR: f64 = 1e-15;

/// Cells allowed in the middle zone of a two-zone profile (shock smearing).
pub const SMEAR_CELLS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("no downward crossing of the midpoint {midpoint}")]
    NoShock { midpoint: f64 },
    #[error("no samples in the fit window [{t_a}, {t_b}]")]
    WindowEmpty { t_a: f64, t_b: f64 },
    #[error("nonpositive wave speed {speed} at x = {x}, t = {t}")]
    NonPositiveSpeed { t: f64, x: f64, speed: f64 },
    #[error(transparent)]
    Flux(#[from] FluxError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub length: f64,
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub nu: f64,
    pub m: f64,
    pub u_l: f64,
    pub u_r: f64,
    /// Flux level `f(u_l - epsilon) / 2` reached once the left zone is established.
    pub a_me: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub theta: f64,
    pub c_bar: f64,
    pub c_tilde: f64,
    pub d_bar: f64,
    pub d_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub m_med: f64,
    pub nu0: f64,
    /// `max f''` on `[u_l - epsilon, u_l + epsilon]`.
    pub max_curvature: f64,
}

fn regime(msg: impl Into<String>) -> StabilityError {
    StabilityError::InvalidRegime(msg.into())
}

fn chord(flux: &FluxModel, a: f64, b: f64) -> Result<f64, StabilityError> {
    if a == b {
        return Err(regime(format!("chord speed between equal states {a}")));
    }
    Ok((flux.eval(a) - flux.eval(b)) / (a - b))
}

fn positive(name: &str, value: f64) -> Result<f64, StabilityError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(regime(format!("{name} = {value} must be positive")))
    }
}

pub fn compute_constants(
    flux: &FluxModel,
    length: f64,
    alpha: f64,
    delta: f64,
    epsilon: f64,
    nu: f64,
    m: f64,
) -> Result<StabilityConstants, StabilityError> {
    for (name, v) in [
        ("L", length),
        ("delta", delta),
        ("epsilon", epsilon),
        ("nu", nu),
        ("m", m),
    ] {
        positive(name, v)?;
    }
    if !(alpha - delta > 0.0 && alpha + delta < length) {
        return Err(regime(format!(
            "window [{}, {}] not inside (0, {length})",
            alpha - delta,
            alpha + delta
        )));
    }
    let (u_l, u_r) = flux.shock_state_pair(m)?;
    if epsilon >= u_l {
        return Err(regime(format!(
            "epsilon = {epsilon} must be below u_l = {u_l}"
        )));
    }
    let low = u_l - epsilon;
    let high = u_l + epsilon;
    let speed_low = positive("f'(u_l - epsilon)", flux.deriv(low))?;

    let a_me = flux.eval(low) / 2.0;
    let (ul_a, ur_a) = flux.shock_state_pair(positive("A", a_me)?)?;
    let t1 = (length / positive("f'(u_l(A))", flux.deriv(ul_a))?)
        .max(length / positive("-f'(u_r(A))", -flux.deriv(ur_a))?);
    let c1 = chord(flux, low, ur_a)?;
    let c2 = -chord(flux, ul_a, u_r)?;
    let t2 = t1 + length / positive("c1 + c2", c1 + c2)?;

    let c_bar = chord(flux, high, u_r)?;
    let c_tilde = chord(flux, low, u_r)?;
    let theta = (u_l / (u_l - u_r - epsilon)).max((epsilon - u_r) / (u_l + epsilon - u_r));
    let ratio = epsilon / nu;
    let d_tilde = chord(flux, u_l - ratio * low / 2.0, u_r)?;
    let d_bar = chord(flux, u_l - ratio * u_r / 2.0, u_r)?;

    let reach = theta * delta;
    let branch_right = -(length - alpha - reach) / d_tilde - length / speed_low;
    let branch_left = (alpha - reach) / speed_low + (alpha - reach) / d_bar;
    let t3 = t2 + branch_right.max(branch_left);
    let t4 = t3 + length / speed_low;

    let (_, max_curvature) = flux.second_deriv_bounds(low, high);
    let jump = (flux.eval(high) - flux.eval(u_r)).max(flux.eval(u_r) - flux.eval(low));
    let m_med = jump / (2.0 * delta) * (alpha - delta) / speed_low * max_curvature;

    let c = StabilityConstants {
        length,
        alpha,
        delta,
        epsilon,
        nu,
        m,
        u_l,
        u_r,
        a_me,
        t1,
        t2,
        t3,
        t4,
        theta,
        c_bar,
        c_tilde,
        d_bar,
        d_tilde,
        c1,
        c2,
        m_med,
        nu0: 0.5 * (u_l - u_r),
        max_curvature,
    };
    let ordering = [
        (c.c_tilde < 0.0 && c.c_bar > 0.0, "c_tilde < 0 < c_bar"),
        (c.d_tilde < 0.0 && c.d_bar > 0.0, "d_tilde < 0 < d_bar"),
        (c.c1 > 0.0 && c.c2 > 0.0, "c1, c2 > 0"),
        (c.theta > 0.0 && c.theta < 1.0, "0 < theta < 1"),
        (
            c.t1 < c.t2 && c.t2 <= c.t3 && c.t3 < c.t4,
            "T1 < T2 <= T3 < T4",
        ),
    ];
    for (ok, what) in ordering {
        if !ok {
            return Err(regime(format!("{what} violated: {c:?}")));
        }
    }
    Ok(c)
}

impl StabilityConstants {
    pub fn from_controller(flux: &FluxModel, p: &ControllerParams) -> Result<Self, StabilityError> {
        compute_constants(flux, p.length, p.alpha, p.delta, p.epsilon, p.nu, p.m)
    }

    /// Named values in a fixed order, for reports.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("u_l", self.u_l),
            ("u_r", self.u_r),
            ("A_me", self.a_me),
            ("T1", self.t1),
            ("T2", self.t2),
            ("T3", self.t3),
            ("T4", self.t4),
            ("theta", self.theta),
            ("c_bar", self.c_bar),
            ("c_tilde", self.c_tilde),
            ("d_bar", self.d_bar),
            ("d_tilde", self.d_tilde),
            ("c1", self.c1),
            ("c2", self.c2),
            ("M_med", self.m_med),
            ("nu0", self.nu0),
        ]
    }

    /// Range of the delay `(alpha - delta) / f'(u)` for `u` in `[u_l - epsilon, u_l + epsilon]`.
    pub fn delay_bracket(&self, flux: &FluxModel) -> (f64, f64) {
        let d = self.alpha - self.delta;
        (
            d / flux.deriv(self.u_l + self.epsilon),
            d / flux.deriv(self.u_l - self.epsilon),
        )
    }
}

/// One strict inequality `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `nu0 < nu` and `epsilon < nu - nu0`.
    pub gain: [Inequality; 2],
    /// Shock speed bounds against the window ratio `delta / L`, right then left.
    pub speeds: [Inequality; 2],
    /// `epsilon / nu < f'(u_l - epsilon) / M_med`.
    pub delay_continuity: Inequality,
    /// Contraction hypothesis of the delay equation for the observation.
    pub contraction: Inequality,
}

impl ValidationReport {
    pub fn condition_a(&self) -> bool {
        self.gain.iter().all(Inequality::holds)
    }
    pub fn condition_b(&self) -> bool {
        self.speeds.iter().all(Inequality::holds)
    }
    pub fn condition_c(&self) -> bool {
        self.delay_continuity.holds()
    }
    pub fn condition_d(&self) -> bool {
        self.contraction.holds()
    }
    pub fn all_pass(&self) -> bool {
        self.condition_a() && self.condition_b() && self.condition_c() && self.condition_d()
    }
    pub fn verdicts(&self) -> [(&'static str, bool); 4] {
        [
            ("condition_a", self.condition_a()),
            ("condition_b", self.condition_b()),
            ("condition_c", self.condition_c()),
            ("condition_d", self.condition_d()),
        ]
    }
}

pub fn validate_parameters(flux: &FluxModel, c: &StabilityConstants) -> ValidationReport {
    let speed_low = flux.deriv(c.u_l - c.epsilon);
    let window = c.delta / c.length;
    ValidationReport {
        gain: [
            Inequality {
                lhs: c.nu0,
                rhs: c.nu,
            },
            Inequality {
                lhs: c.epsilon,
                rhs: c.nu - c.nu0,
            },
        ],
        speeds: [
            Inequality {
                lhs: c.c_bar / ((1.0 - c.theta) * speed_low),
                rhs: window,
            },
            Inequality {
                lhs: c.c_tilde.abs() / ((1.0 - c.theta) * flux.deriv(c.u_r).abs()),
                rhs: window,
            },
        ],
        delay_continuity: Inequality {
            lhs: c.epsilon / c.nu,
            rhs: speed_low / c.m_med,
        },
        contraction: Inequality {
            lhs: 3.0 * (c.alpha - c.delta) * c.max_curvature * c.epsilon
                / (2.0 * c.delta * speed_low),
            rhs: c.nu,
        },
    }
}

/// Rightmost point where the linear interpolant of cell-center values drops
/// through `midpoint`.
pub fn locate_crossing(state: &GridState, midpoint: f64) -> Result<f64, StabilityError> {
    let v = &state.values;
    (0..v.len().saturating_sub(1))
        .rev()
        .find(|&i| v[i] > midpoint && v[i + 1] <= midpoint)
        .map(|i| state.cell_center(i) + state.dx() * (v[i] - midpoint) / (v[i] - v[i + 1]))
        .ok_or(StabilityError::NoShock { midpoint })
}

/// Position of the shock between `u_l(m)` and `u_r(m)`.
pub fn locate_shock(state: &GridState, flux: &FluxModel, m: f64) -> Result<f64, StabilityError> {
    let (u_l, u_r) = flux.shock_state_pair(m)?;
    locate_crossing(state, 0.5 * (u_l + u_r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Zone {
    Left,
    Middle,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneSnapshot {
    pub t: f64,
    pub left_cells: usize,
    pub middle_cells: usize,
    pub right_cells: usize,
    /// Zones appear left to right without interleaving.
    pub ordered: bool,
    /// Middle cells whose speed exceeds the fan bound `L / t`.
    pub fast_middle_cells: usize,
    pub three_zone: bool,
    pub two_zone: bool,
    /// `t >= T1`: the three-zone alternative is expected.
    pub expect_three: bool,
    /// `t >= T2`: the two-zone structure is expected.
    pub expect_two: bool,
}

impl ZoneSnapshot {
    /// True unless an expected structure is missing.
    pub fn consistent(&self) -> bool {
        (!self.expect_three || self.three_zone) && (!self.expect_two || self.two_zone)
    }
}

/// Value tolerance `2 dx * max f'' * (u_l - u_r + epsilon)` for zone membership.
pub fn zone_tolerance(flux: &FluxModel, c: &StabilityConstants, dx: f64) -> f64 {
    let (_, max_second) = flux.second_deriv_bounds(c.u_r, c.u_l + c.epsilon);
    2.0 * dx * max_second * (c.u_l - c.u_r + c.epsilon)
}

pub fn classify_state(state: &GridState, flux: &FluxModel, c: &StabilityConstants) -> ZoneSnapshot {
    let tol = zone_tolerance(flux, c, state.dx());
    let t = state.time;
    let labels: Vec<Zone> = state
        .values
        .iter()
        .map(|&u| {
            if (u - c.u_l).abs() <= c.epsilon + tol {
                Zone::Left
            } else if (u - c.u_r).abs() <= tol {
                Zone::Right
            } else {
                Zone::Middle
            }
        })
        .collect();
    let rank = |z: Zone| z as u8;
    let ordered = labels.windows(2).all(|w| rank(w[0]) <= rank(w[1]));
    let count = |z: Zone| labels.iter().filter(|&&l| l == z).count();
    let speed_cap = if t > 0.0 { c.length / t } else { f64::INFINITY };
    let slope_tol = tol * c.max_curvature.max(flux.convexity_bounds().1);
    let fast_middle_cells = labels
        .iter()
        .zip(&state.values)
        .filter(|(&l, &u)| l == Zone::Middle && flux.deriv(u).abs() > speed_cap + slope_tol)
        .count();
    let middle_cells = count(Zone::Middle);
    ZoneSnapshot {
        t,
        left_cells: count(Zone::Left),
        middle_cells,
        right_cells: count(Zone::Right),
        ordered,
        fast_middle_cells,
        three_zone: ordered && fast_middle_cells <= SMEAR_CELLS,
        two_zone: ordered && middle_cells <= SMEAR_CELLS,
        expect_three: t >= c.t1,
        expect_two: t >= c.t2,
    }
}

pub fn classify_zones(
    trajectory: &Trajectory,
    flux: &FluxModel,
    c: &StabilityConstants,
) -> Vec<ZoneSnapshot> {
    trajectory
        .snapshots
        .iter()
        .map(|s| classify_state(s, flux, c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate: minus the slope of `log value` against `t`.
    pub rate: f64,
    /// `exp(intercept)`, so the fitted envelope is `prefactor * exp(-rate t)`.
    pub prefactor: f64,
    pub samples: usize,
}

impl DecayFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.prefactor * (-self.rate * t).exp()
    }

    /// Largest `value / envelope` over the samples in `[t_a, t_b]`.
    pub fn worst_ratio(&self, series: &[(f64, f64)], t_a: f64, t_b: f64) -> f64 {
        series
            .iter()
            .filter(|(t, _)| *t >= t_a && *t <= t_b)
            .map(|&(t, v)| v.max(LOG_FLOOR) / self.envelope(t))
            .fold(0.0, f64::max)
    }
}

/// Least-squares fit of `log(max(value, LOG_FLOOR))` on `[t_a, t_b]`.
pub fn fit_decay(series: &[(f64, f64)], t_a: f64, t_b: f64) -> Result<DecayFit, StabilityError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= t_a && *t <= t_b)
        .map(|&(t, v)| (t, v.max(LOG_FLOOR).ln()))
        .collect();
    if pts.is_empty() {
        return Err(StabilityError::WindowEmpty { t_a, t_b });
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(DecayFit {
        rate: -slope,
        prefactor: (mean_y - slope * mean_t).exp(),
        samples: pts.len(),
    })
}

/// Delay for the state at `x = alpha - delta`, read from the cell containing that point.
pub fn delay_at(
    state: &GridState,
    flux: &FluxModel,
    alpha: f64,
    delta: f64,
) -> Result<f64, StabilityError> {
    let x = alpha - delta;
    let speed = flux.deriv(state.values[state.cell_index(x)]);
    if speed <= 0.0 {
        return Err(StabilityError::NonPositiveSpeed {
            t: state.time,
            x,
            speed,
        });
    }
    Ok(x / speed)
}

pub fn delay_series(
    trajectory: &Trajectory,
    flux: &FluxModel,
    alpha: f64,
    delta: f64,
) -> Result<Vec<(f64, f64)>, StabilityError> {
    trajectory
        .snapshots
        .iter()
        .map(|s| Ok((s.time, delay_at(s, flux, alpha, delta)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{shifted_shock, stationary_shock};

    fn burgers_constants(epsilon: f64, nu: f64) -> StabilityConstants {
        compute_constants(&FluxModel::burgers(), 1.0, 0.4, 0.1, epsilon, nu, 0.5).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let c = burgers_constants(0.1, 1.5);
        assert!((c.theta - 1.0 / 1.9).abs() < 1e-15);
        assert!((c.theta - 0.5263).abs() < 1e-4);
        assert!((c.c_bar - 0.05).abs() < 1e-14);
        assert!((c.c_tilde + 0.05).abs() < 1e-14);
        assert!((c.a_me - 0.2025).abs() < 1e-15);
        assert!((c.t1 - 1.0 / (2.0f64 * 0.2025).sqrt()).abs() < 1e-12);
        assert!((c.t1 - 1.5713).abs() < 1e-4);
        assert_eq!(c.nu0, 1.0);
        assert!((c.t4 - c.t3 - 1.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn demo_parameters_validate() {
        let flux = FluxModel::burgers();
        let c = burgers_constants(0.005, 1.2);
        let r = validate_parameters(&flux, &c);
        assert!(r.all_pass(), "{r:?}");
        // independent evaluation for Burgers: chords are averages, f' = id
        let theta = (1.0f64 / 1.995).max(1.005 / 2.005);
        assert!((c.theta - theta).abs() < 1e-15);
        let d_tilde = (1.0 - (0.005 / 1.2) * 0.995 / 2.0 - 1.0) / 2.0;
        assert!((c.d_tilde - d_tilde).abs() < 1e-15);
        let t3_gap = (-(1.0 - 0.4 - theta * 0.1) / d_tilde - 1.0 / 0.995)
            .max((0.4 - theta * 0.1) / 0.995 + (0.4 - theta * 0.1) / -d_tilde);
        assert!((c.t3 - c.t2 - t3_gap).abs() < 1e-9 * t3_gap);
    }

    #[test]
    fn failing_conditions() {
        let flux = FluxModel::burgers();
        let c = burgers_constants(0.005, 1.0);
        assert!(!validate_parameters(&flux, &c).condition_a());
        let c = burgers_constants(0.5, 3.0);
        assert!(!validate_parameters(&flux, &c).condition_b());
    }

    #[test]
    fn invalid_regime() {
        let flux = FluxModel::burgers();
        assert!(matches!(
            compute_constants(&flux, 1.0, 0.4, 0.1, 1.0, 2.0, 0.5),
            Err(StabilityError::InvalidRegime(_))
        ));
        assert!(matches!(
            compute_constants(&flux, 1.0, 0.95, 0.1, 0.01, 2.0, 0.5),
            Err(StabilityError::InvalidRegime(_))
        ));
    }

    #[test]
    fn shock_location() {
        let flux = FluxModel::burgers();
        let s = stationary_shock(1.0, 200, 0.4, 0.5, &flux).unwrap();
        assert!((locate_shock(&s, &flux, 0.5).unwrap() - 0.4).abs() < 1e-14);
        let s = shifted_shock(1.0, 200, 0.62, 0.5, &flux).unwrap();
        assert!((locate_shock(&s, &flux, 0.5).unwrap() - 0.62).abs() <= 0.005);
        let s = GridState::constant(1.0, 50, 0.3).unwrap();
        assert!(matches!(
            locate_shock(&s, &flux, 0.5),
            Err(StabilityError::NoShock { .. })
        ));
    }

    #[test]
    fn zones_of_target_and_fan() {
        let flux = FluxModel::burgers();
        let c = burgers_constants(0.005, 1.2);
        let s = stationary_shock(1.0, 400, 0.4, 0.5, &flux).unwrap();
        let z = classify_state(&s, &flux, &c);
        assert!(z.two_zone && z.three_zone && z.middle_cells == 0);

        // u_l, a Burgers fan centred at x = 0.5 seen at time 0.5, then u_r
        let t = 0.5;
        let mut fan = GridState::from_profile(1.0, 400, 1, |x| {
            if x < 0.3 {
                c.u_l
            } else if x < 0.7 {
                (x - 0.5) / t
            } else {
                c.u_r
            }
        })
        .unwrap();
        fan.time = t;
        let z = classify_state(&fan, &flux, &c);
        assert!(!z.two_zone);
        assert!(z.ordered && z.middle_cells > 100);
        // fan speeds stay below L / t = 2
        assert!(z.three_zone);
    }

    #[test]
    fn decay_fit() {
        let series: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.1;
                (t, 2.0 * (-0.3 * t).exp())
            })
            .collect();
        let fit = fit_decay(&series, 0.0, 10.0).unwrap();
        assert!((fit.rate - 0.3).abs() < 1e-10);
        assert!((fit.prefactor - 2.0).abs() < 1e-9);
        assert!((fit.worst_ratio(&series, 0.0, 10.0) - 1.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.7)).collect();
        assert_eq!(fit_decay(&flat, 0.0, 9.0).unwrap().rate, 0.0);
        assert!(matches!(
            fit_decay(&flat, 20.0, 30.0),
            Err(StabilityError::WindowEmpty { .. })
        ));
    }

    #[test]
    fn delay_at_equilibrium() {
        let flux = FluxModel::burgers();
        let s = stationary_shock(1.0, 400, 0.4, 0.5, &flux).unwrap();
        assert!((delay_at(&s, &flux, 0.4, 0.1).unwrap() - 0.3).abs() < 1e-15);
        let neg = GridState::constant(1.0, 400, -0.5).unwrap();
        assert!(matches!(
            delay_at(&neg, &flux, 0.4, 0.1),
            Err(StabilityError::NonPositiveSpeed { .. })
        ));
        let c = burgers_constants(0.005, 1.2);
        let (lo, hi) = c.delay_bracket(&flux);
        assert!(lo < 0.3 && 0.3 < hi);
    }
}
