//! Scalar delay equations `theta'(t) = g(theta(t - tau(t)))` with a bounded,
//! time-dependent delay, and a numerical check of their contraction estimate.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::Rng;
use thiserror::Error;

type Scalar = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sample count used when checking hypotheses on `[-M, M]` and on time windows.
const HYPOTHESIS_SAMPLES: usize = 401;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("|theta({t})| = {value} exceeds the a-priori bound {bound}")]
    BoundViolated { t: f64, value: f64, bound: f64 },
    #[error("delay tau({t}) = {tau} outside [{tau_min}, {tau_max}]")]
    BadDelay {
        t: f64,
        tau: f64,
        tau_min: f64,
        tau_max: f64,
    },
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("time step {dt} must be positive and at most tau_min / 10 = {limit}")]
    BadStep { dt: f64, limit: f64 },
}

pub struct DelaySystem {
    pub g: Scalar,
    pub tau: Scalar,
    /// Initial data on `[-3 tau_max, 0]`.
    pub history: Scalar,
    /// A-priori bound on `|theta|`.
    pub bound: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Slope bracket `-eps_g <= g' <= -c` on `[-bound, bound]`.
    pub c: f64,
    pub eps_g: f64,
}

impl std::fmt::Debug for DelaySystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelaySystem")
            .field("bound", &self.bound)
            .field("tau_min", &self.tau_min)
            .field("tau_max", &self.tau_max)
            .field("c", &self.c)
            .field("eps_g", &self.eps_g)
            .finish_non_exhaustive()
    }
}

/// Uniform-grid trajectory: `values[j]` is `theta(t0 + j dt)`, history included.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl DdeTrajectory {
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let x = (t - self.t0) / self.dt;
        (x - 1e-9).ceil().max(0.0) as usize
    }

    /// Linear interpolation between grid samples, clamped to the stored range.
    pub fn eval(&self, t: f64) -> f64 {
        let x = ((t - self.t0) / self.dt).max(0.0);
        let j = (x.floor() as usize).min(self.values.len() - 1);
        if j + 1 >= self.values.len() {
            return self.values[j];
        }
        let w = x - j as f64;
        self.values[j] + w * (self.values[j + 1] - self.values[j])
    }

    /// Samples with `t >= 0` as `(t, theta)` pairs.
    pub fn forward(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let start = self.index_at(0.0);
        (start..self.values.len()).map(move |j| (self.time(j), self.values[j]))
    }
}

impl DelaySystem {
    /// Checks `g(0) = 0`, the slope bracket, `0 < c <= eps_g` and the delay range on samples.
    pub fn check_hypotheses(&self, horizon: f64) -> Result<(), DdeError> {
        if !(self.c > 0.0 && self.c <= self.eps_g) {
            return Err(DdeError::HypothesisFailed(format!(
                "need 0 < c <= eps_g, got c = {}, eps_g = {}",
                self.c, self.eps_g
            )));
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau_max) {
            return Err(DdeError::HypothesisFailed(format!(
                "need 0 < tau_min <= tau_max, got {} and {}",
                self.tau_min, self.tau_max
            )));
        }
        let g0 = (self.g)(0.0);
        if g0.abs() > 1e-14 {
            return Err(DdeError::HypothesisFailed(format!("g(0) = {g0} is not 0")));
        }
        let n = HYPOTHESIS_SAMPLES;
        let h = 2.0 * self.bound / (n - 1) as f64;
        let slack = 1e-9 * self.eps_g.max(1.0);
        for k in 0..n - 1 {
            let a = -self.bound + k as f64 * h;
            let slope = ((self.g)(a + h) - (self.g)(a)) / h;
            if slope < -self.eps_g - slack || slope > -self.c + slack {
                return Err(DdeError::HypothesisFailed(format!(
                    "g' = {slope} near {a} outside [-{}, -{}]",
                    self.eps_g, self.c
                )));
            }
        }
        for k in 0..n {
            let t = horizon * k as f64 / (n - 1) as f64;
            self.checked_delay(t)?;
        }
        Ok(())
    }

    fn checked_delay(&self, t: f64) -> Result<f64, DdeError> {
        let tau = (self.tau)(t);
        let slack = 1e-12 * self.tau_max;
        if !(tau >= self.tau_min - slack && tau <= self.tau_max + slack) {
            return Err(DdeError::BadDelay {
                t,
                tau,
                tau_min: self.tau_min,
                tau_max: self.tau_max,
            });
        }
        Ok(tau)
    }

    /// `eps_g (tau_min + tau_max) <= 1`: the window maximum cannot grow.
    pub fn hypo_monotone(&self) -> bool {
        self.eps_g * (self.tau_min + self.tau_max) <= 1.0
    }

    /// `eps_g (2 tau_max + tau_min) < 1`: the window maximum contracts.
    pub fn hypo_contraction(&self) -> bool {
        self.eps_g * (2.0 * self.tau_max + self.tau_min) < 1.0
    }

    /// Method of steps with the explicit midpoint rule; delayed values by
    /// linear interpolation of the stored trajectory.
    pub fn simulate(&self, t_end: f64, dt: f64) -> Result<DdeTrajectory, DdeError> {
        let limit = self.tau_min / 10.0;
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(DdeError::BadStep { dt, limit });
        }
        let lead = (3.0 * self.tau_max / dt - 1e-9).ceil() as usize;
        let t0 = -(lead as f64) * dt;
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        let mut traj = DdeTrajectory {
            t0,
            dt,
            values: Vec::with_capacity(lead + steps + 1),
        };
        for j in 0..=lead {
            let t = t0 + j as f64 * dt;
            let v = (self.history)(t.min(0.0));
            self.check_bound(t, v)?;
            traj.values.push(v);
        }
        for n in 0..steps {
            let t_mid = (n as f64 + 0.5) * dt;
            let delayed_t = t_mid - self.checked_delay(t_mid)?;
            let delayed = if delayed_t <= 0.0 {
                (self.history)(delayed_t)
            } else {
                traj.eval(delayed_t)
            };
            let next = traj.values[lead + n] + dt * (self.g)(delayed);
            self.check_bound((n + 1) as f64 * dt, next)?;
            traj.values.push(next);
        }
        Ok(traj)
    }

    fn check_bound(&self, t: f64, value: f64) -> Result<(), DdeError> {
        if !(value.abs() <= self.bound) {
            return Err(DdeError::BoundViolated {
                t,
                value,
                bound: self.bound,
            });
        }
        Ok(())
    }

    pub fn contraction_constant(&self) -> Result<f64, DdeError> {
        contraction_constant(self.eps_g, self.c, self.tau_min, self.tau_max)
    }

    /// Tolerance `10 dt eps_g M` used by the decay checks.
    pub fn tolerance(&self, dt: f64) -> f64 {
        10.0 * dt * self.eps_g * self.bound
    }

    /// A random system satisfying the contraction hypothesis with `M = 1`;
    /// history amplitude at most 0.6 keeps the first delay interval inside the bound.
    pub fn random(rng: &mut impl Rng) -> Self {
        let tau_min: f64 = rng.gen_range(0.5..1.5);
        let tau_max = tau_min * rng.gen_range(1.0..1.4);
        let eps_g = rng.gen_range(0.2..0.95) / (2.0 * tau_max + tau_min);
        let a = eps_g * rng.gen_range(0.3..1.0);
        let b = eps_g - a;
        let bound = 1.0_f64;
        let c = a + b / bound.cosh().powi(2);
        let omega: f64 = rng.gen_range(0.2..2.0);
        let phase: f64 = rng.gen_range(0.0..TAU);
        let centre = 0.5 * (tau_min + tau_max);
        let swing = 0.5 * (tau_max - tau_min);
        let amp: f64 = rng.gen_range(-0.6..0.6);
        let freq: f64 = rng.gen_range(0.0..3.0);
        let hist_phase: f64 = rng.gen_range(0.0..TAU);
        DelaySystem {
            g: Box::new(move |z| -(a * z + b * z.tanh())),
            tau: Box::new(move |t| centre + swing * (omega * t + phase).sin()),
            history: Box::new(move |s| amp * (freq * s + hist_phase).cos()),
            bound,
            tau_min,
            tau_max,
            c,
            eps_g,
        }
    }
}

/// `K = (1 + eps_g (2 tau_max + tau_min) c tau_max) / (1 + c tau_max)`.
pub fn contraction_constant(
    eps_g: f64,
    c: f64,
    tau_min: f64,
    tau_max: f64,
) -> Result<f64, DdeError> {
    let q = eps_g * (2.0 * tau_max + tau_min);
    if !(q < 1.0) {
        return Err(DdeError::HypothesisFailed(format!(
            "eps_g (2 tau_max + tau_min) = {q} must be < 1"
        )));
    }
    let k = (1.0 + q * c * tau_max) / (1.0 + c * tau_max);
    debug_assert!(k < 1.0 || c == 0.0);
    Ok(k)
}

/// `B(t_j) = max |theta|` over the samples in `[t_j - 3 tau_max, t_j]`.
pub fn window_max(traj: &DdeTrajectory, tau_max: f64) -> Vec<f64> {
    let w = (3.0 * tau_max / traj.dt + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(traj.values.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (j, v) in traj.values.iter().enumerate() {
        let a = v.abs();
        while deque.back().is_some_and(|&k| traj.values[k].abs() <= a) {
            deque.pop_back();
        }
        deque.push_back(j);
        while deque.front().is_some_and(|&k| k + w < j) {
            deque.pop_front();
        }
        out.push(traj.values[*deque.front().expect("nonempty")].abs());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub k: Option<f64>,
    pub t_start: f64,
    pub tolerance: f64,
    pub hypo_monotone: bool,
    pub hypo_contraction: bool,
    /// `B` nonincreasing; `None` when its hypothesis does not hold.
    pub monotone: Option<bool>,
    pub worst_increase: f64,
    /// `B(t + 3 tau_max) <= K B(t)` at every sample.
    pub contraction: Option<bool>,
    pub worst_ratio: f64,
    /// `|theta(t)| <= K^((t - t0) / 3 tau_max) B(t0)`.
    pub envelope: Option<bool>,
    pub worst_envelope_excess: f64,
    pub samples: usize,
}

impl DecayReport {
    /// True when every check whose hypothesis holds has passed.
    pub fn all_pass(&self) -> bool {
        [self.monotone, self.contraction, self.envelope]
            .iter()
            .all(|c| c.unwrap_or(true))
    }
}

/// Checks the window maximum on `t >= t_start` for monotonicity, one-period
/// contraction by `K`, and the exponential envelope from `t_start`.
pub fn verify_decay(traj: &DdeTrajectory, system: &DelaySystem, t_start: f64) -> DecayReport {
    let tol = system.tolerance(traj.dt);
    let b = window_max(traj, system.tau_max);
    let start = traj.index_at(t_start).min(traj.values.len() - 1);
    let k = system.contraction_constant().ok();
    let hypo_monotone = system.hypo_monotone();
    let hypo_contraction = system.hypo_contraction();

    let worst_increase = (start..b.len().saturating_sub(1))
        .map(|j| b[j + 1] - b[j])
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);

    let period = (3.0 * system.tau_max / traj.dt - 1e-9).ceil() as usize;
    let mut worst_ratio = 0.0_f64;
    let mut contraction_ok = true;
    let mut envelope_ok = true;
    let mut worst_envelope_excess = f64::NEG_INFINITY;
    if let Some(k) = k {
        for j in start..b.len().saturating_sub(period) {
            let later = b[j + period];
            if b[j] > 0.0 {
                worst_ratio = worst_ratio.max(later / b[j]);
            }
            if later > k * b[j] + tol {
                contraction_ok = false;
            }
        }
        let b0 = b[start];
        let rate = k.ln() / (3.0 * system.tau_max);
        for j in start..traj.values.len() {
            let excess =
                traj.values[j].abs() - (rate * (traj.time(j) - traj.time(start))).exp() * b0;
            worst_envelope_excess = worst_envelope_excess.max(excess);
            if excess > tol {
                envelope_ok = false;
            }
        }
    }
    DecayReport {
        k,
        t_start: traj.time(start),
        tolerance: tol,
        hypo_monotone,
        hypo_contraction,
        monotone: hypo_monotone.then_some(worst_increase <= tol),
        worst_increase,
        contraction: (hypo_contraction && k.is_some()).then_some(contraction_ok),
        worst_ratio,
        envelope: (hypo_contraction && k.is_some()).then_some(envelope_ok),
        worst_envelope_excess: worst_envelope_excess.max(0.0),
        samples: traj.values.len() - start,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(slope: f64, tau: f64, history: f64, eps_g: f64) -> DelaySystem {
        DelaySystem {
            g: Box::new(move |z| -slope * z),
            tau: Box::new(move |_| tau),
            history: Box::new(move |_| history),
            bound: 1.0,
            tau_min: tau,
            tau_max: tau,
            c: slope,
            eps_g,
        }
    }

    #[test]
    fn origin_is_stationary() {
        let s = linear(0.5, 1.0, 0.0, 0.5);
        let traj = s.simulate(10.0, 0.01).unwrap();
        assert!(traj.values.iter().all(|&v| v == 0.0));
        let r = verify_decay(&traj, &linear(0.2, 1.0, 0.0, 0.2), 2.0);
        assert_eq!(r.worst_ratio, 0.0);
        assert!(r.all_pass());
    }

    #[test]
    fn first_interval_is_linear() {
        let s = linear(1.0, 1.0, 1.0, 1.0);
        let traj = s.simulate(1.0, 0.01).unwrap();
        for (t, v) in traj.forward() {
            assert!((v - (1.0 - t)).abs() < 1e-12, "t = {t}: {v}");
        }
    }

    #[test]
    fn damped_decay() {
        let s = linear(0.5, 1.0, 1.0, 0.5);
        let traj = s.simulate(10.0, 1e-3).unwrap();
        assert!(traj.eval(10.0).abs() < 0.1);
        let fine = s.simulate(10.0, 1e-4).unwrap();
        assert!((traj.eval(10.0) - fine.eval(10.0)).abs() < 1e-4);
    }

    #[test]
    fn contraction_constant_examples() {
        let k = contraction_constant(0.2, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(k, 1.3 / 1.5);
        assert!(matches!(
            contraction_constant(1.0 / 3.0 + 1e-16, 0.5, 1.0, 1.0),
            Err(DdeError::HypothesisFailed(_))
        ));
        assert!(contraction_constant(0.125, 0.5, 2.0, 3.0).is_err());
        assert!(contraction_constant(0.2, 0.5, 2.0, 2.0).is_err());
        assert!(1.0 - contraction_constant(0.2, 1e-9, 1.0, 1.0).unwrap() < 1e-8);
    }

    #[test]
    fn hypothesis_failures() {
        // eps_g = 0.5 with tau in [0.8, 1]: 0.5 (2 + 0.8) = 1.4
        let s = DelaySystem {
            g: Box::new(|z| -0.5 * z),
            tau: Box::new(|t| 0.9 + 0.1 * t.sin()),
            history: Box::new(|_| 0.5),
            bound: 1.0,
            tau_min: 0.8,
            tau_max: 1.0,
            c: 0.5,
            eps_g: 0.5,
        };
        s.check_hypotheses(20.0).unwrap();
        assert!(matches!(
            s.contraction_constant(),
            Err(DdeError::HypothesisFailed(_))
        ));
        let traj = s.simulate(20.0, 0.01).unwrap();
        let r = verify_decay(&traj, &s, 2.0);
        assert_eq!(r.contraction, None);
        assert_eq!(r.envelope, None);

        let bad_slope = DelaySystem {
            g: Box::new(|z| -0.6 * z),
            ..linear(0.5, 1.0, 1.0, 0.5)
        };
        assert!(bad_slope.check_hypotheses(1.0).is_err());
        assert!(matches!(
            s.simulate(1.0, 0.5),
            Err(DdeError::BadStep { .. })
        ));
        let bad_delay = DelaySystem {
            tau: Box::new(|t| if t > 3.0 { 2.0 } else { 1.0 }),
            ..linear(0.2, 1.0, 1.0, 0.2)
        };
        assert!(matches!(
            bad_delay.simulate(5.0, 0.01),
            Err(DdeError::BadDelay { .. })
        ));
        let blowup = DelaySystem {
            g: Box::new(|z| 2.0 * z),
            ..linear(0.2, 1.0, 0.9, 0.2)
        };
        assert!(matches!(
            blowup.simulate(5.0, 0.01),
            Err(DdeError::BoundViolated { .. })
        ));
    }

    #[test]
    fn tanh_corrected_system_passes() {
        // g' in [-0.3, -0.2] on [-1, 1]
        let b = 0.1 / (1.0 - 1.0 / 1.0f64.cosh().powi(2));
        let a = 0.3 - b;
        let s = DelaySystem {
            g: Box::new(move |z| -(a * z + b * z.tanh())),
            tau: Box::new(|_| 1.0),
            history: Box::new(|s| 0.8 * (2.0 * s).cos()),
            bound: 1.0,
            tau_min: 1.0,
            tau_max: 1.0,
            c: 0.2,
            eps_g: 0.3,
        };
        s.check_hypotheses(30.0).unwrap();
        let traj = s.simulate(30.0, 1e-3).unwrap();
        let r = verify_decay(&traj, &s, 2.0);
        assert!(r.monotone.unwrap() && r.contraction.unwrap(), "{r:?}");
    }

    #[test]
    fn window_max_matches_brute_force() {
        let traj = DdeTrajectory {
            t0: -1.0,
            dt: 0.1,
            values: (0..60)
                .map(|j| ((j as f64) * 0.7).sin() * (1.0 - j as f64 / 80.0))
                .collect(),
        };
        let b = window_max(&traj, 0.5);
        for (j, bj) in b.iter().enumerate() {
            let lo = j.saturating_sub(15);
            let want = traj.values[lo..=j]
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max);
            assert_eq!(*bj, want);
        }
    }

    #[test]
    fn random_systems_satisfy_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = DelaySystem::random(&mut rng);
            s.check_hypotheses(30.0).unwrap();
            assert!(s.hypo_contraction() && s.hypo_monotone());
            let dt = s.tau_min / 100.0;
            let traj = s.simulate(15.0, dt).unwrap();
            // slope bracket: theta is eps_g M Lipschitz
            let tol = s.tolerance(dt);
            for w in traj.values.windows(2).skip(traj.index_at(0.0)) {
                assert!(((w[1] - w[0]) / dt).abs() <= s.eps_g * s.bound + tol);
            }
        }
    }
}
