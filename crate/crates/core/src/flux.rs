//! Uniformly convex scalar fluxes normalized so that `min f = f(0) = 0`.
//!
//! The solver, the front-tracking oracle and the stability constants all go
//! through [`FluxModel`]; nothing else in the crate evaluates a flux directly.

use thiserror::Error;

/// Residual tolerance on `|f(u) - m|` for the branch inverses.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Jumps smaller than this are treated as degenerate by the Rankine-Hugoniot quotient.
pub const DEGENERATE_JUMP: f64 = 1e-10;

const SAMPLE_POINTS: usize = 1001;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("no root of f(u) = {level} inside the working interval [{lo}, {hi}]")]
    NoRoot { level: f64, lo: f64, hi: f64 },
    #[error("root finder did not reach |f(u) - m| <= {ROOT_TOLERANCE} for m = {level}")]
    NotConverged { level: f64 },
    #[error("jump {a} -> {b} is below the degenerate tolerance (midpoint speed {midpoint_speed})")]
    DegenerateJump { a: f64, b: f64, midpoint_speed: f64 },
    #[error("invalid working interval [{lo}, {hi}]: {reason}")]
    BadInterval { lo: f64, hi: f64, reason: String },
    #[error("unknown flux '{0}' (expected 'burgers' or 'cosh')")]
    UnknownFlux(String),
}

/// The closed-form convex fluxes shipped with the crate.
///
/// Both have an even second derivative that is nondecreasing in `|u|`,
/// which [`FluxModel::second_deriv_bounds`] relies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    /// `scale * u^2 / 2`
    Burgers { scale: f64 },
    /// `scale * (cosh(u) - 1)`
    Cosh { scale: f64 },
}

impl FluxKind {
    pub fn from_name(name: &str, scale: f64) -> Result<Self, FluxError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "burgers" => Ok(FluxKind::Burgers { scale }),
            "cosh" => Ok(FluxKind::Cosh { scale }),
            other => Err(FluxError::UnknownFlux(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxKind::Burgers { .. } => "burgers",
            FluxKind::Cosh { .. } => "cosh",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            FluxKind::Burgers { scale } | FluxKind::Cosh { scale } => scale,
        }
    }
}

/// A uniformly convex flux together with the interval on which its convexity
/// bounds were certified.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    kind: FluxKind,
    lo: f64,
    hi: f64,
    min_second: f64,
    max_second: f64,
}

impl FluxModel {
    /// Builds a flux certified on `[lo, hi]`.
    ///
    /// The interval must contain the sonic point `0`. Convexity and strict
    /// monotonicity of `f'` are checked on a uniform sample grid.
    pub fn new(kind: FluxKind, lo: f64, hi: f64) -> Result<Self, FluxError> {
        let bad = |reason: &str| FluxError::BadInterval {
            lo,
            hi,
            reason: reason.to_string(),
        };
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(bad("bounds must be finite with lo < hi"));
        }
        if !(lo < 0.0 && hi > 0.0) {
            return Err(bad(
                "interval must contain the sonic point 0 in its interior",
            ));
        }
        let scale = kind.scale();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(bad("flux scale must be positive"));
        }
        let mut model = FluxModel {
            kind,
            lo,
            hi,
            min_second: 0.0,
            max_second: 0.0,
        };
        let (min_second, max_second) = model.second_deriv_bounds(lo, hi);
        model.min_second = min_second;
        model.max_second = max_second;

        if model.eval(0.0) != 0.0 || model.deriv(0.0) != 0.0 {
            return Err(bad("flux is not normalized with f(0) = f'(0) = 0"));
        }
        let mut prev_speed = f64::NEG_INFINITY;
        for i in 0..SAMPLE_POINTS {
            let u = lo + (hi - lo) * i as f64 / (SAMPLE_POINTS - 1) as f64;
            if model.second_deriv(u) < min_second || min_second <= 0.0 {
                return Err(bad("f'' is not bounded below by a positive constant"));
            }
            let speed = model.deriv(u);
            if speed <= prev_speed {
                return Err(bad("f' is not strictly increasing"));
            }
            prev_speed = speed;
        }
        Ok(model)
    }

    /// Burgers flux on `[-10, 10]`.
    pub fn burgers() -> Self {
        Self::new(FluxKind::Burgers { scale: 1.0 }, -10.0, 10.0).expect("burgers flux is valid")
    }

    /// `cosh(u) - 1` on `[-5, 5]`.
    pub fn cosh() -> Self {
        Self::new(FluxKind::Cosh { scale: 1.0 }, -5.0, 5.0).expect("cosh flux is valid")
    }

    /// Flux certified on the default interval `[-3 u_l(m), 3 u_l(m)]` for a run at level `m`.
    pub fn for_level(kind: FluxKind, m: f64) -> Result<Self, FluxError> {
        // u_l(m) is located on a generous provisional interval first.
        let wide = Self::new(kind, -50.0, 50.0)?;
        let (u_l, u_r) = wide.shock_state_pair(m)?;
        let reach = 3.0 * u_l.max(-u_r);
        Self::new(kind, -reach, reach)
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn working_interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `(min f'', max f'')` on the working interval.
    pub fn convexity_bounds(&self) -> (f64, f64) {
        (self.min_second, self.max_second)
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.lo && u <= self.hi
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers { scale } => 0.5 * scale * u * u,
            FluxKind::Cosh { scale } => {
                // cosh(u) - 1 = 2 sinh^2(u/2), exact near the origin
                let s = (0.5 * u).sinh();
                2.0 * scale * s * s
            }
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers { scale } => scale * u,
            FluxKind::Cosh { scale } => scale * u.sinh(),
        }
    }

    #[inline]
    pub fn second_deriv(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers { scale } => scale,
            FluxKind::Cosh { scale } => scale * u.cosh(),
        }
    }

    /// `(min f'', max f'')` over `[a, b]` (in either order).
    pub fn second_deriv_bounds(&self, a: f64, b: f64) -> (f64, f64) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let nearest = if a <= 0.0 && b >= 0.0 {
            0.0
        } else if a > 0.0 {
            a
        } else {
            b
        };
        let farthest = if a.abs() > b.abs() { a } else { b };
        (self.second_deriv(nearest), self.second_deriv(farthest))
    }

    /// The two states `(u_l, u_r)` with `f(u_l) = f(u_r) = m` and `u_r < 0 < u_l`.
    ///
    /// Bracketed bisection narrows each branch, Newton finishes it.
    pub fn shock_state_pair(&self, m: f64) -> Result<(f64, f64), FluxError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(FluxError::NoRoot {
                level: m,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let u_l = self.level_root(m, 0.0, self.hi)?;
        let u_r = self.level_root(m, self.lo, 0.0)?;
        Ok((u_l, u_r))
    }

    /// Root of `f(u) = m` on the monotone branch `[a, b]` (which excludes one side of 0).
    fn level_root(&self, m: f64, a: f64, b: f64) -> Result<f64, FluxError> {
        let increasing = a >= 0.0;
        let g = |u: f64| self.eval(u) - m;
        let (mut lo, mut hi) = (a, b);
        // sign convention: g(inner) < 0 at the sonic point, g(outer) >= 0 at the interval end
        let outer = if increasing { hi } else { lo };
        if g(outer) < 0.0 {
            return Err(FluxError::NoRoot {
                level: m,
                lo: self.lo,
                hi: self.hi,
            });
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let below = g(mid) < 0.0;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut u = 0.5 * (lo + hi);
        for _ in 0..MAX_ITERATIONS {
            let slope = self.deriv(u);
            if slope == 0.0 {
                break;
            }
            let next = u - g(u) / slope;
            if !next.is_finite() {
                break;
            }
            let done = (next - u).abs() <= f64::EPSILON * u.abs();
            u = next;
            if done {
                break;
            }
        }
        if g(u).abs() <= ROOT_TOLERANCE {
            Ok(u)
        } else {
            Err(FluxError::NotConverged { level: m })
        }
    }

    /// `(f(a) - f(b)) / (a - b)`; degenerate jumps report the midpoint wave speed.
    pub fn rankine_hugoniot_speed(&self, a: f64, b: f64) -> Result<f64, FluxError> {
        if (a - b).abs() < DEGENERATE_JUMP {
            return Err(FluxError::DegenerateJump {
                a,
                b,
                midpoint_speed: self.deriv(0.5 * (a + b)),
            });
        }
        Ok((self.eval(a) - self.eval(b)) / (a - b))
    }

    /// Rankine-Hugoniot speed with the degenerate case resolved to `f'((a+b)/2)`.
    pub fn shock_speed(&self, a: f64, b: f64) -> f64 {
        match self.rankine_hugoniot_speed(a, b) {
            Ok(s) => s,
            Err(FluxError::DegenerateJump { midpoint_speed, .. }) => midpoint_speed,
            Err(_) => unreachable!("rankine_hugoniot_speed only fails on degenerate jumps"),
        }
    }

    /// Godunov interface flux for left state `a` and right state `b`.
    ///
    /// With the minimum of `f` at the origin this is `max(f(max(a,0)), f(min(b,0)))`.
    #[inline]
    pub fn godunov_flux(&self, a: f64, b: f64) -> f64 {
        self.eval(a.max(0.0)).max(self.eval(b.min(0.0)))
    }

    /// The state `u` with `f'(u) = speed`.
    pub fn inverse_deriv(&self, speed: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers { scale } => speed / scale,
            FluxKind::Cosh { scale } => (speed / scale).asinh(),
        }
    }

    /// Largest `|f'|` over the given states.
    pub fn max_wave_speed<'a>(&self, states: impl IntoIterator<Item = &'a f64>) -> f64 {
        states
            .into_iter()
            .fold(0.0_f64, |acc, &u| acc.max(self.deriv(u).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent bisection oracle for `f(u) = m` on a monotone bracket.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let rising = f(hi) > f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn burgers_shock_states() {
        let flux = FluxModel::burgers();
        let (ul, ur) = flux.shock_state_pair(0.5).unwrap();
        assert!((ul - 1.0).abs() < 1e-12 && (ur + 1.0).abs() < 1e-12);
        let (ul, ur) = flux.shock_state_pair(2.0).unwrap();
        assert!((ul - 2.0).abs() < 1e-12 && (ur + 2.0).abs() < 1e-12);
        assert!(flux.deriv(ul) > 0.0 && flux.deriv(ur) < 0.0);
    }

    #[test]
    fn cosh_shock_states_match_bisection() {
        let flux = FluxModel::cosh();
        let (ul, ur) = flux.shock_state_pair(0.2).unwrap();
        let g = |u: f64| u.cosh() - 1.2;
        let ref_l = bisect(g, 0.0, 3.0);
        let ref_r = bisect(g, -3.0, 0.0);
        assert!((ul - ref_l).abs() < 1e-12, "{ul} vs {ref_l}");
        assert!((ur - ref_r).abs() < 1e-12, "{ur} vs {ref_r}");
        assert!((ul - 1.2_f64.acosh()).abs() < 1e-12);
    }

    #[test]
    fn shock_pair_errors() {
        let flux = FluxModel::new(FluxKind::Burgers { scale: 1.0 }, -1.0, 1.0).unwrap();
        assert!(matches!(
            flux.shock_state_pair(0.6),
            Err(FluxError::NoRoot { .. })
        ));
        assert!(matches!(
            flux.shock_state_pair(-1.0),
            Err(FluxError::NoRoot { .. })
        ));
    }

    #[test]
    fn rankine_hugoniot_examples() {
        let flux = FluxModel::burgers();
        assert_eq!(flux.rankine_hugoniot_speed(1.0, -1.0).unwrap(), 0.0);
        assert!((flux.rankine_hugoniot_speed(1.1, -1.0).unwrap() - 0.05).abs() < 1e-14);
        let k = 0.7;
        for h in [1e-2, 1e-4, 1e-6] {
            let s = flux.rankine_hugoniot_speed(k, k - h).unwrap();
            assert!((s - k).abs() <= h, "h={h}: {s}");
        }
        match flux.rankine_hugoniot_speed(k, k - 1e-13) {
            Err(FluxError::DegenerateJump { midpoint_speed, .. }) => {
                assert!((midpoint_speed - k).abs() < 1e-12)
            }
            other => panic!("expected degenerate jump, got {other:?}"),
        }
        assert!((flux.shock_speed(k, k) - k).abs() < 1e-15);
    }

    #[test]
    fn godunov_flux_examples() {
        let flux = FluxModel::burgers();
        // exhaustive max of f over [-1, 1]
        let brute = (0..=2000)
            .map(|i| flux.eval(-1.0 + i as f64 * 1e-3))
            .fold(f64::MIN, f64::max);
        assert!((flux.godunov_flux(1.0, -1.0) - brute).abs() < 1e-15);
        assert_eq!(flux.godunov_flux(1.0, -1.0), 0.5);
        assert_eq!(flux.godunov_flux(-1.0, 1.0), 0.0);
        assert!((flux.godunov_flux(0.3, 0.3) - 0.045).abs() < 1e-16);
    }

    #[test]
    fn godunov_matches_min_max_definition() {
        for flux in [FluxModel::burgers(), FluxModel::cosh()] {
            for i in 0..41 {
                for j in 0..41 {
                    let a = -2.0 + 0.1 * i as f64;
                    let b = -2.0 + 0.1 * j as f64;
                    let samples = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0);
                    let want = if a <= b {
                        samples.map(|u| flux.eval(u)).fold(f64::MAX, f64::min)
                    } else {
                        samples.map(|u| flux.eval(u)).fold(f64::MIN, f64::max)
                    };
                    let got = flux.godunov_flux(a, b);
                    // sampled extremum misses the sonic point by at most half a sample step
                    assert!((got - want).abs() < 1e-4, "{a} {b}: {got} vs {want}");
                    let slack = 1e-14 * want.abs().max(1.0);
                    assert!(if a <= b {
                        got <= want + slack
                    } else {
                        got >= want - slack
                    });
                }
            }
        }
    }

    #[test]
    fn invalid_intervals_rejected() {
        let k = FluxKind::Burgers { scale: 1.0 };
        assert!(FluxModel::new(k, 1.0, 2.0).is_err());
        assert!(FluxModel::new(k, 2.0, -2.0).is_err());
        assert!(FluxModel::new(FluxKind::Cosh { scale: -1.0 }, -1.0, 1.0).is_err());
        assert!(matches!(
            FluxKind::from_name("quartic", 1.0),
            Err(FluxError::UnknownFlux(_))
        ));
    }

    #[test]
    fn default_interval_for_level() {
        let flux = FluxModel::for_level(FluxKind::Burgers { scale: 1.0 }, 0.5).unwrap();
        let (lo, hi) = flux.working_interval();
        assert!((lo + 3.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert_eq!(flux.convexity_bounds(), (1.0, 1.0));
        let cosh = FluxModel::for_level(FluxKind::Cosh { scale: 1.0 }, 0.2).unwrap();
        let (m_f, big_m) = cosh.convexity_bounds();
        assert_eq!(m_f, 1.0);
        assert!((big_m - (3.0 * 1.2_f64.acosh()).cosh()).abs() < 1e-9);
    }

    #[test]
    fn inverse_deriv_roundtrip() {
        for flux in [FluxModel::burgers(), FluxModel::cosh()] {
            for i in -20..=20 {
                let u = 0.1 * i as f64;
                assert!((flux.inverse_deriv(flux.deriv(u)) - u).abs() < 1e-12);
            }
        }
    }
}
