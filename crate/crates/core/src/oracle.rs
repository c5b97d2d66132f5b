//! Exact entropy solutions of the Cauchy problem for piecewise-constant data.
//!
//! Front tracking on the polygonal interpolant of the flux: every state that
//! ever appears lies on a fixed grid (the data values plus a uniform grid of
//! spacing at most `eta`), rarefactions become fans of small jumps between
//! consecutive grid states, and shocks travel at their Rankine-Hugoniot
//! speed. Between interactions every front moves on a straight line, so the
//! solution is known exactly for all times up to the rarefaction resolution.

use thiserror::Error;

use crate::flux::FluxModel;

pub const DEFAULT_MAX_EVENTS: usize = 200_000;

/// Relative tolerance for deciding that fronts meet at the same point.
const MEET_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("front tracking exceeded {0} interaction events")]
    TooManyEvents(usize),
    #[error("query time {t} is outside the computed region [0, {t_final}]")]
    OutOfRegion { t: f64, t_final: f64 },
    #[error("invalid piecewise-constant data: {0}")]
    BadData(String),
}

/// Default rarefaction resolution: `1e-3` of the data's state range.
pub fn default_eta(u0: &PiecewiseConstant) -> f64 {
    let lo = u0.states.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0.states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        1e-3 * (hi - lo)
    } else {
        1e-3
    }
}

/// Self-similar entropy solution of the Riemann problem `(a, b)` on the ray `x / t = xi`.
pub fn riemann_solution(flux: &FluxModel, a: f64, b: f64, xi: f64) -> f64 {
    if a > b {
        let s = flux.shock_speed(a, b);
        if xi < s {
            a
        } else {
            b
        }
    } else if a < b {
        if xi <= flux.deriv(a) {
            a
        } else if xi >= flux.deriv(b) {
            b
        } else {
            flux.inverse_deriv(xi)
        }
    } else {
        a
    }
}

/// Piecewise-constant function on the real line: `states[k]` holds on
/// `(breaks[k-1], breaks[k])` with the outer pieces unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub states: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, states: Vec<f64>) -> Result<Self, OracleError> {
        if states.len() != breaks.len() + 1 {
            return Err(OracleError::BadData(format!(
                "{} breakpoints need {} states, got {}",
                breaks.len(),
                breaks.len() + 1,
                states.len()
            )));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OracleError::BadData("breakpoints must increase".into()));
        }
        if breaks.iter().chain(&states).any(|v| !v.is_finite()) {
            return Err(OracleError::BadData("non-finite entry".into()));
        }
        Ok(PiecewiseConstant { breaks, states })
    }

    pub fn riemann(position: f64, left: f64, right: f64) -> Self {
        PiecewiseConstant {
            breaks: vec![position],
            states: vec![left, right],
        }
    }

    /// Value at `x`; at a breakpoint the right-hand value is returned.
    pub fn eval(&self, x: f64) -> f64 {
        self.states[self.breaks.partition_point(|&b| b <= x)]
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        let start = self.breaks.partition_point(|&p| p <= a);
        for k in start..=self.breaks.len() {
            let hi = if k < self.breaks.len() {
                self.breaks[k].min(b)
            } else {
                b
            };
            if hi > lo {
                total += self.states[k] * (hi - lo);
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        total
    }

    /// Exact cell averages on `n` uniform cells of `[x0, x0 + length]`.
    pub fn cell_averages(&self, x0: f64, length: f64, n: usize) -> Vec<f64> {
        let dx = length / n as f64;
        (0..n)
            .map(|i| {
                let a = x0 + i as f64 * dx;
                self.integrate(a, a + dx) / dx
            })
            .collect()
    }
}

/// A straight front `x(t) = birth_x + speed (t - birth_t)` alive on `[birth_t, death_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Front {
    pub birth_t: f64,
    pub birth_x: f64,
    pub death_t: f64,
    pub speed: f64,
    pub left: f64,
    pub right: f64,
}

impl Front {
    pub fn position(&self, t: f64) -> f64 {
        self.birth_x + self.speed * (t - self.birth_t)
    }

    pub fn is_shock(&self) -> bool {
        self.left > self.right
    }

    fn alive_in(&self, t_lo: f64, t_hi: f64) -> bool {
        self.birth_t <= t_lo && self.death_t >= t_hi
    }
}

/// One interaction: the fronts meeting at `(t, x)` were replaced by the
/// Riemann solution of `(left_state, right_state_after)`; `right_state_before`
/// is the state that sat immediately right of the leftmost incoming front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEvent {
    pub t: f64,
    pub x: f64,
    pub left_state: f64,
    pub right_state_before: f64,
    pub right_state_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Min,
    Max,
}

/// Backward characteristic: polyline from the query point back to `t = 0`
/// (or to where it stops), the value it carries, and every state it crossed.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    /// `(t, x)` vertices ordered from the query time backwards.
    pub path: Vec<(f64, f64)>,
    pub value: f64,
    pub visited: Vec<f64>,
}

impl Characteristic {
    /// Position at time `t` by linear interpolation along the polyline.
    pub fn position(&self, t: f64) -> Option<f64> {
        self.path.windows(2).find_map(|w| {
            let ((t1, x1), (t0, x0)) = (w[0], w[1]);
            (t <= t1 && t >= t0).then(|| {
                if t1 == t0 {
                    x1
                } else {
                    x0 + (x1 - x0) * (t - t0) / (t1 - t0)
                }
            })
        })
    }

    pub fn end_time(&self) -> f64 {
        self.path.last().map(|p| p.0).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct FrontSolution {
    flux: FluxModel,
    grid: Vec<f64>,
    pub initial: PiecewiseConstant,
    pub fronts: Vec<Front>,
    pub events: Vec<FrontEvent>,
    pub t_final: f64,
    pub eta: f64,
}

impl FrontSolution {
    /// Tracks `u0` up to `t_final` with rarefaction resolution `eta`.
    pub fn evolve(
        flux: &FluxModel,
        u0: &PiecewiseConstant,
        t_final: f64,
        eta: f64,
    ) -> Result<Self, OracleError> {
        Self::evolve_capped(flux, u0, t_final, eta, DEFAULT_MAX_EVENTS)
    }

    pub fn evolve_capped(
        flux: &FluxModel,
        u0: &PiecewiseConstant,
        t_final: f64,
        eta: f64,
        max_events: usize,
    ) -> Result<Self, OracleError> {
        if !(eta > 0.0 && t_final >= 0.0) {
            return Err(OracleError::BadData(format!(
                "need eta > 0 and t_final >= 0 (eta = {eta}, t_final = {t_final})"
            )));
        }
        let grid = state_grid(&u0.states, eta);
        let mut sol = FrontSolution {
            flux: flux.clone(),
            grid,
            initial: u0.clone(),
            fronts: Vec::new(),
            events: Vec::new(),
            t_final,
            eta,
        };
        // indices into `sol.fronts`, ordered by position at the current time
        let mut alive: Vec<usize> = Vec::new();
        for (k, &x) in u0.breaks.iter().enumerate() {
            for f in sol.riemann_fronts(0.0, x, u0.states[k], u0.states[k + 1]) {
                alive.push(sol.fronts.len());
                sol.fronts.push(f);
            }
        }

        let mut now = 0.0_f64;
        loop {
            let collision = |i: usize, fronts: &[Front]| -> Option<f64> {
                let (a, b) = (&fronts[alive[i]], &fronts[alive[i + 1]]);
                (a.speed > b.speed).then(|| {
                    let gap = b.position(now) - a.position(now);
                    now + (gap / (a.speed - b.speed)).max(0.0)
                })
            };
            let times: Vec<Option<f64>> = (0..alive.len().saturating_sub(1))
                .map(|i| collision(i, &sol.fronts))
                .collect();
            let next = times
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if !(next <= t_final) {
                break;
            }
            if sol.events.len() >= max_events {
                return Err(OracleError::TooManyEvents(max_events));
            }
            now = next;
            let tol = MEET_TOL * now.abs().max(1.0);

            // maximal runs of adjacent colliding pairs, processed left to right
            let mut groups: Vec<(usize, usize)> = Vec::new();
            let mut i = 0;
            while i < times.len() {
                if times[i].is_some_and(|tc| tc - now <= tol) {
                    let start = i;
                    while i < times.len() && times[i].is_some_and(|tc| tc - now <= tol) {
                        i += 1;
                    }
                    groups.push((start, i));
                } else {
                    i += 1;
                }
            }

            let mut rebuilt = Vec::with_capacity(alive.len());
            let mut cursor = 0;
            for (first, last) in groups {
                rebuilt.extend_from_slice(&alive[cursor..first]);
                let lf = sol.fronts[alive[first]];
                let rf = sol.fronts[alive[last]];
                let x = alive[first..=last]
                    .iter()
                    .map(|&id| sol.fronts[id].position(now))
                    .sum::<f64>()
                    / (last - first + 1) as f64;
                for &id in &alive[first..=last] {
                    sol.fronts[id].death_t = now;
                }
                sol.events.push(FrontEvent {
                    t: now,
                    x,
                    left_state: lf.left,
                    right_state_before: lf.right,
                    right_state_after: rf.right,
                });
                for f in sol.riemann_fronts(now, x, lf.left, rf.right) {
                    rebuilt.push(sol.fronts.len());
                    sol.fronts.push(f);
                }
                cursor = last + 1;
            }
            rebuilt.extend_from_slice(&alive[cursor..]);
            alive = rebuilt;
        }
        Ok(sol)
    }

    /// Fronts solving the Riemann problem `(a, b)` for the polygonal flux.
    fn riemann_fronts(&self, t: f64, x: f64, a: f64, b: f64) -> Vec<Front> {
        let make = |left: f64, right: f64| Front {
            birth_t: t,
            birth_x: x,
            death_t: f64::INFINITY,
            speed: self.flux.shock_speed(left, right),
            left,
            right,
        };
        if a > b {
            vec![make(a, b)]
        } else if a < b {
            let lo = self.grid.partition_point(|&g| g < a);
            let hi = self.grid.partition_point(|&g| g <= b);
            self.grid[lo..hi]
                .windows(2)
                .map(|w| make(w[0], w[1]))
                .collect()
        } else {
            Vec::new()
        }
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    /// Fronts alive at time `t`, sorted by position (ties by speed).
    pub fn fronts_at(&self, t: f64) -> Vec<&Front> {
        let mut out: Vec<&Front> = self
            .fronts
            .iter()
            .filter(|f| f.birth_t <= t && t < f.death_t)
            .collect();
        out.sort_by(|a, b| {
            a.position(t)
                .total_cmp(&b.position(t))
                .then(a.speed.total_cmp(&b.speed))
        });
        out
    }

    /// The exact (up to `eta`) solution profile at time `t`.
    pub fn profile_at(&self, t: f64) -> Result<PiecewiseConstant, OracleError> {
        if !(t >= 0.0 && t <= self.t_final) {
            return Err(OracleError::OutOfRegion {
                t,
                t_final: self.t_final,
            });
        }
        let fronts = self.fronts_at(t);
        let mut breaks = Vec::with_capacity(fronts.len());
        let mut states = Vec::with_capacity(fronts.len() + 1);
        states.push(self.initial.states[0]);
        for f in fronts {
            let x = f.position(t);
            // fronts born together share a position at their birth time; merge them
            if breaks.last().is_some_and(|&p: &f64| x <= p) {
                *states.last_mut().expect("nonempty") = f.right;
            } else {
                breaks.push(x);
                states.push(f.right);
            }
        }
        Ok(PiecewiseConstant { breaks, states })
    }

    /// Solution values at `t` for each query point.
    pub fn sample(&self, t: f64, xs: &[f64]) -> Result<Vec<f64>, OracleError> {
        let profile = self.profile_at(t)?;
        Ok(xs.iter().map(|&x| profile.eval(x)).collect())
    }

    /// Backward characteristic through `(t, x)`; on a front `side` picks the
    /// left (`Min`) or right (`Max`) state.
    pub fn backward_characteristic(
        &self,
        t: f64,
        x: f64,
        side: Side,
    ) -> Result<Characteristic, OracleError> {
        if !(t > 0.0 && t <= self.t_final) {
            return Err(OracleError::OutOfRegion {
                t,
                t_final: self.t_final,
            });
        }
        let mut slab_times: Vec<f64> = self.events.iter().map(|e| e.t).collect();
        slab_times.push(0.0);
        slab_times.retain(|&s| s < t);
        slab_times.sort_by(|a, b| b.total_cmp(a));
        slab_times.dedup_by(|a, b| (*a - *b).abs() <= MEET_TOL * a.abs().max(1.0));

        let mut path = vec![(t, x)];
        let mut visited = Vec::new();
        let (mut tc, mut xc) = (t, x);
        let mut value: Option<f64> = None;
        let mut current: Option<f64> = None;

        for &bottom in &slab_times {
            let fronts: Vec<&Front> = {
                let mid = 0.5 * (bottom + tc);
                let mut v: Vec<&Front> = self
                    .fronts
                    .iter()
                    .filter(|f| f.alive_in(bottom, tc) || (f.birth_t <= mid && mid < f.death_t))
                    .collect();
                v.sort_by(|a, b| a.position(mid).total_cmp(&b.position(mid)));
                v
            };
            // region k lies between fronts[k-1] and fronts[k]
            let state_of = |k: usize| -> f64 {
                if k == 0 {
                    self.initial.states[0]
                } else {
                    fronts[k - 1].right
                }
            };
            let on_front = |k: usize, t: f64, x: f64| {
                (fronts[k].position(t) - x).abs() <= MEET_TOL * x.abs().max(1.0)
            };
            // A front touching region `k` at (t, x) that the backward line of
            // region `k` would immediately cross.
            let leaves = |k: usize, t: f64, x: f64| -> Option<usize> {
                let slope = self.flux.deriv(state_of(k));
                if k > 0 && on_front(k - 1, t, x) && slope > fronts[k - 1].speed {
                    Some(k - 1)
                } else if k < fronts.len() && on_front(k, t, x) && slope < fronts[k].speed {
                    Some(k)
                } else {
                    None
                }
            };
            let on: Vec<usize> = (0..fronts.len()).filter(|&k| on_front(k, tc, xc)).collect();
            let mut region = if on.is_empty() {
                fronts.partition_point(|f| f.position(tc) < xc)
            } else {
                let (first, last) = (on[0], on[on.len() - 1] + 1);
                let candidates: Vec<usize> = match side {
                    Side::Min => (first..=last).collect(),
                    Side::Max => (first..=last).rev().collect(),
                };
                let stays = |k: &usize| leaves(*k, tc, xc).is_none();
                let carries = |k: &usize| current.is_some_and(|w| state_of(*k) == w);
                candidates
                    .iter()
                    .copied()
                    .find(|k| carries(k) && stays(k))
                    .or_else(|| candidates.iter().copied().find(stays))
                    .or_else(|| candidates.iter().copied().find(carries))
                    .unwrap_or(candidates[0])
            };
            if value.is_none() {
                value = Some(state_of(region));
            }
            // walk down through the slab, crossing weak fronts when hit
            for _ in 0..=2 * fronts.len() + 2 {
                let w = state_of(region);
                if visited.last() != Some(&w) {
                    visited.push(w);
                }
                current = Some(w);
                let slope = self.flux.deriv(w);
                // squeezed against a front: the characteristic runs along it
                if let Some(k) = leaves(region, tc, xc) {
                    let xb = fronts[k].position(bottom);
                    path.push((bottom, xb));
                    tc = bottom;
                    xc = xb;
                    break;
                }
                let hit = |k: usize| -> Option<f64> {
                    if on_front(k, tc, xc) {
                        return None;
                    }
                    let f = fronts[k];
                    let rel = slope - f.speed;
                    if rel == 0.0 {
                        return None;
                    }
                    let s = tc - (xc - f.position(tc)) / rel;
                    (s < tc && s > bottom).then_some(s)
                };
                let left_hit = (region > 0).then(|| hit(region - 1)).flatten();
                let right_hit = (region < fronts.len()).then(|| hit(region)).flatten();
                let go_left = match (left_hit, right_hit) {
                    (None, None) => {
                        let xb = xc - slope * (tc - bottom);
                        path.push((bottom, xb));
                        tc = bottom;
                        xc = xb;
                        break;
                    }
                    (Some(a), Some(b)) => a >= b,
                    (l, _) => l.is_some(),
                };
                let s = if go_left { left_hit } else { right_hit }.expect("hit");
                // land exactly on the front so the next test sees the contact
                let k = if go_left { region - 1 } else { region };
                let xs = fronts[k].position(s);
                path.push((s, xs));
                tc = s;
                xc = xs;
                if go_left {
                    region -= 1;
                } else {
                    region += 1;
                }
            }
            if tc > bottom {
                let xb = xc - self.flux.deriv(current.expect("set")) * (tc - bottom);
                path.push((bottom, xb));
                tc = bottom;
                xc = xb;
            }
        }
        Ok(Characteristic {
            path,
            value: value.unwrap_or(f64::NAN),
            visited,
        })
    }
}

/// Sorted union of the data states and a uniform grid of spacing at most `eta`.
fn state_grid(states: &[f64], eta: f64) -> Vec<f64> {
    let lo = states.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = states.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut grid: Vec<f64> = states.to_vec();
    if hi > lo {
        let n = ((hi - lo) / eta).ceil() as usize;
        let near_data = |g: f64| {
            states
                .iter()
                .any(|&s| (g - s).abs() <= 1e-12 * s.abs().max(1.0))
        };
        // data states must survive exactly, so drop uniform points that nearly coincide
        grid.extend(
            (1..n)
                .map(|k| lo + (hi - lo) * k as f64 / n as f64)
                .filter(|&g| !near_data(g)),
        );
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
