use proptest::prelude::*;

use shockloop::controller::ControllerParams;
use shockloop::flux::{FluxKind, FluxModel};
use shockloop::oracle::{FrontSolution, PiecewiseConstant, Side};
use shockloop::solver::{apply_step, kruzkov_entropy_flux, stable_dt};
use shockloop::states::GridState;

fn model(cosh: bool) -> FluxModel {
    if cosh {
        FluxModel::cosh()
    } else {
        FluxModel::burgers()
    }
}

fn cells(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #[test]
    fn godunov_flux_is_consistent(cosh: bool, u in -3.0..3.0f64) {
        let f = model(cosh);
        prop_assert!((f.godunov_flux(u, u) - f.eval(u)).abs() <= 1e-14 * f.eval(u).max(1.0));
    }

    #[test]
    fn godunov_flux_is_monotone(cosh: bool, a in -3.0..3.0f64, b in -3.0..3.0f64, h in 0.0..0.5f64) {
        let f = model(cosh);
        prop_assert!(f.godunov_flux(a + h, b) >= f.godunov_flux(a, b) - 1e-13);
        prop_assert!(f.godunov_flux(a, b + h) <= f.godunov_flux(a, b) + 1e-13);
    }

    #[test]
    fn shock_pair_has_equal_flux(cosh: bool, m in 0.01..4.0f64) {
        let f = model(cosh);
        let (ul, ur) = f.shock_state_pair(m).unwrap();
        prop_assert!(ur < 0.0 && 0.0 < ul);
        prop_assert!((f.eval(ul) - m).abs() <= 1e-12 * m.max(1.0));
        prop_assert!((f.eval(ur) - m).abs() <= 1e-12 * m.max(1.0));
        prop_assert!(f.shock_speed(ul, ur).abs() <= 1e-10);
    }

    #[test]
    fn observation_is_lipschitz_in_l1(u in cells(100), v in cells(100)) {
        let f = FluxModel::burgers();
        let p = ControllerParams::new(&f, 1.0, 0.4, 0.1, 0.05, 1.5, 0.5).unwrap();
        let a = GridState::new(1.0, u, 0.0).unwrap();
        let b = GridState::new(1.0, v, 0.0).unwrap();
        let l1: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * a.dx();
        let diff = (p.observe(&a).unwrap() - p.observe(&b).unwrap()).abs();
        prop_assert!(diff <= l1 / (2.0 * p.delta) + 1e-12);
        let sa = p.saturate(p.observe(&a).unwrap());
        let sb = p.saturate(p.observe(&b).unwrap());
        prop_assert!((sa - sb).abs() <= p.epsilon / p.nu * diff + 1e-15);
        prop_assert!(sa.abs() <= p.epsilon);
    }

    #[test]
    fn step_conserves_mass(cosh: bool, u in cells(40), left in -2.0..2.0f64, right in -2.0..2.0f64) {
        let f = model(cosh);
        let dx = 1.0 / 40.0;
        let dt = stable_dt(&f, &u, left, right, dx, 0.5).unwrap();
        let mut v = u.clone();
        let mut fl = Vec::new();
        apply_step(&f, &mut v, left, right, dt, dx, &mut fl);
        let before: f64 = u.iter().sum::<f64>() * dx;
        let after: f64 = v.iter().sum::<f64>() * dx;
        let expected = dt * (fl[0] - fl[40]);
        prop_assert!((after - before - expected).abs() <= 1e-12);
    }

    #[test]
    fn step_is_order_preserving(
        cosh: bool,
        u in cells(30),
        bumps in prop::collection::vec(0.0..1.0f64, 30),
        left in -2.0..2.0f64,
        dl in 0.0..1.0f64,
        right in -2.0..2.0f64,
        dr in 0.0..1.0f64,
    ) {
        let f = model(cosh);
        let dx = 1.0 / 30.0;
        let w: Vec<f64> = u.iter().zip(&bumps).map(|(a, b)| a + b).collect();
        let dt = stable_dt(&f, &u, left, right, dx, 0.5)
            .unwrap()
            .min(stable_dt(&f, &w, left + dl, right + dr, dx, 0.5).unwrap());
        let (mut a, mut b) = (u.clone(), w.clone());
        let mut fl = Vec::new();
        apply_step(&f, &mut a, left, right, dt, dx, &mut fl);
        apply_step(&f, &mut b, left + dl, right + dr, dt, dx, &mut fl);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x <= y);
        }
        // maximum principle for the lower state
        let hi = u.iter().copied().fold(left.max(right), f64::max);
        let lo = u.iter().copied().fold(left.min(right), f64::min);
        prop_assert!(a.iter().all(|&x| x <= hi && x >= lo));
    }

    #[test]
    fn cell_entropy_inequality(
        cosh: bool,
        u in cells(30),
        left in -2.0..2.0f64,
        right in -2.0..2.0f64,
        k in -2.0..2.0f64,
    ) {
        let f = model(cosh);
        let dx = 1.0 / 30.0;
        let dt = stable_dt(&f, &u, left, right, dx, 0.5).unwrap();
        let mut v = u.clone();
        let mut fl = Vec::new();
        apply_step(&f, &mut v, left, right, dt, dx, &mut fl);
        let ghost: Vec<f64> = std::iter::once(left).chain(u.iter().copied()).chain(std::iter::once(right)).collect();
        for i in 0..30 {
            let gl = kruzkov_entropy_flux(&f, ghost[i], ghost[i + 1], k);
            let gr = kruzkov_entropy_flux(&f, ghost[i + 1], ghost[i + 2], k);
            let r = (v[i] - k).abs() - (u[i] - k).abs() + dt / dx * (gr - gl);
            prop_assert!(r <= 1e-12, "cell {} residual {}", i, r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn front_tracking_profiles_are_admissible(
        cosh: bool,
        states in prop::collection::vec(-1.5..1.5f64, 2..7),
        t in 0.0..2.0f64,
    ) {
        let f = model(cosh);
        let breaks: Vec<f64> = (0..states.len() - 1).map(|k| k as f64 * 0.5).collect();
        let u0 = PiecewiseConstant::new(breaks, states.clone()).unwrap();
        let sol = FrontSolution::evolve(&f, &u0, 2.0, 1e-2).unwrap();
        let fronts = sol.fronts_at(t);
        for w in fronts.windows(2) {
            prop_assert_eq!(w[0].right, w[1].left);
            prop_assert!(w[0].position(t) <= w[1].position(t) + 1e-9);
        }
        // far-field states never change; total mass moves only through the far field
        let p = sol.profile_at(t).unwrap();
        prop_assert_eq!(p.states[0], states[0]);
        prop_assert_eq!(*p.states.last().unwrap(), *states.last().unwrap());
        let (a, b) = (-10.0, 12.0);
        let flux_in = (f.eval(states[0]) - f.eval(*states.last().unwrap())) * t;
        let mass0 = u0.integrate(a, b);
        prop_assert!((p.integrate(a, b) - mass0 - flux_in).abs() <= 1e-9);
        // maximum principle
        let (lo, hi) = states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &s| (l.min(s), h.max(s)));
        prop_assert!(p.states.iter().all(|&s| s >= lo - 1e-12 && s <= hi + 1e-12));
    }

    #[test]
    fn backward_characteristics_do_not_cross(
        cosh: bool,
        states in prop::collection::vec(-1.5..1.5f64, 2..6),
        xs in prop::collection::vec(-1.0..3.0f64, 2..8),
    ) {
        let f = model(cosh);
        let breaks: Vec<f64> = (0..states.len() - 1).map(|k| k as f64 * 0.5).collect();
        let u0 = PiecewiseConstant::new(breaks, states).unwrap();
        let t = 1.5;
        let sol = FrontSolution::evolve(&f, &u0, t, 1e-2).unwrap();
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let chars: Vec<_> = xs
            .iter()
            .map(|&x| sol.backward_characteristic(t, x, Side::Min).unwrap())
            .collect();
        for c in &chars {
            prop_assert_eq!(c.end_time(), 0.0);
        }
        // ordering at the top is kept all the way down (touching allowed)
        for s in [1.2, 0.9, 0.5, 0.2, 0.0] {
            let pos: Vec<f64> = chars.iter().map(|c| c.position(s).unwrap()).collect();
            for w in pos.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-9, "s = {}: {:?}", s, pos);
            }
        }
    }
}

#[test]
fn fluxes_from_names() {
    assert_eq!(
        FluxKind::from_name("burgers", 1.0).unwrap().name(),
        "burgers"
    );
    assert!(FluxKind::from_name("quartic", 1.0).is_err());
}
