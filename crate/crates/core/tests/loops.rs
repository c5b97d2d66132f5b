use shockloop::solver::{l1_distance, run_closed_loop, run_open_loop, SolverConfig};
use shockloop::stability::{
    classify_zones, delay_series, fit_decay, locate_shock, StabilityConstants,
};
use shockloop::states::{perturbed_shock, shifted_shock, stationary_shock, Perturbation};
use shockloop::{ControllerParams, FluxModel, GridState};

fn demo() -> (FluxModel, ControllerParams) {
    let flux = FluxModel::burgers();
    let p = ControllerParams::new(&flux, 1.0, 0.4, 0.1, 0.005, 1.2, 0.5).unwrap();
    (flux, p)
}

#[test]
fn target_is_an_equilibrium() {
    let (flux, p) = demo();
    let target = stationary_shock(1.0, 200, 0.4, 0.5, &flux).unwrap();
    let traj = run_closed_loop(&target, &p, &flux, &SolverConfig::new(20.0)).unwrap();
    for s in &traj.snapshots {
        assert!(l1_distance(s, &target).unwrap() <= 1e-12, "t = {}", s.time);
    }
    assert!(traj
        .controller_trace
        .iter()
        .all(|r| r.observation.abs() < 1e-12));
}

#[test]
fn perturbed_shock_recovers() {
    let (flux, p) = demo();
    let target = stationary_shock(1.0, 200, 0.4, 0.5, &flux).unwrap();
    let u0 = perturbed_shock(
        &target,
        Perturbation::Sine {
            amplitude: 0.3,
            wavenumber: 3.0,
        },
        &flux,
    )
    .unwrap();
    let initial = l1_distance(&u0, &target).unwrap();
    let traj = run_closed_loop(&u0, &p, &flux, &SolverConfig::new(600.0)).unwrap();
    let last = l1_distance(traj.final_state(), &target).unwrap();
    assert!(last < 1e-2 * initial, "{last} vs {initial}");
}

#[test]
fn shifted_shock_converges_with_positive_rate() {
    let (flux, p) = demo();
    let c = StabilityConstants::from_controller(&flux, &p).unwrap();
    let target = stationary_shock(1.0, 200, 0.4, 0.5, &flux).unwrap();
    let u0 = shifted_shock(1.0, 200, 0.7, 0.5, &flux).unwrap();
    let mut cfg = SolverConfig::new(c.t4 + 100.0);
    cfg.snapshot_every = 5.0;
    let traj = run_closed_loop(&u0, &p, &flux, &cfg).unwrap();
    let beta = locate_shock(traj.final_state(), &flux, 0.5).unwrap();
    assert!((beta - 0.4).abs() < 0.01);
    let series: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| (s.time, l1_distance(s, &target).unwrap()))
        .collect();
    let fit = fit_decay(&series, c.t4, cfg.t_end).unwrap();
    assert!(fit.rate > 0.0);
    assert!(classify_zones(&traj, &flux, &c)
        .iter()
        .all(|z| z.consistent()));
    let (lo, hi) = c.delay_bracket(&flux);
    let tol = 2.0 / 200.0;
    for (t, tau) in delay_series(&traj, &flux, 0.4, 0.1).unwrap() {
        if t >= c.t3 {
            assert!(tau >= lo - tol && tau <= hi + tol, "t = {t}: {tau}");
        }
    }
}

#[test]
fn open_loop_constant_data_flushes_the_domain() {
    let flux = FluxModel::burgers();
    let u0 = shifted_shock(1.0, 100, 0.3, 0.5, &flux).unwrap();
    let traj = run_open_loop(&u0, &|_| 0.5, &|_| 0.5, &flux, &SolverConfig::new(10.0)).unwrap();
    let fin = traj.final_state();
    assert!(fin.values.iter().all(|v| (v - 0.5).abs() < 1e-9));
}

#[test]
fn open_loop_shock_position_depends_on_data() {
    let flux = FluxModel::burgers();
    let settle = |beta: f64| {
        let u0 = shifted_shock(1.0, 200, beta, 0.5, &flux).unwrap();
        let traj =
            run_open_loop(&u0, &|_| 1.0, &|_| -1.0, &flux, &SolverConfig::new(10.0)).unwrap();
        locate_shock(traj.final_state(), &flux, 0.5).unwrap()
    };
    assert!((settle(0.3) - 0.3).abs() < 1e-9);
    assert!((settle(0.7) - 0.7).abs() < 1e-9);
}

#[test]
fn open_loop_larger_left_datum_pushes_the_shock_out() {
    // left datum 1.2 above k = 1, right datum -1: the shock leaves through x = L
    let flux = FluxModel::burgers();
    let u0 = shifted_shock(1.0, 200, 0.5, 0.5, &flux).unwrap();
    let traj = run_open_loop(&u0, &|_| 1.2, &|_| -1.0, &flux, &SolverConfig::new(20.0)).unwrap();
    let fin: &GridState = traj.final_state();
    assert!(
        fin.values.iter().all(|v| (v - 1.2).abs() < 1e-9),
        "{:?}",
        &fin.values[190..]
    );
}
