use shockloop::oracle::{default_eta, FrontSolution, PiecewiseConstant};
use shockloop::solver::{run_open_loop, SolverConfig};
use shockloop::states::step_profile;
use shockloop::FluxModel;

fn l1_error(flux: &FluxModel, left: f64, right: f64, n: usize) -> f64 {
    let (length, t) = (2.0, 0.3);
    let u0 = step_profile(length, n, 1.0, left, right).unwrap();
    let traj = run_open_loop(&u0, &|_| left, &|_| right, flux, &SolverConfig::new(t)).unwrap();
    let data = PiecewiseConstant::riemann(1.0, left, right);
    let exact = FrontSolution::evolve(flux, &data, t, default_eta(&data))
        .unwrap()
        .profile_at(t)
        .unwrap()
        .cell_averages(0.0, length, n);
    let fin = traj.final_state();
    fin.dx()
        * fin
            .values
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
}

#[test]
fn solver_converges_to_front_tracking() {
    let cases = [
        (FluxModel::burgers(), 1.0, -0.5),
        (FluxModel::burgers(), 0.5, -1.0),
        (FluxModel::burgers(), -1.0, 1.0),
        (FluxModel::cosh(), 1.0, -0.6),
        (FluxModel::cosh(), -1.0, 1.0),
    ];
    // shock errors depend on the sub-cell phase, so the order is taken on the total
    let total = |n: usize| -> f64 { cases.iter().map(|(f, a, b)| l1_error(f, *a, *b, n)).sum() };
    let totals: Vec<f64> = [100, 200, 400, 800].into_iter().map(total).collect();
    assert!(totals.windows(2).all(|w| w[1] < w[0]), "{totals:?}");
    // observed order from the two finest meshes
    let order = (totals[2] / totals[3]).log2();
    assert!(order > 0.7, "{totals:?} order {order}");
    for (flux, a, b) in &cases {
        assert!(l1_error(flux, *a, *b, 800) < 5e-3 * (a - b).abs());
    }
}
