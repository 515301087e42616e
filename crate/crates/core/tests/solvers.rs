use fraclane::constants::ProblemParams;
use fraclane::diagnostics::fit_asymptotics;
use fraclane::grid::{RadialGrid, TailModel};
use fraclane::solver::{
    eigenpair, newton_singular_solution, picard_minimal_solution, solve_linear_dirichlet, NewtonOptions, PicardOptions,
};

fn torsion_error(nodes: usize) -> f64 {
    // (-Delta)^{1/2} (1 - r^2)_+^{1/2} = 2 in the unit ball of R^3
    let (n, s, c) = (3u32, 0.5, 2.0);
    let grid = RadialGrid::two_sided(1e-3, 1.0, 1e-6, nodes).unwrap();
    let u = solve_linear_dirichlet(n, s, &grid, &vec![c; nodes], &TailModel::Zero, 0.0, 1e-9).unwrap();
    grid.nodes()
        .iter()
        .zip(&u.values)
        .filter(|(r, _)| **r < 0.8)
        .map(|(r, v)| (v - (1.0 - r * r).sqrt()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn torsion_error_drops_under_refinement() {
    let coarse = torsion_error(60);
    let fine = torsion_error(120);
    assert!(fine < 0.5 * coarse, "{coarse:e} -> {fine:e}");
    assert!(fine < 5e-3);
}

#[test]
fn newton_recovers_the_profile_from_a_perturbed_seed() {
    let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
    let (beta, kappa) = (params.beta(), params.kappa().unwrap());
    let grid = RadialGrid::log_uniform(1e-6, 1.0, 160).unwrap();
    let tail = TailModel::Power {
        amplitude: kappa,
        decay: beta,
    };
    for delta in [-0.1, 0.1] {
        let (u, rep) = newton_singular_solution(&params, &grid, &tail, delta, &NewtonOptions::default()).unwrap();
        assert!(rep.converged && rep.iterations > 0, "delta = {delta}: {rep:?}");
        assert_eq!(rep.residual_history.len(), rep.iterations + 1);
        assert!(rep.quadratic_constant.is_some());
        assert!(u.values.iter().all(|v| *v > 0.0));
        let fit = fit_asymptotics(&u, (1e-5, 1e-3)).unwrap();
        assert!((fit.exponent - beta).abs() < 1e-3 * beta, "{}", fit.exponent);
        assert!((fit.coefficient / kappa - 1.0).abs() < 1e-2, "{}", fit.coefficient);
    }
}

#[test]
fn minimal_solutions_are_ordered_in_the_exterior_value() {
    let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
    let grid = RadialGrid::log_uniform(1e-4, 1.0, 60).unwrap();
    let opts = PicardOptions::default();
    let (lo, _) = picard_minimal_solution(&params, 0.05, &grid, &opts).unwrap();
    let (hi, rep) = picard_minimal_solution(&params, 0.1, &grid, &opts).unwrap();
    assert!(rep.converged && rep.monotone);
    assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    for (a, b) in lo.values.iter().zip(&hi.values) {
        assert!(a < b, "{a} vs {b}");
    }
}

#[test]
fn eigenvalue_scales_with_the_radius() {
    // lambda_1(B_R) = R^{-2s} lambda_1(B_1)
    let (n, s) = (2u32, 0.6);
    let one = eigenpair(n, s, &RadialGrid::two_sided(1e-4, 1.0, 1e-5, 120).unwrap(), 1e-10).unwrap();
    let two = eigenpair(n, s, &RadialGrid::two_sided(2e-4, 2.0, 2e-5, 120).unwrap(), 1e-10).unwrap();
    let expected = 2f64.powf(-2.0 * s) * one.lambda1;
    assert!(
        (two.lambda1 / expected - 1.0).abs() < 1e-8,
        "{} vs {expected}",
        two.lambda1
    );
}
