use proptest::prelude::*;

use fraclane::classical::{classical_beta, verify_classical_profile};
use fraclane::constants::{
    hardy_exponents, kappa, mu_zero, serrin_exponent, sobolev_exponent, spectral_constant, theta_star, ProblemParams,
};
use fraclane::diagnostics::{
    fit_asymptotics, geometric_samples, harnack_ratio, integral_bound_exponent, mass_integral,
};
use fraclane::fracop::FracLaplacian;
use fraclane::grid::{RadialFunction, RadialGrid, TailModel};
use fraclane::kelvin::{kelvin_transform, verify_kelvin_identity};

fn order() -> impl Strategy<Value = (u32, f64)> {
    (1u32..=6, 0.05f64..0.95).prop_filter("N > 2s", |(n, s)| (*n as f64) > 2.0 * s)
}

/// tau in (-N, 2s) given as a fraction of the interval.
fn tau_in(n: u32, s: f64, frac: f64) -> f64 {
    -(n as f64) + (n as f64 + 2.0 * s) * frac
}

proptest! {
    #[test]
    fn spectral_symmetry((n, s) in order(), frac in 0.001f64..0.999) {
        let tau = tau_in(n, s, frac);
        let a = spectral_constant(n, s, tau).unwrap().value;
        let b = spectral_constant(n, s, 2.0 * s - n as f64 - tau).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn spectral_concavity((n, s) in order(), lo in 0.001f64..0.9, width in 0.001f64..0.5) {
        let hi = (lo + width).min(0.999);
        let (t1, t3) = (tau_in(n, s, lo), tau_in(n, s, hi));
        let t2 = 0.5 * (t1 + t3);
        let c = |t| spectral_constant(n, s, t).unwrap().value;
        prop_assert!(c(t2) >= 0.5 * (c(t1) + c(t3)) - 1e-10);
    }

    #[test]
    fn spectral_sign_pattern((n, s) in order(), frac in 0.0f64..1.0) {
        let tau = tau_in(n, s, frac);
        let v = spectral_constant(n, s, tau).unwrap().value;
        let inner = tau > 2.0 * s - n as f64 && tau < 0.0;
        let outer = tau < 2.0 * s - n as f64 || tau > 0.0;
        if inner {
            prop_assert!(v > 0.0, "C_s({tau}) = {v}");
        } else if outer {
            prop_assert!(v < 0.0, "C_s({tau}) = {v}");
        }
    }

    #[test]
    fn hardy_round_trip((n, s) in order(), offset in -6.0f64..3.0) {
        let mu = mu_zero(n, s).unwrap() + 10f64.powf(offset);
        let h = hardy_exponents(n, s, mu).unwrap();
        prop_assert!((h.tau_minus + h.tau_plus - (2.0 * s - n as f64)).abs() <= 1e-10);
        for t in [h.tau_minus, h.tau_plus] {
            let c = spectral_constant(n, s, t).unwrap().value;
            prop_assert!((c + mu).abs() <= 1e-10 * (1.0 + mu.abs()), "C_s({t}) = {c}, mu = {mu}");
        }
    }

    #[test]
    fn kappa_defining_identity((n, s) in order(), theta_frac in 0.0f64..1.0, dp in 0.05f64..5.0) {
        let theta = -2.0 * s + 3.0 * theta_frac;
        let p = serrin_exponent(n, s, theta) + dp;
        let params = ProblemParams::new(n, s, theta, p).unwrap();
        let k = kappa(&params).unwrap();
        let c = spectral_constant(n, s, -params.beta()).unwrap().value;
        prop_assert!(k > 0.0);
        prop_assert!((k.powf(p - 1.0) - c).abs() <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn theta_star_is_an_involution((n, s) in order(), tt in -0.9f64..3.0, p in 1.1f64..8.0) {
        prop_assume!(tt > -2.0 * s);
        let once = theta_star(n, s, tt, p);
        let twice = theta_star(n, s, once, p);
        prop_assert!((twice - tt).abs() <= 1e-12 * (1.0 + tt.abs() + p * n as f64));
    }

    #[test]
    fn kelvin_identity_on_powers((n, s) in order(), frac in 0.001f64..0.999) {
        let gamma = -2.0 * s + (n as f64 + 2.0 * s) * frac;
        let c = verify_kelvin_identity(n, s, gamma, &[0.01, 0.3, 1.0, 7.0, 200.0], 1e-10).unwrap();
        prop_assert!(c.passed, "gamma = {gamma}: {}", c.max_residual);
    }

    #[test]
    fn kelvin_double_transform(
        (n, s) in order(),
        a in 0.1f64..3.0,
        b in -1.0f64..1.0,
        k in 8usize..120,
    ) {
        let grid = RadialGrid::log_uniform(1e-4, 10.0, k).unwrap();
        let u = RadialFunction::from_fn(grid, |r| a / (1.0 + r * r) + b * (0.5 * r).sin() + 2.0, 0.0, TailModel::Zero)
            .unwrap();
        let w = kelvin_transform(&kelvin_transform(&u, n, s).unwrap(), n, s).unwrap();
        for (x, y) in u.values.iter().zip(&w.values) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn reflection_keeps_grids_log_uniform(lo in -8.0f64..-1.0, span in 0.5f64..10.0, k in 2usize..500) {
        let g = RadialGrid::log_uniform(10f64.powf(lo), 10f64.powf(lo + span), k).unwrap();
        let r = g.reflected();
        prop_assert!(g.is_log_uniform() && r.is_log_uniform());
        prop_assert_eq!(r.len(), g.len());
        let ratio = r.nodes()[1] / r.nodes()[0];
        for w in r.nodes().windows(2) {
            prop_assert!((w[1] / w[0] / ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_is_exact_on_powers(
        amp in 0.01f64..100.0,
        gamma in -2.0f64..4.0,
        a in -5.5f64..-2.0,
        width in 0.5f64..3.0,
    ) {
        let grid = RadialGrid::default_unit();
        let u = RadialFunction::from_fn(grid, |r| amp * r.powf(-gamma), gamma.max(0.0), TailModel::Zero).unwrap();
        let window = (10f64.powf(a), 10f64.powf((a + width).min(-0.1)));
        let f = fit_asymptotics(&u, window).unwrap();
        prop_assert!((f.exponent - gamma).abs() <= 1e-10 * (1.0 + gamma.abs()));
        prop_assert!((f.coefficient / amp - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn harnack_is_scale_free_on_powers(gamma in 0.0f64..3.0, a in -5.0f64..-1.0, b in -5.0f64..-1.0) {
        let u = RadialFunction::power(RadialGrid::default_unit(), 1.3, gamma).unwrap();
        let (x, y) = (harnack_ratio(&u, 10f64.powf(a)).unwrap(), harnack_ratio(&u, 10f64.powf(b)).unwrap());
        prop_assert!((x - y).abs() <= 1e-10 * x);
        prop_assert!((x - 2f64.powf(gamma)).abs() <= 1e-10 * x);
    }

    #[test]
    fn classical_profile_solves_the_ode(n in 3u32..8, theta in -1.5f64..3.0, dp in 0.01f64..10.0) {
        let p = sobolev_exponent(n, 1.0, theta) + dp;
        let c = verify_classical_profile(n, theta, p).unwrap();
        prop_assert!(c.residual <= 1e-12, "residual {}", c.residual);
        prop_assert!((c.beta - classical_beta(theta, p)).abs() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_integral_matches_antiderivative(theta in -0.9f64..1.0, dp in 0.1f64..3.0, k in 0.5f64..2.0) {
        // u = k r^{-beta}: I(r) = |S^{N-1}| k^p r^{e} / e with e = N + theta - p beta
        let (n, s) = (3u32, 0.5);
        let p = serrin_exponent(n, s, theta) + dp;
        let params = ProblemParams::new(n, s, theta, p).unwrap();
        let beta = params.beta();
        let u = RadialFunction::power(RadialGrid::default_unit(), k, beta).unwrap();
        let radii = [1e-5, 1e-3, 0.1, 0.9];
        let got = mass_integral(&u, &params, &radii).unwrap();
        let e = n as f64 + theta - p * beta;
        let area = 4.0 * std::f64::consts::PI;
        for (r, v) in radii.iter().zip(&got) {
            let exact = area * k.powf(p) * r.powf(e) / e;
            prop_assert!((v / exact - 1.0).abs() <= 1e-6, "r = {r}: {v} vs {exact}");
        }
        let b = integral_bound_exponent(&u, &params, &geometric_samples(1e-5, 0.1, 12)).unwrap();
        prop_assert!((b.fit.exponent - e).abs() <= 1e-6);
    }

    #[test]
    fn operator_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, r0 in 0.05f64..0.8) {
        let (n, s) = (3u32, 0.4);
        let op = FracLaplacian::new(n, s).unwrap();
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 60).unwrap();
        let u = RadialFunction::from_fn(grid.clone(), |r| 1.0 / (1.0 + r * r), 0.0,
            TailModel::Power { amplitude: 0.5, decay: 2.0 }).unwrap();
        let v = RadialFunction::from_fn(grid, |r| (1.0 - r).max(0.0) + r * r, 0.0,
            TailModel::Power { amplitude: 1.0, decay: 2.0 }).unwrap();
        let w = u.combine(a, &v, b).unwrap();
        let (au, av, aw) = (
            op.apply(&u, r0, 1e-11).unwrap(),
            op.apply(&v, r0, 1e-11).unwrap(),
            op.apply(&w, r0, 1e-11).unwrap(),
        );
        let scale = (a * au).abs() + (b * av).abs() + 1.0;
        prop_assert!((aw - (a * au + b * av)).abs() <= 1e-10 * scale, "{aw} vs {}", a * au + b * av);
    }

    #[test]
    fn operator_scaling(lambda in 0.2f64..5.0, r0 in 0.05f64..0.5) {
        // u_l(r) = u(l r) lives on the grid scaled by 1/l with the same values
        let (n, s) = (2u32, 0.6);
        let op = FracLaplacian::new(n, s).unwrap();
        let f = |r: f64| 1.0 / (1.0 + r * r).sqrt();
        let tail = |l: f64| TailModel::Power { amplitude: l.powf(-1.0), decay: 1.0 };
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 60).unwrap();
        let u = RadialFunction::from_fn(grid.clone(), f, 0.0, tail(1.0)).unwrap();
        let scaled_grid = RadialGrid::log_uniform(1e-3 / lambda, 1.0 / lambda, 60).unwrap();
        let ul = RadialFunction::new(scaled_grid, u.values.clone(), 0.0, tail(lambda)).unwrap();
        let left = op.apply(&ul, r0 / lambda, 1e-11).unwrap();
        let right = lambda.powf(2.0 * s) * op.apply(&u, r0, 1e-11).unwrap();
        prop_assert!((left - right).abs() <= 1e-8 * right.abs().max(1.0), "{left} vs {right}");
    }
}
