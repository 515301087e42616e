//! The quantitative acceptance suite: eleven finite checks of the
//! asymptotic statements, shared by `fraclane report --suite acceptance`
//! and the `acceptance` test target.

use std::fmt::Write as _;
use std::sync::OnceLock;
use std::time::Instant;

use serde::Serialize;

use crate::classical::{classical_asymptotics, classical_beta, shoot_singular, verify_classical_profile, ShootOptions};
use crate::constants::{
    classical_coefficient, hardy_exponents, kappa, mu_zero, sobolev_exponent, spectral_constant,
    spectral_constant_integral, theta_star, ProblemParams,
};
use crate::diagnostics::{
    boundary_fit, fit_asymptotics, geometric_samples, integral_bound_exponent, max_dyadic_harnack, monotonicity_check,
    DEFAULT_WINDOW,
};
use crate::error::Result;
use crate::fracop::FracLaplacian;
use crate::grid::{RadialFunction, RadialGrid, TailModel};
use crate::kelvin::{kelvin_transform, verify_kelvin_identity, verify_kelvin_quadrature};
use crate::solver::{eigenpair, newton_singular_solution, picard_minimal_solution, NewtonOptions, PicardOptions};
use crate::special::gamma;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "constant cross-validation"),
    (2, "zeros, maximum and symmetry of C_s"),
    (3, "Hardy exponents"),
    (4, "operator identity on powers"),
    (5, "singular-rate recovery"),
    (6, "integral bound"),
    (7, "Harnack ratios"),
    (8, "minimal solution"),
    (9, "Kelvin transform"),
    (10, "classical s = 1"),
    (11, "Dirichlet eigenpair"),
];

/// Criteria known to fail, with the reason.
pub const EXPECTED_FAILURES: [(u8, &str); 1] = [(
    5,
    "(N,s,theta,p) = (2,0.75,0,4) has p = (N+theta)/(N-2s): the singular profile constant vanishes and no singular solution exists",
)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// One line per sub-check.
    pub detail: Vec<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn expected_failure(&self) -> Option<&'static str> {
        EXPECTED_FAILURES
            .iter()
            .find(|(id, _)| *id == self.id)
            .map(|(_, why)| *why)
    }

    /// `[PASS] 5 singular-rate recovery (12.3 s)`.
    pub fn summary_line(&self) -> String {
        let tag = match (self.passed, self.expected_failure()) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (expected)",
            (false, None) => "FAIL",
        };
        format!("[{tag}] {:>2} {} ({:.1} s)", self.id, self.name, self.seconds)
    }
}

struct Checks {
    lines: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            lines: Vec::new(),
            ok: true,
        }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.lines.push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
        self.ok &= ok;
    }

    fn record<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id)).collect()
}

/// Runs one criterion; unknown ids yield a failed result.
pub fn run_criterion(id: u8) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    match id {
        1 => constants_cross_validation(&mut c),
        2 => zeros_and_maximum(&mut c),
        3 => hardy(&mut c),
        4 => operator_identity(&mut c),
        5 => singular_rate(&mut c),
        6 => integral_bound(&mut c),
        7 => harnack(&mut c),
        8 => minimal_solution(&mut c),
        9 => kelvin(&mut c),
        10 => classical(&mut c),
        11 => eigen(&mut c),
        _ => c.check(false, format!("unknown criterion {id}")),
    }
    let name = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown");
    CriterionResult {
        id,
        name,
        passed: c.ok,
        detail: c.lines,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn constants_cross_validation(c: &mut Checks) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [2u32, 3, 4, 5, 6] {
        for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let nf = n as f64;
            for k in 1..=7 {
                let tau = -nf + (nf + 2.0 * s) * k as f64 / 8.0;
                let (Some(a), Some(b)) = (
                    c.record("closed form", spectral_constant(n, s, tau)),
                    c.record("integral form", spectral_constant_integral(n, s, tau, 1e-9)),
                ) else {
                    continue;
                };
                worst = worst.max((a.value - b.value).abs() / (1.0 + a.value.abs()));
                count += 1;
            }
        }
    }
    c.check(
        count == 175 && worst <= 1e-6,
        format!("{count} (N, s, tau) triples, max |closed - integral|/(1+|C|) = {worst:.3e} (<= 1e-6)"),
    );
}

fn zeros_and_maximum(c: &mut Checks) {
    let mut zeros = true;
    let mut peak = 0.0f64;
    let mut sym = 0.0f64;
    let mut samples = 0;
    for n in [1u32, 2, 3, 4, 5] {
        for s in [0.1, 0.25, 0.45] {
            let nf = n as f64;
            let Some(z0) = c.record("C_s(0)", spectral_constant(n, s, 0.0)) else {
                continue;
            };
            let Some(z1) = c.record("C_s(2s-N)", spectral_constant(n, s, 2.0 * s - nf)) else {
                continue;
            };
            zeros &= z0.value == 0.0 && z1.value == 0.0;
            let mid = spectral_constant(n, s, s - 0.5 * nf)
                .map(|v| v.value)
                .unwrap_or(f64::NAN);
            let g = gamma(0.25 * (nf + 2.0 * s)) / gamma(0.25 * (nf - 2.0 * s));
            let closed = 4f64.powf(s) * g * g;
            peak = peak.max((mid - closed).abs() / closed.max(1.0));
            if let Ok(m0) = mu_zero(n, s) {
                peak = peak.max((m0 + closed).abs() / closed.max(1.0));
            }
        }
    }
    for n in [1u32, 2, 3, 4, 5] {
        for s in [0.1, 0.3, 0.45] {
            let nf = n as f64;
            let (lo, hi) = (-nf, 2.0 * s);
            for k in 0..667 {
                let tau = lo + (hi - lo) * (k as f64 + 0.5) / 667.0;
                let a = spectral_constant(n, s, tau).map(|v| v.value).unwrap_or(f64::NAN);
                let b = spectral_constant(n, s, 2.0 * s - nf - tau)
                    .map(|v| v.value)
                    .unwrap_or(f64::NAN);
                sym = sym.max((a - b).abs() / (1.0 + a.abs()));
                samples += 1;
            }
        }
    }
    c.check(zeros, "C_s(0) = C_s(2s-N) = 0 exactly");
    c.check(
        peak <= 1e-12,
        format!("C_s((2s-N)/2) against the Gamma-ratio closed form: {peak:.3e} (<= 1e-12)"),
    );
    c.check(
        samples >= 10_000 && sym <= 1e-10,
        format!("symmetry C_s(tau) = C_s(2s-N-tau) at {samples} samples: {sym:.3e} (<= 1e-10)"),
    );
}

fn hardy(c: &mut Checks) {
    let mut sum_err = 0.0f64;
    let mut root_err = 0.0f64;
    let mut count = 0;
    for &(n, s) in &[(1u32, 0.3), (3, 0.5), (4, 0.8), (2, 0.6)] {
        let Some(m0) = c.record("mu_0", mu_zero(n, s)) else {
            continue;
        };
        let nf = n as f64;
        for k in 0..25 {
            // mu from mu_0 up to mu_0 + 10^3, log-spaced offsets
            let mu = m0 + 10f64.powf(-6.0 + 9.0 * k as f64 / 24.0);
            let Some(h) = c.record("hardy_exponents", hardy_exponents(n, s, mu)) else {
                continue;
            };
            sum_err = sum_err.max((h.tau_minus + h.tau_plus - (2.0 * s - nf)).abs());
            for t in [h.tau_minus, h.tau_plus] {
                let v = spectral_constant(n, s, t).map(|v| v.value).unwrap_or(f64::NAN);
                root_err = root_err.max((v + mu).abs() / (1.0 + mu.abs()));
            }
            count += 1;
        }
    }
    c.check(
        count == 100 && sum_err <= 1e-10,
        format!("{count} mu >= mu_0: max |tau_- + tau_+ - (2s-N)| = {sum_err:.3e} (<= 1e-10)"),
    );
    c.check(
        root_err <= 1e-10,
        format!("max |C_s(tau) + mu| / (1+|mu|) = {root_err:.3e} (<= 1e-10)"),
    );
    let (n, s) = (3u32, 0.5);
    let zero = hardy_exponents(n, s, 0.0);
    let m0 = mu_zero(n, s).unwrap_or(f64::NAN);
    let double = hardy_exponents(n, s, m0);
    let ok_zero = matches!(zero, Ok(h) if h.tau_minus == 2.0 * s - 3.0 && h.tau_plus == 0.0);
    let ok_double = matches!(double, Ok(h) if h.tau_minus == s - 1.5 && h.tau_plus == s - 1.5);
    c.check(ok_zero, "mu = 0 gives (2s-N, 0)");
    c.check(ok_double, "mu = mu_0 gives the double root (2s-N)/2");
}

/// (N, s) pairs of the operator checks.
const OPERATOR_CASES: [(u32, f64); 4] = [(1, 0.3), (2, 0.5), (3, 0.5), (3, 0.8)];
const TAU_FRACTIONS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

fn operator_identity(c: &mut Checks) {
    for &(n, s) in &OPERATOR_CASES {
        let Some(op) = c.record("operator", FracLaplacian::new(n, s)) else {
            continue;
        };
        let taus: Vec<f64> = TAU_FRACTIONS.iter().map(|f| f * (2.0 * s - n as f64)).collect();
        // pointwise
        let mut worst = 0.0f64;
        let grid = RadialGrid::log_uniform(1e-3, 1e3, 200).expect("valid grid");
        for &tau in &taus {
            let Some(u) = c.record("power", RadialFunction::power(grid.clone(), 1.0, -tau)) else {
                continue;
            };
            let cs = spectral_constant(n, s, tau).map(|v| v.value).unwrap_or(f64::NAN);
            for r0 in [0.1, 1.0, 10.0] {
                let Some(v) = c.record("apply", op.apply(&u, r0, 1e-9)) else {
                    continue;
                };
                let exact = cs * r0.powf(tau - 2.0 * s);
                worst = worst.max((v - exact).abs() / exact.abs());
            }
        }
        c.check(
            worst <= 1e-5,
            format!("N={n} s={s}: pointwise max relative error {worst:.3e} (<= 1e-5) at r0 in {{0.1, 1, 10}}"),
        );
        // assembled matrix, unweighted model; the inner cut-off is placed so
        // the missing mass (r_min/0.1)^{N+tau} stays below 1e-6
        let nf = n as f64;
        let decay = nf + TAU_FRACTIONS[3] * (2.0 * s - nf);
        let r_min = 0.1 * 1e-6f64.powf(1.0 / decay);
        let h = if s > 0.6 { 0.025 } else { 0.06 };
        let count = ((1e3 / r_min).ln() / h).round() as usize;
        let Some(grid) = c.record("grid", RadialGrid::log_uniform(r_min, 1e3, count)) else {
            continue;
        };
        let first = TailModel::Power {
            amplitude: 1.0,
            decay: -taus[0],
        };
        let Some(base) = c.record("assembly", op.assemble(&grid, &first, 0.0, 1e-9)) else {
            continue;
        };
        let mut worst = 0.0f64;
        for &tau in &taus {
            let tail = TailModel::Power {
                amplitude: 1.0,
                decay: -tau,
            };
            let Some(m) = c.record("exterior", base.with_tail(&tail, 1e-9)) else {
                continue;
            };
            let u = nalgebra::DVector::from_iterator(count, grid.nodes().iter().map(|r| r.powf(tau)));
            let au = m.apply(&u);
            let cs = spectral_constant(n, s, tau).map(|v| v.value).unwrap_or(f64::NAN);
            for i in grid.indices_in(0.1, 10.0) {
                let r = grid.nodes()[i];
                let exact = cs * r.powf(tau - 2.0 * s);
                worst = worst.max((au[i] - exact).abs() / exact.abs());
            }
        }
        c.check(
            worst <= 1e-4,
            format!("N={n} s={s}: matrix ({count} nodes) max relative error {worst:.3e} (<= 1e-4) on r in [0.1, 10]"),
        );
    }
}

/// Cases of the singular-rate criterion.
pub const SINGULAR_CASES: [(u32, f64, f64, f64); 3] = [(3, 0.5, 0.0, 3.0), (3, 0.5, -0.5, 2.5), (2, 0.75, 0.0, 4.0)];

struct SingularRun {
    case: (u32, f64, f64, f64),
    outcome: std::result::Result<(ProblemParams, RadialFunction, usize), String>,
}

/// Newton runs from a 10% perturbed seed on the default grid, computed once.
fn singular_runs() -> &'static [SingularRun] {
    static RUNS: OnceLock<Vec<SingularRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        SINGULAR_CASES
            .iter()
            .map(|&(n, s, theta, p)| {
                let outcome = (|| -> Result<_> {
                    let params = ProblemParams::new(n, s, theta, p)?;
                    let tail = TailModel::Power {
                        amplitude: params.kappa()?,
                        decay: params.beta(),
                    };
                    let grid = RadialGrid::default_unit();
                    let (u, rep) = newton_singular_solution(&params, &grid, &tail, 0.1, &NewtonOptions::default())?;
                    Ok((params, u, rep.iterations))
                })()
                .map_err(|e| e.to_string());
                SingularRun {
                    case: (n, s, theta, p),
                    outcome,
                }
            })
            .collect()
    })
}

fn singular_rate(c: &mut Checks) {
    let k = ProblemParams::new(3, 0.5, 0.0, 3.0)
        .and_then(|p| kappa(&p))
        .unwrap_or(f64::NAN);
    c.check(
        (k - 0.5f64.sqrt()).abs() <= 1e-12,
        format!(
            "K(3, 0.5, 0, 3) = {k:.17} vs sqrt(1/2), error {:.3e} (<= 1e-12)",
            (k - 0.5f64.sqrt()).abs()
        ),
    );
    for run in singular_runs() {
        let (n, s, theta, p) = run.case;
        match &run.outcome {
            Err(e) => c.check(false, format!("({n}, {s}, {theta}, {p}): {e}")),
            Ok((params, u, its)) => {
                let beta = params.beta();
                let kappa = params.kappa().unwrap_or(f64::NAN);
                match fit_asymptotics(u, DEFAULT_WINDOW) {
                    Err(e) => c.check(false, format!("({n}, {s}, {theta}, {p}): fit failed: {e}")),
                    Ok(f) => {
                        let de = (f.exponent / beta - 1.0).abs();
                        let dc = (f.coefficient / kappa - 1.0).abs();
                        c.check(
                            de <= 0.01 && dc <= 0.02,
                            format!(
                                "({n}, {s}, {theta}, {p}): Newton converged in {its} steps; exponent {:.8} vs {beta:.8} ({de:.2e} <= 1e-2), coefficient {:.8} vs {kappa:.8} ({dc:.2e} <= 2e-2)",
                                f.exponent, f.coefficient
                            ),
                        );
                    }
                }
            }
        }
    }
}

fn integral_bound(c: &mut Checks) {
    let radii = geometric_samples(1e-4, 1e-2, 12);
    if let Ok(params) = ProblemParams::new(3, 0.5, 0.0, 3.0) {
        let grid = RadialGrid::default_unit();
        let exact = RadialFunction::power(grid, params.kappa().unwrap_or(f64::NAN), params.beta());
        if let Some(b) = exact
            .and_then(|u| integral_bound_exponent(&u, &params, &radii))
            .map_or_else(
                |e| {
                    c.check(false, format!("exact profile: {e}"));
                    None
                },
                Some,
            )
        {
            let err = (b.fit.exponent - 1.5).abs();
            c.check(
                err <= 1e-6,
                format!(
                    "exact (3, 0.5, 0, 3) profile: exponent {:.12} vs 3/2 ({err:.2e} <= 1e-6)",
                    b.fit.exponent
                ),
            );
        }
    }
    let mut any = false;
    for run in singular_runs() {
        let Ok((params, u, _)) = &run.outcome else { continue };
        any = true;
        let (n, s, theta, p) = run.case;
        let Some(b) = c.record("integral", integral_bound_exponent(u, params, &radii)) else {
            continue;
        };
        let err = (b.fit.exponent / b.expected_exponent - 1.0).abs();
        c.check(
            err <= 0.03,
            format!(
                "({n}, {s}, {theta}, {p}): exponent {:.6} vs {:.6} ({err:.2e} <= 3e-2)",
                b.fit.exponent, b.expected_exponent
            ),
        );
    }
    c.check(any, "at least one converged singular solution");
}

fn harnack(c: &mut Checks) {
    if let Ok(params) = ProblemParams::new(3, 0.5, 0.0, 3.0) {
        let beta = params.beta();
        let exact = RadialFunction::power(RadialGrid::default_unit(), params.kappa().unwrap_or(f64::NAN), beta);
        if let Some(h) = c.record("exact", exact.and_then(|u| max_dyadic_harnack(&u, 1e-4, 0.25))) {
            let err = (h - 2f64.powf(beta)).abs();
            c.check(
                err <= 1e-8,
                format!("exact profile: ratio {h:.12} vs 2^beta ({err:.2e} <= 1e-8)"),
            );
        }
    }
    let mut any = false;
    for run in singular_runs() {
        let Ok((params, u, _)) = &run.outcome else { continue };
        any = true;
        let (n, s, theta, p) = run.case;
        let bound = 1.1 * 2f64.powf(params.beta());
        let Some(h) = c.record("harnack", max_dyadic_harnack(u, 1e-4, 0.25)) else {
            continue;
        };
        c.check(
            h <= bound,
            format!("({n}, {s}, {theta}, {p}): max dyadic ratio {h:.6} (<= {bound:.6})"),
        );
    }
    c.check(any, "at least one converged singular solution");
}

fn minimal_solution(c: &mut Checks) {
    let Some(params) = c.record("params", ProblemParams::new(3, 0.5, 0.0, 3.0)) else {
        return;
    };
    let grid = RadialGrid::default_unit();
    let opts = PicardOptions::default();
    if let Some((u, rep)) = c.record("b = 0", picard_minimal_solution(&params, 0.0, &grid, &opts)) {
        let zero = u.values.iter().all(|v| *v == 0.0);
        c.check(
            rep.converged && zero,
            format!("b = 0: zero solution ({} iterations)", rep.iterations),
        );
    }
    if let Some((u, rep)) = c.record("b = 0.05", picard_minimal_solution(&params, 0.05, &grid, &opts)) {
        let mono = monotonicity_check(&u);
        let sup = u.values.iter().cloned().fold(0.0, f64::max);
        c.check(
            rep.converged && rep.monotone && !rep.cap_exceeded && mono.nonincreasing && sup.is_finite(),
            format!(
                "b = 0.05: converged={} in {} iterations, monotone iterates={}, nonincreasing={}, sup u = {sup:.6}",
                rep.converged, rep.iterations, rep.monotone, mono.nonincreasing
            ),
        );
    }
    if let Some((_, rep)) = c.record("b = 10", picard_minimal_solution(&params, 10.0, &grid, &opts)) {
        c.check(
            rep.cap_exceeded,
            format!(
                "b = 10: cap_exceeded={} after {} iterations",
                rep.cap_exceeded, rep.iterations
            ),
        );
    }
}

fn kelvin(c: &mut Checks) {
    let radii = [0.01, 0.3, 1.0, 7.0, 200.0];
    let mut worst = 0.0f64;
    for &(n, s) in &[(1u32, 0.3), (2, 0.5), (3, 0.5), (3, 0.8), (5, 0.2)] {
        let nf = n as f64;
        for k in 1..20 {
            let gamma = -2.0 * s + (nf + 2.0 * s) * k as f64 / 20.0;
            if let Some(r) = c.record("analytic", verify_kelvin_identity(n, s, gamma, &radii, 1e-10)) {
                worst = worst.max(r.max_residual);
            }
        }
    }
    c.check(
        worst <= 1e-10,
        format!("analytic identity on powers: {worst:.3e} (<= 1e-10)"),
    );
    let grid = RadialGrid::log_uniform(1e-4, 1e4, 200).expect("valid grid");
    let mut worst = 0.0f64;
    for &(n, s, gamma) in &[(3u32, 0.5, 0.8), (2, 0.3, 0.5), (3, 0.8, 1.0)] {
        if let Some(r) = c.record(
            "quadrature",
            verify_kelvin_quadrature(n, s, gamma, &grid, &[0.05, 0.5, 3.0], 1e-4),
        ) {
            worst = worst.max(r.max_residual);
        }
    }
    c.check(worst <= 1e-4, format!("quadrature identity: {worst:.3e} (<= 1e-4)"));
    let mut exact = true;
    for &(n, s) in &[(3u32, 0.5), (4, 0.7), (5, 0.25)] {
        let nf = n as f64;
        for tt in [0.0, 0.5, 1.0, 2.0] {
            let p = (nf + 2.0 * s + tt) / (nf - 2.0 * s);
            exact &= theta_star(n, s, tt, p) == 0.0;
        }
    }
    c.check(exact, "theta*((N+2s+theta~)/(N-2s)) = 0 exactly");
    let grid = RadialGrid::log_uniform(1e-5, 1.0, 300).expect("valid grid");
    let mut worst = 0.0f64;
    if let Some(u) = c.record(
        "function",
        RadialFunction::from_fn(grid, |r| (1.0 + r * r).recip() * r.powf(-0.3), 0.3, TailModel::Zero),
    ) {
        for &(n, s) in &[(3u32, 0.5), (2, 0.3)] {
            if let Some(w) = c.record(
                "double transform",
                kelvin_transform(&u, n, s).and_then(|v| kelvin_transform(&v, n, s)),
            ) {
                for (a, b) in u.values.iter().zip(&w.values) {
                    worst = worst.max((a - b).abs() / a.abs());
                }
            }
        }
    }
    c.check(worst <= 1e-12, format!("double transform: {worst:.3e} (<= 1e-12)"));
}

fn classical(c: &mut Checks) {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [3u32, 4, 6] {
        for theta in [-1.0, 0.0, 1.5] {
            let sob = sobolev_exponent(n, 1.0, theta);
            for dp in [0.5, 2.0, 7.0] {
                if let Some(r) = c.record("profile", verify_classical_profile(n, theta, sob + dp)) {
                    worst = worst.max(r.residual);
                    count += 1;
                }
            }
        }
    }
    c.check(
        count == 27 && worst <= 1e-12,
        format!("exact-profile residual over {count} (N, theta, p): {worst:.3e} (<= 1e-12)"),
    );
    // the perturbation relaxes like r^{-(N-2-2b)/2}; four decades separate
    // the start from the fit window
    let r0 = 1e-8;
    for &(n, theta, p) in &[(3u32, 0.0, 7.0), (3, -1.0, 6.0)] {
        let b = classical_beta(theta, p);
        let cc = classical_coefficient(n, theta, p).unwrap_or(f64::NAN);
        for delta in [0.05, -0.05] {
            let fit = shoot_singular(n, theta, p, r0, delta, 1.0, &ShootOptions::default())
                .and_then(|t| classical_asymptotics(&t, DEFAULT_WINDOW));
            let Some(f) = c.record("shooting", fit) else { continue };
            let de = (f.exponent / b - 1.0).abs();
            let dc = (f.coefficient / cc - 1.0).abs();
            c.check(
                de <= 0.02 && dc <= 0.05,
                format!(
                    "({n}, {theta}, {p}) delta={delta}: exponent {:.6} vs {b:.6} ({de:.2e} <= 2e-2), coefficient {:.6} vs {cc:.6} ({dc:.2e} <= 5e-2)",
                    f.exponent, f.coefficient
                ),
            );
        }
    }
}

/// (N, s) pairs of the eigenpair criterion and the boundary fit window in r.
const EIGEN_CASES: [(u32, f64); 2] = [(3, 0.5), (3, 0.8)];
const EIGEN_WINDOW: (f64, f64) = (0.99, 0.9999);

fn eigen(c: &mut Checks) {
    for &(n, s) in &EIGEN_CASES {
        let mut lambdas = Vec::new();
        for count in [200usize, 400] {
            let Some(grid) = c.record("grid", RadialGrid::two_sided(1e-4, 1.0, 1e-5, count)) else {
                continue;
            };
            let Some(e) = c.record("eigenpair", eigenpair(n, s, &grid, 1e-10)) else {
                continue;
            };
            lambdas.push(e.lambda1);
            if count == 400 {
                let positive = e.xi1.values.iter().all(|v| *v > 0.0);
                c.check(
                    e.lambda1 > 0.0 && positive,
                    format!(
                        "N={n} s={s}: lambda_1 = {:.8} > 0, xi_1 > 0 at all {count} nodes: {positive}",
                        e.lambda1
                    ),
                );
                let window = (1.0 - EIGEN_WINDOW.1, 1.0 - EIGEN_WINDOW.0);
                if let Some(f) = c.record("boundary fit", boundary_fit(&e.xi1, window)) {
                    let slope = f.exponent;
                    let err = (slope / s - 1.0).abs();
                    c.check(
                        err <= 0.1,
                        format!("N={n} s={s}: boundary exponent {slope:.6} on 1-r in [{:.0e}, {:.0e}] vs s ({err:.2e} <= 1e-1)", window.0, window.1),
                    );
                }
            }
        }
        if let [a, b] = lambdas[..] {
            let err = (b / a - 1.0).abs();
            c.check(
                err <= 0.01,
                format!("N={n} s={s}: lambda_1 {a:.8} (n=200) vs {b:.8} (n=400), change {err:.2e} (<= 1e-2)"),
            );
        }
    }
}

/// Plain-text table of results.
pub fn render(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(out, "{}", r.summary_line());
        for line in &r.detail {
            let _ = writeln!(out, "      {line}");
        }
        if let (false, Some(why)) = (r.passed, r.expected_failure()) {
            let _ = writeln!(out, "      known: {why}");
        }
    }
    out
}
