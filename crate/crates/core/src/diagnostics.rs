//! Quantities extracted from computed solutions: power-law fits near the
//! origin, Harnack ratios on dyadic annuli, the growth of the weighted
//! mass integral and monotonicity.

use serde::Serialize;

use crate::constants::ProblemParams;
use crate::error::{domain, Error, Result};
use crate::grid::RadialFunction;
use crate::quad::GaussLegendre;
use crate::special::sphere_area;

/// Default fitting window.
pub const DEFAULT_WINDOW: (f64, f64) = (1e-4, 1e-2);
/// Fewest samples accepted by a fit.
pub const MIN_SAMPLES: usize = 8;

/// Least-squares fit u ~ coefficient * r^{-exponent}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub coefficient: f64,
    pub window: (f64, f64),
    /// sup |log u - log fit| over the samples.
    pub max_residual: f64,
    pub sample_count: usize,
}

/// Fits a line to (log r, log v) for the samples with r in `window`.
///
/// Returns exponent = -slope and coefficient = exp(intercept).
pub fn fit_power_law(radii: &[f64], values: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let (a, b) = window;
    if !(a > 0.0 && a < b) {
        return Err(domain(format!("fit window ({a}, {b}) needs 0 < r_a < r_b")));
    }
    let mut pts = Vec::new();
    for (&r, &v) in radii.iter().zip(values) {
        if r < a || r > b {
            continue;
        }
        if !(v > 0.0) {
            return Err(domain(format!(
                "nonpositive value {v} at r = {r} inside the fit window"
            )));
        }
        pts.push((r.ln(), v.ln()));
    }
    if pts.len() < MIN_SAMPLES {
        return Err(domain(format!(
            "fit window ({a}, {b}) holds {} samples, need at least {MIN_SAMPLES}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(FitResult {
        exponent: -slope,
        coefficient: intercept.exp(),
        window,
        max_residual,
        sample_count: pts.len(),
    })
}

/// Power-law fit of the nodal values of `u` on `window`.
pub fn fit_asymptotics(u: &RadialFunction, window: (f64, f64)) -> Result<FitResult> {
    let nodes = u.grid.nodes();
    if window.0 < nodes[0] || window.1 > u.grid.r_max() {
        return Err(domain(format!(
            "fit window ({}, {}) leaves the grid [{}, {}]",
            window.0,
            window.1,
            nodes[0],
            u.grid.r_max()
        )));
    }
    fit_power_law(nodes, &u.values, window)
}

/// Fit of u ~ coefficient d^{exponent} in the distance d = r_max - r to the
/// outer boundary; `window` is a range of d. The exponent is the rate of
/// vanishing, so it is positive for functions that vanish at r_max.
pub fn boundary_fit(u: &RadialFunction, window: (f64, f64)) -> Result<FitResult> {
    let r_max = u.grid.r_max();
    let (gaps, values): (Vec<f64>, Vec<f64>) = u
        .grid
        .nodes()
        .iter()
        .zip(&u.values)
        .rev()
        .map(|(r, v)| (r_max - r, *v))
        .unzip();
    let mut fit = fit_power_law(&gaps, &values, window)?;
    fit.exponent = -fit.exponent;
    Ok(fit)
}

/// True if the fitted coefficient lies in [K/C, C K].
pub fn within_sandwich(fit: &FitResult, kappa: f64, harnack: f64) -> bool {
    fit.coefficient >= kappa / harnack && fit.coefficient <= kappa * harnack
}

/// sup u / inf u over [r, 2r]: the model at both ends and the nodes between.
pub fn harnack_ratio(u: &RadialFunction, r: f64) -> Result<f64> {
    let nodes = u.grid.nodes();
    if !(r >= nodes[0] && 2.0 * r <= u.grid.r_max()) {
        return Err(domain(format!(
            "annulus [{r}, {}] leaves the grid [{}, {}]",
            2.0 * r,
            nodes[0],
            u.grid.r_max()
        )));
    }
    let model = u.model();
    let inner = u.grid.indices_in(r, 2.0 * r);
    let samples = [model.value(r), model.value(2.0 * r)];
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for v in samples.iter().chain(&u.values[inner]) {
        if !(*v > 0.0) {
            return Err(domain(format!("nonpositive value {v} in the annulus at r = {r}")));
        }
        hi = hi.max(*v);
        lo = lo.min(*v);
    }
    Ok(hi / lo)
}

/// Largest Harnack ratio over the dyadic annuli [r, 2r], r = a 2^k, 2r <= b.
pub fn max_dyadic_harnack(u: &RadialFunction, a: f64, b: f64) -> Result<f64> {
    let mut r = a;
    let mut worst = 1.0f64;
    while 2.0 * r <= b * (1.0 + 1e-12) {
        worst = worst.max(harnack_ratio(u, r)?);
        r *= 2.0;
    }
    Ok(worst)
}

/// Growth of I(r) = |S^{N-1}| int_0^r rho^{N-1+theta} u^p d rho.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralBound {
    /// Fit of I(r) ~ coefficient r^{exponent} (note the sign: exponent is the
    /// growth rate, unlike [`FitResult`] from [`fit_asymptotics`]).
    pub fit: FitResult,
    /// N - (theta + 2sp)/(p - 1).
    pub expected_exponent: f64,
    pub samples: Vec<(f64, f64)>,
}

const PANEL_POINTS: usize = 10;

/// I(r) at the given radii, integrating the interior model exactly below the
/// first node and by Gauss-Legendre panels in log r between knots.
pub fn mass_integral(u: &RadialFunction, params: &ProblemParams, radii: &[f64]) -> Result<Vec<f64>> {
    let model = u.model();
    let nodes = u.grid.nodes();
    let r_max = u.grid.r_max();
    let nt = params.n as f64 + params.theta;
    let p = params.p;
    let e0 = nt - p * u.weight;
    if !(e0 > 0.0) {
        return Err(Error::NotIntegrable(format!(
            "rho^(N-1+theta) u^p ~ rho^({}) near the origin",
            e0 - 1.0
        )));
    }
    for &r in radii {
        if !(r > 0.0 && r <= r_max) {
            return Err(domain(format!("radius {r} outside (0, {r_max}]")));
        }
    }
    let area = sphere_area(params.n);
    let rule = GaussLegendre::get(PANEL_POINTS);
    let panel = |xa: f64, xb: f64| -> f64 {
        rule.integrate(xa, xb, |x| {
            let y = model.weighted(x)[0];
            (nt * x).exp() * (y * (-u.weight * x).exp()).max(0.0).powf(p)
        })
    };
    // knots: nodes and r_max
    let mut knots: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
    knots.push(r_max.ln());
    let y0 = model.weighted(knots[0])[0].max(0.0);
    let mut cumulative = Vec::with_capacity(knots.len());
    let mut acc = y0.powf(p) * (e0 * knots[0]).exp() / e0;
    cumulative.push(acc);
    for w in knots.windows(2) {
        acc += panel(w[0], w[1]);
        cumulative.push(acc);
    }
    Ok(radii
        .iter()
        .map(|&r| {
            let x = r.ln();
            let i = knots.partition_point(|&k| k <= x);
            let base = if i == 0 {
                y0.powf(p) * (e0 * x).exp() / e0
            } else {
                cumulative[i - 1] + panel(knots[i - 1], x)
            };
            area * base
        })
        .collect())
}

/// Fits the growth exponent of I(r) over `radii` (at least 8).
pub fn integral_bound_exponent(u: &RadialFunction, params: &ProblemParams, radii: &[f64]) -> Result<IntegralBound> {
    let values = mass_integral(u, params, radii)?;
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    let mut fit = fit_power_law(radii, &values, (lo, hi))?;
    fit.exponent = -fit.exponent;
    let (n, s, theta, p) = (params.n as f64, params.s, params.theta, params.p);
    Ok(IntegralBound {
        fit,
        expected_exponent: n - (theta + 2.0 * s * p) / (p - 1.0),
        samples: radii.iter().cloned().zip(values).collect(),
    })
}

/// `count` radii spaced geometrically on [a, b].
pub fn geometric_samples(a: f64, b: f64, count: usize) -> Vec<f64> {
    let step = if count > 1 {
        (b / a).ln() / (count - 1) as f64
    } else {
        0.0
    };
    (0..count).map(|k| a * (step * k as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Monotonicity {
    pub nonincreasing: bool,
    /// First i with u_{i+1} > u_i beyond the tolerance.
    pub first_violation: Option<usize>,
}

/// Checks u_{i+1} <= u_i + 1e-12 |u_i| at consecutive nodes.
pub fn monotonicity_check(u: &RadialFunction) -> Monotonicity {
    let first_violation = u.values.windows(2).position(|w| w[1] > w[0] + 1e-12 * w[0].abs());
    Monotonicity {
        nonincreasing: first_violation.is_none(),
        first_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RadialGrid, TailModel};

    fn profile(params: &ProblemParams) -> RadialFunction {
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 400).unwrap();
        RadialFunction::power(grid, params.kappa().unwrap(), params.beta()).unwrap()
    }

    #[test]
    fn exact_profile_fit() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let u = profile(&params);
        let f = fit_asymptotics(&u, DEFAULT_WINDOW).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.coefficient - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(f.max_residual <= 1e-12);
        assert!(f.sample_count >= MIN_SAMPLES);
    }

    #[test]
    fn perturbed_profile_fit() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let k = params.kappa().unwrap();
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 400).unwrap();
        let u = RadialFunction::from_fn(
            grid,
            |r| k * r.powf(-0.5) * (1.0 + 0.01 * r.ln().sin()),
            0.5,
            TailModel::Zero,
        )
        .unwrap();
        // a window spanning a full period of sin(log r)
        let f = fit_asymptotics(&u, (1e-5, 1e-1)).unwrap();
        assert!((f.exponent / 0.5 - 1.0).abs() < 5e-3);
        assert!(f.max_residual > 5e-3 && f.max_residual < 2e-2);
        let f = fit_asymptotics(&u, DEFAULT_WINDOW).unwrap();
        assert!((f.exponent / 0.5 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn flat_data_has_zero_exponent() {
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 400).unwrap();
        let u = RadialFunction::from_fn(grid, |r| 2.0 + r, 0.0, TailModel::Zero).unwrap();
        let wide = fit_asymptotics(&u, (1e-2, 1e-1)).unwrap().exponent.abs();
        let narrow = fit_asymptotics(&u, (1e-5, 1e-4)).unwrap().exponent.abs();
        assert!(narrow < wide && narrow < 1e-4);
    }

    #[test]
    fn fit_errors() {
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 400).unwrap();
        let u = RadialFunction::from_fn(grid.clone(), |r| r - 1e-3, 0.0, TailModel::Zero).unwrap();
        assert!(fit_asymptotics(&u, (1e-4, 1e-2)).is_err());
        let u = RadialFunction::from_fn(grid, |_| 1.0, 0.0, TailModel::Zero).unwrap();
        assert!(fit_asymptotics(&u, (1e-3, 1.001e-3)).is_err());
        assert!(fit_asymptotics(&u, (1e-8, 1e-2)).is_err());
    }

    #[test]
    fn harnack_on_powers() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let u = profile(&params);
        for r in [1e-5, 3.3e-4, 0.01, 0.25] {
            let h = harnack_ratio(&u, r).unwrap();
            assert!((h - 2f64.sqrt()).abs() < 1e-8, "{h}");
        }
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 100).unwrap();
        let tail = TailModel::ConstantThenZero {
            value: 3.0,
            outer_radius: f64::INFINITY,
        };
        let c = RadialFunction::from_fn(grid, |_| 3.0, 0.0, tail).unwrap();
        assert_eq!(harnack_ratio(&c, 0.1).unwrap(), 1.0);
        assert!(harnack_ratio(&c, 0.6).is_err());
        let worst = max_dyadic_harnack(&u, 1e-4, 0.25).unwrap();
        assert!((worst - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn integral_on_the_profile() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let u = profile(&params);
        let k = params.kappa().unwrap();
        let radii = geometric_samples(1e-4, 0.5, 12);
        let b = integral_bound_exponent(&u, &params, &radii).unwrap();
        assert!((b.expected_exponent - 1.5).abs() < 1e-15);
        assert!((b.fit.exponent - 1.5).abs() < 1e-6);
        let area = sphere_area(3);
        for (r, i) in &b.samples {
            let exact = k.powi(3) * area * r.powf(1.5) / 1.5;
            assert!((i / exact - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn integral_detects_divergence() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 100).unwrap();
        let u = RadialFunction::power(grid, 1.0, 1.2).unwrap();
        assert!(matches!(
            integral_bound_exponent(&u, &params, &geometric_samples(1e-4, 0.5, 10)),
            Err(Error::NotIntegrable(_))
        ));
    }

    #[test]
    fn bounded_integral_grows_like_r_to_the_n() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let grid = RadialGrid::log_uniform(1e-6, 1.0, 200).unwrap();
        let u = RadialFunction::from_fn(grid, |_| 1.0, 0.0, TailModel::Zero).unwrap();
        let b = integral_bound_exponent(&u, &params, &geometric_samples(1e-5, 1e-2, 10)).unwrap();
        assert!((b.fit.exponent - 3.0).abs() < 1e-8);
    }

    #[test]
    fn monotonicity() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        assert!(monotonicity_check(&profile(&params)).nonincreasing);
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 50).unwrap();
        // decreasing, then a bump near r = 0.3
        let bump = RadialFunction::from_fn(
            grid,
            |r| 1.0 - r + 0.5 * (-(r - 0.3f64).powi(2) * 200.0).exp(),
            0.0,
            TailModel::Zero,
        )
        .unwrap();
        let m = monotonicity_check(&bump);
        assert!(!m.nonincreasing);
        let i = m.first_violation.unwrap();
        assert!(i > 0 && bump.values[i + 1] > bump.values[i]);
        assert!(bump.values[..=i].windows(2).all(|w| w[1] <= w[0]));
    }
}
