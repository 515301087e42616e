//! Kelvin transform u#(r) = r^{2s-N} u(1/r) of radial functions, and the
//! map from exterior problems in R^N \ B_1 to interior problems in B_1.

use serde::Serialize;

use crate::constants::{spectral_constant, theta_star, ProblemParams};
use crate::error::{domain, Error, Result};
use crate::fracop::apply_frac_laplacian;
use crate::grid::{RadialFunction, RadialGrid, TailModel};

/// Transforms `u` onto the reflected grid.
///
/// Nodes map exactly (r -> 1/r), so no interpolation is involved. The
/// region below the first node of the result is the image of the exterior
/// of `u`: a power tail r^{-d} becomes r^{-(N-2s-d)}, which fixes the new
/// weight N - 2s - d (clamped at 0). Other tails give max(N - 2s - beta_w, 0).
/// The exterior of the result is the image of the model below the first
/// node, y_0 r^{-beta_w}, i.e. a power tail.
pub fn kelvin_transform(u: &RadialFunction, n: u32, s: f64) -> Result<RadialFunction> {
    if !u.grid.is_log_uniform() {
        return Err(domain("Kelvin transform needs a log-uniform grid"));
    }
    let shift = 2.0 * s - n as f64;
    let grid = u.grid.reflected();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.values.iter().rev())
        .map(|(r, v)| r.powf(shift) * v)
        .collect();
    let r0 = u.grid.nodes()[0];
    let tail = TailModel::Power {
        amplitude: r0.powf(u.weight) * u.values[0],
        decay: -shift - u.weight,
    };
    let weight = match u.tail {
        TailModel::Power { decay, .. } => -shift - decay,
        _ => -shift - u.weight,
    };
    RadialFunction::new(grid, values, weight.max(0.0), tail)
}

/// Outcome of a check of the Kelvin operator identity on r^{-gamma}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KelvinCheck {
    pub gamma: f64,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn check_gamma(n: u32, s: f64, gamma: f64) -> Result<()> {
    if !(gamma > -2.0 * s && gamma < n as f64) {
        return Err(domain(format!(
            "gamma = {gamma} must lie in (-2s, N) = ({}, {n})",
            -2.0 * s
        )));
    }
    Ok(())
}

/// (-Delta)^s u#(r) against r^{-N-2s} ((-Delta)^s u)(1/r) for u = r^{-gamma},
/// both sides from the closed-form power multiplier.
pub fn verify_kelvin_identity(n: u32, s: f64, gamma: f64, radii: &[f64], tol: f64) -> Result<KelvinCheck> {
    check_gamma(n, s, gamma)?;
    let nf = n as f64;
    let c_left = spectral_constant(n, s, gamma + 2.0 * s - nf)?.value;
    let c_right = spectral_constant(n, s, -gamma)?.value;
    let mut max_residual = 0.0f64;
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            return Err(domain(format!("sample radius {r} must be positive")));
        }
        // u# = r^{2s-N+gamma}
        let left = c_left * r.powf(gamma - nf);
        let right = r.powf(-nf - 2.0 * s) * c_right * (1.0 / r).powf(-gamma - 2.0 * s);
        max_residual = max_residual.max(relative(left, right));
    }
    Ok(KelvinCheck {
        gamma,
        max_residual,
        tol,
        passed: max_residual <= tol,
    })
}

/// As [`verify_kelvin_identity`], with the left side computed by quadrature
/// on the transformed function sampled on `grid` (log-uniform).
pub fn verify_kelvin_quadrature(
    n: u32,
    s: f64,
    gamma: f64,
    grid: &RadialGrid,
    radii: &[f64],
    tol: f64,
) -> Result<KelvinCheck> {
    check_gamma(n, s, gamma)?;
    let nf = n as f64;
    let reflected = grid.reflected();
    let u = RadialFunction::power(reflected, 1.0, gamma)?;
    let v = kelvin_transform(&u, n, s)?;
    let c_right = spectral_constant(n, s, -gamma)?.value;
    let mut max_residual = 0.0f64;
    for &r in radii {
        if !(r > v.grid.nodes()[0] && r < v.grid.r_max()) {
            return Err(domain(format!("sample radius {r} outside the grid")));
        }
        let left = apply_frac_laplacian(n, s, &v, r, 1e-10)?;
        let right = c_right * r.powf(gamma - nf);
        max_residual = max_residual.max(relative(left, right));
    }
    Ok(KelvinCheck {
        gamma,
        max_residual,
        tol,
        passed: max_residual <= tol,
    })
}

/// Which exterior hypothesis the exterior exponent satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExteriorCase {
    /// p = (N + 2s + theta~)/(N - 2s) with theta~ >= 0: theta* = 0.
    Critical,
    /// (N + theta~)/(N - 2s) < p < (N + 2s + theta~)/(N - 2s): theta* in (-2s, 0).
    Subcritical,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExteriorMap {
    pub theta_tilde: f64,
    pub theta_star: f64,
    pub case: ExteriorCase,
    pub interior: ProblemParams,
    /// (2s + theta~)/(p - 1), the decay rate of the exterior solution.
    pub exterior_decay: f64,
}

/// Interior problem for u# when u solves (-Delta)^s u = |x|^theta~ u^p
/// outside B_1.
pub fn exterior_to_interior(n: u32, s: f64, theta_tilde: f64, p: f64) -> Result<ExteriorMap> {
    if !(theta_tilde > -2.0 * s) {
        return Err(Error::Regime(format!(
            "exterior weight {theta_tilde} must exceed -2s = {}",
            -2.0 * s
        )));
    }
    let nf = n as f64;
    let ts = theta_star(n, s, theta_tilde, p);
    if !(ts > -2.0 * s) {
        return Err(Error::Regime(format!(
            "theta* = {ts} <= -2s: the transformed problem has no admissible weight"
        )));
    }
    let upper = (nf + 2.0 * s + theta_tilde) / (nf - 2.0 * s);
    let lower = (nf + theta_tilde) / (nf - 2.0 * s);
    let case = if theta_tilde >= 0.0 && (p - upper).abs() <= 1e-12 * upper {
        ExteriorCase::Critical
    } else if p > lower && p < upper {
        ExteriorCase::Subcritical
    } else {
        ExteriorCase::Other
    };
    let ts = match case {
        ExteriorCase::Critical => {
            debug_assert!(ts.abs() <= 1e-10);
            0.0
        }
        ExteriorCase::Subcritical => {
            debug_assert!(ts > -2.0 * s && ts < 0.0);
            ts
        }
        ExteriorCase::Other => ts,
    };
    let interior = ProblemParams::new(n, s, ts, p)?;
    Ok(ExteriorMap {
        theta_tilde,
        theta_star: ts,
        case,
        interior,
        exterior_decay: (2.0 * s + theta_tilde) / (p - 1.0),
    })
}
