//! The local (s = 1) radial Lane-Emden equation
//! -u'' - (N-1) u'/r = r^theta u^p: the explicit singular profile
//! c r^{-b}, b = (2+theta)/(p-1), and outward shooting from near the origin.
//!
//! Shooting works in Emden-Fowler variables t = ln r, w = r^b u, where the
//! equation becomes autonomous,
//!
//! ```text
//! w'' + (N - 2 - 2b) w' + w^p - c^{p-1} w = 0,
//! ```
//!
//! and the profile is the fixed point w = c.

use std::cell::Cell;

use ode_solvers::dop_shared::{IntegrationError, OutputType, System};
use ode_solvers::{Dopri5, Vector2};
use serde::Serialize;

use crate::constants::{classical_coefficient, sobolev_exponent};
use crate::diagnostics::{fit_power_law, FitResult};
use crate::error::{domain, Error, Result};

/// Exponent b = (2 + theta)/(p - 1).
pub fn classical_beta(theta: f64, p: f64) -> f64 {
    (2.0 + theta) / (p - 1.0)
}

/// Result of [`verify_classical_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileCheck {
    pub coefficient: f64,
    pub beta: f64,
    /// sup |u'' + (N-1)u'/r + r^theta u^p| / |r^theta u^p| over the samples
    /// (0 when the coefficient vanishes).
    pub residual: f64,
    /// p > (N + 2 + 2 theta)/(N - 2).
    pub supercritical: bool,
}

/// Residual of c r^{-b} in the ODE at 100 radii in [1e-6, 1], from the
/// exact derivatives.
pub fn verify_classical_profile(n: u32, theta: f64, p: f64) -> Result<ProfileCheck> {
    let c = classical_coefficient(n, theta, p)?;
    let b = classical_beta(theta, p);
    let nf = n as f64;
    let mut residual = 0.0f64;
    if c > 0.0 {
        for k in 0..100 {
            let r = 10f64.powf(-6.0 + 6.0 * k as f64 / 99.0);
            let u = c * r.powf(-b);
            let du = -b * c * r.powf(-b - 1.0);
            let d2u = b * (b + 1.0) * c * r.powf(-b - 2.0);
            let rhs = r.powf(theta) * u.powf(p);
            residual = residual.max((-d2u - (nf - 1.0) * du / r - rhs).abs() / rhs.abs());
        }
    }
    Ok(ProfileCheck {
        coefficient: c,
        beta: b,
        residual,
        supercritical: p > sobolev_exponent(n, 1.0, theta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    ReachedBoundary,
    /// The solution grew without bound (or the step size underflowed).
    Blowup,
    /// The solution reached zero.
    Underflow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeTrajectory {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub termination: Termination,
    /// Last radius reached.
    pub end_radius: f64,
}

impl OdeTrajectory {
    /// Err(Blowup) unless the integration reached its end radius.
    pub fn require_boundary(&self) -> Result<&Self> {
        match self.termination {
            Termination::ReachedBoundary => Ok(self),
            _ => Err(Error::Blowup {
                radius: self.end_radius,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u32,
    /// Largest step in t = ln r; keeps the trajectory densely sampled.
    pub max_step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 10_000_000,
            max_step: 0.05,
        }
    }
}

/// Growth factor of w over c treated as blow-up.
const BLOWUP: f64 = 1e100;

struct EmdenFowler<'a> {
    damping: f64,
    cp: f64,
    p: f64,
    c: f64,
    stop: &'a Cell<Option<Termination>>,
}

impl System<f64, Vector2<f64>> for EmdenFowler<'_> {
    fn system(&self, _t: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        let w = y[0];
        dy[0] = y[1];
        dy[1] = -self.damping * y[1] - w.max(0.0).powf(self.p) + self.cp * w;
    }

    fn solout(&mut self, _t: f64, y: &Vector2<f64>, _dy: &Vector2<f64>) -> bool {
        if !(y[0] > 0.0) {
            self.stop.set(Some(Termination::Underflow));
        } else if !(y[0] < BLOWUP * self.c) || !y[1].is_finite() {
            self.stop.set(Some(Termination::Blowup));
        }
        self.stop.get().is_some()
    }
}

/// Integrates outward from r0 to r_end starting on (1 + delta) c r^{-b}
/// with the matching derivative.
pub fn shoot_singular(
    n: u32,
    theta: f64,
    p: f64,
    r0: f64,
    delta: f64,
    r_end: f64,
    opts: &ShootOptions,
) -> Result<OdeTrajectory> {
    if !(1e-8..=1e-4).contains(&r0) {
        return Err(domain(format!("start radius {r0} must lie in [1e-8, 1e-4]")));
    }
    if !(delta.abs() <= 0.1) {
        return Err(domain(format!("perturbation {delta} must satisfy |delta| <= 0.1")));
    }
    if !(r_end > r0 && r_end.is_finite()) {
        return Err(domain(format!("end radius {r_end} must exceed r0 = {r0}")));
    }
    let c = classical_coefficient(n, theta, p)?;
    if !(c > 0.0) {
        return Err(Error::Regime(format!(
            "p = {p} at the Serrin exponent: the singular profile vanishes"
        )));
    }
    let b = classical_beta(theta, p);
    let stop = Cell::new(None);
    let system = EmdenFowler {
        damping: n as f64 - 2.0 - 2.0 * b,
        cp: c.powf(p - 1.0),
        p,
        c,
        stop: &stop,
    };
    let (t0, t1) = (r0.ln(), r_end.ln());
    // w' = r^{b+1} u' + b w vanishes on every multiple of the profile
    let y0 = Vector2::new((1.0 + delta) * c, 0.0);
    let mut stepper = Dopri5::from_param(
        system,
        t0,
        t1,
        0.0,
        y0,
        opts.rtol,
        opts.atol,
        0.9,
        0.04,
        0.2,
        10.0,
        opts.max_step,
        0.0,
        opts.max_steps,
        u32::MAX,
        OutputType::Sparse,
    );
    let outcome = stepper.integrate();
    let (ts, ys) = stepper.results().get();
    let mut radii = Vec::with_capacity(ts.len());
    let mut values = Vec::with_capacity(ts.len());
    let mut derivatives = Vec::with_capacity(ts.len());
    for (t, y) in ts.iter().zip(ys) {
        let r = t.exp();
        let scale = r.powf(-b);
        radii.push(r);
        values.push(scale * y[0]);
        derivatives.push(scale * (y[1] - b * y[0]) / r);
    }
    let end_radius = radii.last().copied().unwrap_or(r0);
    let termination = match outcome {
        Ok(_) => stop.get().unwrap_or(Termination::ReachedBoundary),
        Err(IntegrationError::StepSizeUnderflow { .. }) => Termination::Blowup,
        Err(IntegrationError::MaxNumStepReached { n_step, .. }) => {
            return Err(Error::NoConvergence {
                iterations: n_step as usize,
                residual: f64::NAN,
            })
        }
        Err(IntegrationError::StiffnessDetected { .. }) => Termination::Blowup,
    };
    Ok(OdeTrajectory {
        radii,
        values,
        derivatives,
        termination,
        end_radius,
    })
}

/// Power-law fit of a trajectory on `window`.
pub fn classical_asymptotics(traj: &OdeTrajectory, window: (f64, f64)) -> Result<FitResult> {
    fit_power_law(&traj.radii, &traj.values, window)
}

/// Largest sup/inf of the trajectory samples over dyadic annuli [r, 2r],
/// r = a 2^k, 2r <= b.
pub fn trajectory_harnack(traj: &OdeTrajectory, a: f64, b: f64) -> Result<f64> {
    let mut r = a;
    let mut worst = 1.0f64;
    while 2.0 * r <= b * (1.0 + 1e-12) {
        let vals: Vec<f64> = traj
            .radii
            .iter()
            .zip(&traj.values)
            .filter(|(x, _)| **x >= r && **x <= 2.0 * r)
            .map(|(_, v)| *v)
            .collect();
        if vals.len() < 2 || vals.iter().any(|v| !(*v > 0.0)) {
            return Err(domain(format!(
                "annulus [{r}, {}] not covered by positive samples",
                2.0 * r
            )));
        }
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi / lo);
        r *= 2.0;
    }
    Ok(worst)
}

/// Bisection on delta in `bracket` for u(1) = h.
///
/// Shots that reach zero before r = 1 count as below h, shots that blow up
/// as above.
pub fn match_boundary(
    n: u32,
    theta: f64,
    p: f64,
    r0: f64,
    h: f64,
    bracket: (f64, f64),
    opts: &ShootOptions,
) -> Result<(f64, OdeTrajectory)> {
    let gap = |delta: f64| -> Result<(f64, OdeTrajectory)> {
        let traj = shoot_singular(n, theta, p, r0, delta, 1.0, opts)?;
        let g = match traj.termination {
            Termination::ReachedBoundary => traj.values[traj.values.len() - 1] - h,
            Termination::Underflow => -1.0,
            Termination::Blowup => 1.0,
        };
        Ok((g, traj))
    };
    let (mut lo, mut hi) = bracket;
    let (g_lo, _) = gap(lo)?;
    let (g_hi, _) = gap(hi)?;
    if g_lo * g_hi > 0.0 {
        return Err(domain(format!(
            "u(1) - h has the same sign at both ends of [{lo}, {hi}]"
        )));
    }
    let rising = g_hi > g_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (g, _) = gap(mid)?;
        if g == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (g > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 {
            break;
        }
    }
    let delta = 0.5 * (lo + hi);
    let (_, traj) = gap(delta)?;
    Ok((delta, traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_residuals() {
        for n in [3u32, 4, 6] {
            for theta in [-1.0, 0.0, 1.5] {
                let sob = sobolev_exponent(n, 1.0, theta);
                for dp in [0.5, 2.0, 7.0] {
                    let check = verify_classical_profile(n, theta, sob + dp).unwrap();
                    assert!(check.supercritical);
                    assert!(check.residual <= 1e-12, "N={n} theta={theta} p={}", sob + dp);
                }
            }
        }
        let check = verify_classical_profile(4, -1.0, 6.0).unwrap();
        assert!((check.beta - 0.2).abs() < 1e-15 && check.residual <= 1e-12);
        // Serrin exponent: vanishing coefficient
        let check = verify_classical_profile(3, 0.0, 3.0).unwrap();
        assert_eq!(check.coefficient, 0.0);
        assert_eq!(check.residual, 0.0);
        assert!(verify_classical_profile(2, 0.0, 5.0).is_err());
        assert!(verify_classical_profile(3, -2.5, 5.0).is_err());
    }

    #[test]
    fn unperturbed_shot_stays_on_the_profile() {
        let c = classical_coefficient(3, 0.0, 7.0).unwrap();
        let t = shoot_singular(3, 0.0, 7.0, 1e-6, 0.0, 1.0, &ShootOptions::default()).unwrap();
        assert_eq!(t.termination, Termination::ReachedBoundary);
        assert!((t.end_radius - 1.0).abs() < 1e-12);
        for (r, u) in t.radii.iter().zip(&t.values) {
            assert!((u / (c * r.powf(-1.0 / 3.0)) - 1.0).abs() <= 1e-6);
        }
        let f = classical_asymptotics(&t, (1e-5, 1e-1)).unwrap();
        assert!((f.exponent - 1.0 / 3.0).abs() < 1e-6);
        assert!((f.coefficient - c).abs() < 1e-6);
    }

    #[test]
    fn perturbed_shots_keep_the_inner_rate() {
        let r0 = 1e-6;
        for delta in [0.05, -0.05] {
            let t = shoot_singular(3, 0.0, 7.0, r0, delta, 1.0, &ShootOptions::default()).unwrap();
            let f = classical_asymptotics(&t, (2.0 * r0, 100.0 * r0)).unwrap();
            assert!((f.exponent * 3.0 - 1.0).abs() < 0.02, "delta={delta}: {}", f.exponent);
        }
    }

    #[test]
    fn shooting_arguments() {
        let o = ShootOptions::default();
        assert!(shoot_singular(3, 0.0, 7.0, 1e-3, 0.0, 1.0, &o).is_err());
        assert!(shoot_singular(3, 0.0, 7.0, 1e-6, 0.2, 1.0, &o).is_err());
        assert!(shoot_singular(3, 0.0, 3.0, 1e-6, 0.0, 1.0, &o).is_err());
    }
}
