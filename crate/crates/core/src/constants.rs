//! Closed-form constants of the fractional Lane-Emden problem: the
//! normalization of the fractional Laplacian, the power multiplier
//! C_s(tau), Hardy exponents, singular-profile prefactors and the
//! regime thresholds in p.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::{tanh_sinh, tanh_sinh_abs};
use crate::special::{gamma, rgamma, sphere_area};

/// Problem data for (-Delta)^s u = |x|^theta u^p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: u32,
    pub s: f64,
    pub theta: f64,
    pub p: f64,
    /// Skips the Serrin-supercritical check (exploratory runs only).
    pub unrestricted: bool,
}

impl ProblemParams {
    pub fn new(n: u32, s: f64, theta: f64, p: f64) -> Result<Self> {
        Self::build(n, s, theta, p, false)
    }

    /// Like [`ProblemParams::new`] but accepts any p > 1.
    pub fn unrestricted(n: u32, s: f64, theta: f64, p: f64) -> Result<Self> {
        Self::build(n, s, theta, p, true)
    }

    fn build(n: u32, s: f64, theta: f64, p: f64, unrestricted: bool) -> Result<Self> {
        check_order(n, s)?;
        if !theta.is_finite() || theta <= -2.0 * s {
            return Err(Error::Regime(format!("theta = {theta} must exceed -2s = {}", -2.0 * s)));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::Regime(format!("p = {p} must exceed 1")));
        }
        let serrin = serrin_exponent(n, s, theta);
        if !unrestricted && p <= serrin {
            return Err(Error::Regime(format!(
                "p = {p} is not Serrin supercritical: need p > (N+theta)/(N-2s) = {serrin}"
            )));
        }
        Ok(ProblemParams {
            n,
            s,
            theta,
            p,
            unrestricted,
        })
    }

    /// Singular exponent beta = (2s + theta)/(p - 1).
    pub fn beta(&self) -> f64 {
        (2.0 * self.s + self.theta) / (self.p - 1.0)
    }

    pub fn regime(&self) -> Regime {
        regime_classify(self)
    }

    pub fn kappa(&self) -> Result<f64> {
        kappa(self)
    }
}

pub(crate) fn check_order(n: u32, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("order s = {s} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if (n as f64) <= 2.0 * s {
        return Err(Error::Regime(format!("need N > 2s (N = {n}, s = {s})")));
    }
    Ok(())
}

/// (N + theta)/(N - 2s).
pub fn serrin_exponent(n: u32, s: f64, theta: f64) -> f64 {
    (n as f64 + theta) / (n as f64 - 2.0 * s)
}

/// (N + 2s + 2 theta)/(N - 2s).
pub fn sobolev_exponent(n: u32, s: f64, theta: f64) -> f64 {
    (n as f64 + 2.0 * s + 2.0 * theta) / (n as f64 - 2.0 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    SerrinSubcritical,
    SerrinSupercriticalSobolevSub,
    SobolevCritical,
    SobolevSupercritical,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::SerrinSubcritical => "SerrinSubcritical",
            RegimeTag::SerrinSupercriticalSobolevSub => "SerrinSupercritical_SobolevSub",
            RegimeTag::SobolevCritical => "SobolevCritical",
            RegimeTag::SobolevSupercritical => "SobolevSupercritical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub serrin: f64,
    pub sobolev: f64,
    /// Unweighted Sobolev exponent (N+2s)/(N-2s); reported when theta = 0.
    pub sobolev_unweighted: Option<f64>,
}

/// Classifies p against the Serrin and Sobolev thresholds.
pub fn regime_classify(params: &ProblemParams) -> Regime {
    let ProblemParams { n, s, theta, p, .. } = *params;
    let serrin = serrin_exponent(n, s, theta);
    let sobolev = sobolev_exponent(n, s, theta);
    let tag = if p <= serrin {
        RegimeTag::SerrinSubcritical
    } else if p < sobolev {
        RegimeTag::SerrinSupercriticalSobolevSub
    } else if p == sobolev {
        RegimeTag::SobolevCritical
    } else {
        RegimeTag::SobolevSupercritical
    };
    Regime {
        tag,
        serrin,
        sobolev,
        sobolev_unweighted: (theta == 0.0).then(|| sobolev_exponent(n, s, 0.0)),
    }
}

/// C_{N,s} = 2^{2s} pi^{-N/2} s Gamma((N+2s)/2) / Gamma(1-s).
pub fn normalization_constant(n: u32, s: f64) -> Result<f64> {
    if s >= 1.0 {
        return Err(domain(format!(
            "normalization constant diverges at s = {s} (pole of 1/Gamma(1-s))"
        )));
    }
    if !(s > 0.0) || n == 0 {
        return Err(domain(format!("need s in (0,1) and N >= 1, got s = {s}, N = {n}")));
    }
    let nf = n as f64;
    Ok(4f64.powf(s) * PI.powf(-0.5 * nf) * s * gamma(0.5 * (nf + 2.0 * s)) / gamma(1.0 - s))
}

/// Value of the power multiplier C_s(tau), with (-Delta)^s |x|^tau = C_s(tau) |x|^{tau-2s}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralValue {
    pub tau: f64,
    pub value: f64,
}

fn check_tau(n: u32, s: f64, tau: f64) -> Result<()> {
    check_order(n, s)?;
    let nf = n as f64;
    if !(tau > -nf && tau < 2.0 * s) {
        return Err(domain(format!(
            "tau = {tau} outside (-N, 2s) = ({}, {}); C_s tends to -infinity at both ends",
            -nf,
            2.0 * s
        )));
    }
    Ok(())
}

/// Closed form of C_s(tau) through Gamma and reciprocal-Gamma factors; the
/// zeros at tau = 0 and tau = 2s - N are exact.
pub fn spectral_constant(n: u32, s: f64, tau: f64) -> Result<SpectralValue> {
    check_tau(n, s, tau)?;
    Ok(SpectralValue {
        tau,
        value: spectral_unchecked(n, s, tau),
    })
}

pub(crate) fn spectral_unchecked(n: u32, s: f64, tau: f64) -> f64 {
    let nf = n as f64;
    let num = gamma(0.5 * (nf + tau)) * gamma(0.5 * (2.0 * s - tau));
    let den = rgamma(-0.5 * tau) * rgamma(0.5 * (nf - 2.0 * s + tau));
    if den == 0.0 {
        return 0.0;
    }
    4f64.powf(s) * num * den
}

/// C_s(tau) from its integral representation
///
///   -(C_{N,s}/2) int_{R^N} (|e1+z|^tau + |e1-z|^tau - 2) / |z|^{N+2s} dz,
///
/// reduced to radius x polar angle and integrated with tanh-sinh rules. The
/// radial integral is cut at |z| = 1e6 and the remainder added from the
/// leading-order tail.
pub fn spectral_constant_integral(n: u32, s: f64, tau: f64, tol: f64) -> Result<SpectralValue> {
    check_tau(n, s, tau)?;
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if tau == 0.0 {
        return Ok(SpectralValue { tau, value: 0.0 });
    }
    let cns = normalization_constant(n, s)?;
    let integral = symmetric_difference_integral(n, s, tau, tol)?;
    Ok(SpectralValue {
        tau,
        value: -0.5 * cns * integral,
    })
}

const RADIAL_CUTOFF: f64 = 1e6;

/// int_0^inf H(rho) rho^{-1-2s} d rho with H the sphere integral of the
/// symmetric second difference of |.|^tau.
fn symmetric_difference_integral(n: u32, s: f64, tau: f64, tol: f64) -> Result<f64> {
    let inner_tol = 0.1 * tol;
    // Offsets below this would overflow |1-rho|^tau; the truncated mass is
    // of order offset^{tau+N} which is negligible at this threshold.
    let min_offset = if tau < 0.0 {
        (10f64.powf(-250.0 / tau.abs())).max(1e-200)
    } else {
        1e-200
    };
    let sphere = |rho: f64, one_minus: f64| -> f64 {
        // one_minus = |1 - rho| computed without cancellation
        sphere_second_difference(n, tau, rho, one_minus, inner_tol, min_offset)
    };

    // near 0 the sphere integral is rho^2 |S| Laplacian(|x|^tau)(e1) / N
    let small = sphere_area(n) * tau * (tau + n as f64 - 2.0) / n as f64;
    // rho = e^y on [0, ln R]
    let ln_r = RADIAL_CUTOFF.ln();
    let outer = tanh_sinh(
        |y, da, _| {
            let rho = y.exp();
            let gap = da.exp_m1();
            sphere(rho, gap) * (-2.0 * s * y).exp()
        },
        0.0,
        ln_r,
        tol,
        min_offset,
    )?;
    // the unit ball part vanishes for harmonic |x|^tau, so its tolerance is
    // taken relative to the outer part
    let inner = tanh_sinh_abs(
        |rho, _da, db| {
            if rho < 1e-5 {
                small * rho.powf(1.0 - 2.0 * s)
            } else {
                sphere(rho, db) * rho.powf(-1.0 - 2.0 * s)
            }
        },
        0.0,
        1.0,
        tol,
        tol * outer.value.abs(),
        min_offset,
    )?;
    // beyond R the sphere average of |e1 +- z|^tau is rho^tau (1 + O(rho^-2))
    let area = sphere_area(n);
    let r = RADIAL_CUTOFF;
    let tail = area * (2.0 * r.powf(tau - 2.0 * s) / (2.0 * s - tau) - 2.0 * r.powf(-2.0 * s) / (2.0 * s));
    Ok(inner.value + outer.value + tail)
}

/// Integral over the unit sphere of |e1 + rho w|^tau + |e1 - rho w|^tau - 2.
fn sphere_second_difference(n: u32, tau: f64, rho: f64, one_minus: f64, tol: f64, min_offset: f64) -> f64 {
    let a = 0.5 * tau;
    // (1 + x)^a - 1 with x = rho^2 -+ 2 rho c, given d = sqrt(1 + x) as well
    let pow_minus_one = |x: f64, d: f64| -> f64 {
        if x.abs() < 0.5 {
            (a * x.ln_1p()).exp_m1()
        } else {
            d.powf(tau) - 1.0
        }
    };
    if n == 1 {
        let plus = pow_minus_one(rho * rho + 2.0 * rho, 1.0 + rho);
        let minus = pow_minus_one(rho * rho - 2.0 * rho, one_minus);
        return 2.0 * (plus + minus);
    }
    let nm2 = (n - 2) as i32;
    let sr = 2.0 * rho.sqrt();
    // integrate over phi in [0, pi/2] using the symmetry phi -> pi - phi
    let integrand = |phi: f64, dphi0: f64| -> f64 {
        let c = phi.cos();
        let sh = (0.5 * dphi0).sin();
        let ch = (0.5 * phi).cos();
        let x_minus = rho * rho - 2.0 * rho * c;
        let x_plus = rho * rho + 2.0 * rho * c;
        let d_minus = one_minus.hypot(sr * sh);
        let d_plus = one_minus.hypot(sr * ch);
        let val = pow_minus_one(x_minus, d_minus) + pow_minus_one(x_plus, d_plus);
        val * phi.sin().powi(nm2)
    };
    let est = tanh_sinh(|phi, da, _| integrand(phi, da), 0.0, 0.5 * PI, tol, min_offset);
    let angular = match est {
        Ok(e) => e.value,
        // fall back to the last estimate; the outer rule reports the failure
        Err(Error::Quadrature { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    };
    2.0 * sphere_area(n - 1) * angular
}

/// mu_0 = -2^{2s} Gamma^2((N+2s)/4) / Gamma^2((N-2s)/4).
pub fn mu_zero(n: u32, s: f64) -> Result<f64> {
    check_order(n, s)?;
    let nf = n as f64;
    let ratio = gamma(0.25 * (nf + 2.0 * s)) / gamma(0.25 * (nf - 2.0 * s));
    Ok(-4f64.powf(s) * ratio * ratio)
}

/// Roots tau_- <= tau_+ of C_s(tau) + mu = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyExponents {
    pub mu: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
}

const ROOT_MAX_STEPS: usize = 200;

/// Hardy exponents by bisection on each side of the maximum of C_s.
pub fn hardy_exponents(n: u32, s: f64, mu: f64) -> Result<HardyExponents> {
    let mu0 = mu_zero(n, s)?;
    if !(mu >= mu0) {
        return Err(domain(format!("mu = {mu} below mu_0 = {mu0}: no real exponents")));
    }
    let nf = n as f64;
    let center = 0.5 * (2.0 * s - nf);
    if mu == mu0 {
        return Ok(HardyExponents {
            mu,
            tau_minus: center,
            tau_plus: center,
        });
    }
    if mu == 0.0 {
        return Ok(HardyExponents {
            mu,
            tau_minus: 2.0 * s - nf,
            tau_plus: 0.0,
        });
    }
    let g = |t: f64| spectral_unchecked(n, s, t) + mu;
    // g > 0 at the center, g -> -infinity at both ends
    let tau_plus = bisect(&g, center, 2.0 * s)?;
    let tau_minus = bisect(&g, center, -nf)?;
    Ok(HardyExponents {
        mu,
        tau_minus,
        tau_plus,
    })
}

/// Root of g between `inner`, where g > 0, and `outer`, where g tends to
/// -infinity (the end itself is outside the domain).
fn bisect<G: Fn(f64) -> f64>(g: &G, inner: f64, outer: f64) -> Result<f64> {
    let mut eps = 1e-3 * (outer - inner).abs();
    let dir = (outer - inner).signum();
    while g(outer - dir * eps) >= 0.0 {
        eps *= 0.5;
        if eps < 1e-300 {
            return Err(domain("failed to bracket Hardy exponent"));
        }
    }
    let (mut pos, mut neg) = (inner, outer - dir * eps);
    for _ in 0..ROOT_MAX_STEPS {
        let m = 0.5 * (pos + neg);
        if m == pos || m == neg {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if gm > 0.0 {
            pos = m;
        } else {
            neg = m;
        }
    }
    Ok(0.5 * (pos + neg))
}

/// K_{p,theta} = C_s(-(2s+theta)/(p-1))^{1/(p-1)}.
pub fn kappa(params: &ProblemParams) -> Result<f64> {
    let ProblemParams { n, s, p, .. } = *params;
    let arg = -params.beta();
    let nf = n as f64;
    if !(arg > 2.0 * s - nf && arg < 0.0) {
        return Err(Error::Regime(format!(
            "-(2s+theta)/(p-1) = {arg} leaves (2s-N, 0); p must exceed (N+theta)/(N-2s)"
        )));
    }
    let c = spectral_unchecked(n, s, arg);
    Ok(c.powf(1.0 / (p - 1.0)))
}

/// Classical (s = 1) coefficient c_{p,theta}.
pub fn classical_coefficient(n: u32, theta: f64, p: f64) -> Result<f64> {
    if n < 3 {
        return Err(domain(format!("classical coefficient needs N >= 3, got {n}")));
    }
    if !(theta > -2.0) {
        return Err(Error::Regime(format!("theta = {theta} must exceed -2")));
    }
    let nf = n as f64;
    let serrin = (nf + theta) / (nf - 2.0);
    if !(p >= serrin) || p <= 1.0 {
        return Err(Error::Regime(format!(
            "p = {p} below the Serrin exponent (N+theta)/(N-2) = {serrin}"
        )));
    }
    let b = (2.0 + theta) / (p - 1.0);
    let base = b * (nf - 2.0 - b);
    Ok(base.max(0.0).powf(1.0 / (p - 1.0)))
}

/// theta* = p(N-2s) - N - 2s - theta~, the weight of the Kelvin-transformed problem.
///
/// Results within a few ulps of the operands are rounding residue of the
/// critical exponent (N+2s+theta~)/(N-2s) and are returned as exactly 0.
pub fn theta_star(n: u32, s: f64, theta_tilde: f64, p: f64) -> f64 {
    let nf = n as f64;
    let shift = nf + 2.0 * s + theta_tilde;
    let v = p * (nf - 2.0 * s) - shift;
    if v.abs() <= 8.0 * f64::EPSILON * (shift.abs() + nf + 2.0 * s + theta_tilde.abs()) {
        0.0
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        let c = normalization_constant(1, 0.5).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-15);
        let c = normalization_constant(3, 0.5).unwrap();
        assert!((c - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!(normalization_constant(3, 1.0).is_err());
        assert!(normalization_constant(3, 0.0).is_err());
    }

    #[test]
    fn spectral_zeros_are_exact() {
        for &(n, s) in &[(1u32, 0.3), (2, 0.5), (3, 0.5), (4, 0.9)] {
            assert_eq!(spectral_constant(n, s, 0.0).unwrap().value, 0.0);
            assert_eq!(spectral_constant(n, s, 2.0 * s - n as f64).unwrap().value, 0.0);
        }
    }

    #[test]
    fn spectral_examples() {
        let v = spectral_constant(3, 0.5, -1.0).unwrap().value;
        assert!((v - 2.0 / PI).abs() < 1e-14);
        let v = spectral_constant(3, 0.5, -0.5).unwrap().value;
        assert!((v - 0.5).abs() < 1e-14);
        assert!(spectral_constant(3, 0.5, -3.0).is_err());
        assert!(spectral_constant(3, 0.5, 1.0).is_err());
    }

    #[test]
    fn integral_representation_examples() {
        let v = spectral_constant_integral(3, 0.5, -1.0, 1e-8).unwrap().value;
        assert!((v - 2.0 / PI).abs() < 1e-6 * 2.0 / PI, "{v}");
        let v = spectral_constant_integral(3, 0.5, -0.5, 1e-8).unwrap().value;
        assert!((v - 0.5).abs() < 1e-6 * 0.5, "{v}");
        assert_eq!(spectral_constant_integral(2, 0.3, 0.0, 1e-8).unwrap().value, 0.0);
        for &(n, s, tau) in &[
            (1, 0.3, -0.2),
            (2, 0.3, 0.4),
            (3, 0.8, -2.2),
            (4, 0.5, 0.5),
            (1, 0.45, -0.7),
        ] {
            let exact = spectral_constant(n, s, tau).unwrap().value;
            let v = spectral_constant_integral(n, s, tau, 1e-8).unwrap().value;
            assert!((v - exact).abs() < 1e-6 * exact.abs(), "{n} {s} {tau}: {v} vs {exact}");
        }
    }

    #[test]
    fn mu_zero_examples() {
        assert!((mu_zero(3, 0.5).unwrap() + 2.0 / PI).abs() < 1e-14);
        let expected = -(2f64.sqrt()) * (gamma(0.625) / gamma(0.375)).powi(2);
        assert!((mu_zero(2, 0.25).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn hardy_examples() {
        let h = hardy_exponents(3, 0.5, -0.5).unwrap();
        assert!((h.tau_plus + 0.5).abs() < 1e-11, "{h:?}");
        assert!((h.tau_minus + 1.5).abs() < 1e-11, "{h:?}");
        let h = hardy_exponents(3, 0.5, 0.0).unwrap();
        assert_eq!((h.tau_minus, h.tau_plus), (-2.0, 0.0));
        let mu0 = mu_zero(3, 0.5).unwrap();
        let h = hardy_exponents(3, 0.5, mu0).unwrap();
        assert_eq!((h.tau_minus, h.tau_plus), (-1.0, -1.0));
        assert!(hardy_exponents(3, 0.5, mu0 - 1e-3).is_err());
    }

    #[test]
    fn kappa_examples() {
        let p = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        assert!((kappa(&p).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        // near the Serrin exponent kappa vanishes
        let p = ProblemParams::new(3, 0.5, 0.0, 1.5 + 1e-9).unwrap();
        assert!(kappa(&p).unwrap() < 1e-3);
    }

    #[test]
    fn params_reject_subcritical() {
        assert!(ProblemParams::new(3, 0.5, 0.0, 1.4).is_err());
        assert!(ProblemParams::unrestricted(3, 0.5, 0.0, 1.4).is_ok());
        assert!(ProblemParams::new(3, 0.5, -1.0, 3.0).is_err());
        assert!(ProblemParams::new(1, 0.5, 0.0, 3.0).is_err());
    }

    #[test]
    fn classical_examples() {
        let c = classical_coefficient(3, 0.0, 7.0).unwrap();
        assert!((c - (2.0f64 / 9.0).powf(1.0 / 6.0)).abs() < 1e-15);
        let c = classical_coefficient(4, 0.0, 5.0).unwrap();
        assert!((c - 0.75f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(classical_coefficient(3, 0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn regime_examples() {
        let r = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap().regime();
        assert_eq!(r.tag, RegimeTag::SobolevSupercritical);
        let r = ProblemParams::new(3, 0.5, 0.0, 1.8).unwrap().regime();
        assert_eq!(r.tag, RegimeTag::SerrinSupercriticalSobolevSub);
        let r = ProblemParams::new(3, 0.5, 0.0, 2.0).unwrap().regime();
        assert_eq!(r.tag, RegimeTag::SobolevCritical);
        assert_eq!(r.sobolev_unweighted, Some(2.0));
    }

    #[test]
    fn theta_star_examples() {
        assert_eq!(theta_star(3, 0.5, 0.0, 3.0), 2.0);
        assert_eq!(theta_star(3, 0.5, -1.0, 1.5), 0.0);
        assert_eq!(theta_star(3, 0.5, 0.0, 2.0), 0.0);
    }
}
