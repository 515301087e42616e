//! Gamma-function family in double precision.
//!
//! Lanczos approximation (g = 7, nine terms) on the right half-plane and the
//! reflection formula elsewhere. The reciprocal gamma function is exact zero
//! at the poles, which is what makes the zeros of the spectral constant exact.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos series for x >= 0.5, returned as (base, series) with
/// Gamma(x) = sqrt(2 pi) * base^(x - 0.5) * exp(-base) * series.
fn lanczos_parts(x: f64) -> (f64, f64) {
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (z + k as f64);
    }
    (z + LANCZOS_G + 0.5, series)
}

/// sin(pi x), exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    // reduce to [-1, 1]
    let mut y = x % 2.0;
    if y > 1.0 {
        y -= 2.0;
    } else if y < -1.0 {
        y += 2.0;
    }
    let sign = if y < 0.0 { -1.0 } else { 1.0 };
    let mut a = y.abs();
    if a > 0.5 {
        a = 1.0 - a;
    }
    sign * (PI * a).sin()
}

/// True gamma function. Returns infinity at the poles 0, -1, -2, ...
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let (t, series) = lanczos_parts(x);
    // split the power to delay overflow for large x
    let half = t.powf(0.5 * (x - 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * series
}

/// 1 / Gamma(x); an entire function, exactly zero at non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        return sin_pi(x) * gamma(1.0 - x) / PI;
    }
    if x > 171.7 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// log|Gamma(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return (PI / sin_pi(x).abs()).ln() - ln_gamma(1.0 - x);
    }
    let (t, series) = lanczos_parts(x);
    0.5 * (2.0 * PI).ln() + (x - 0.5) * t.ln() - t + series.ln()
}

/// Surface measure of the unit sphere S^{n-1} in R^n: 2 pi^{n/2} / Gamma(n/2).
///
/// For n = 1 this is 2 (the two points +-1).
pub fn sphere_area(n: u32) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * PI.powf(h) / gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_and_half_integer_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-15);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn reference_values() {
        // Gamma(1/4), Gamma(3/4) to 16 digits
        assert!((gamma(0.25) / 3.625_609_908_221_908_3 - 1.0).abs() < 2e-15);
        assert!((gamma(0.75) / 1.225_416_702_465_177_6 - 1.0).abs() < 2e-15);
        assert!((gamma(10.3) / 716_430.689_062_376_4 - 1.0).abs() < 1e-13);
        assert!((ln_gamma(100.0) - 359.134_205_369_575_4).abs() < 1e-10);
    }

    #[test]
    fn reciprocal_gamma_vanishes_at_poles() {
        for k in 0..6 {
            assert_eq!(rgamma(-(k as f64)), 0.0);
        }
        assert!((rgamma(-0.5) * gamma(-0.5) - 1.0).abs() < 1e-14);
        assert!(gamma(-3.0).is_infinite());
    }

    #[test]
    fn reflection_consistency() {
        for &x in &[0.1, 0.3, 0.7, 1.3, 2.9] {
            let lhs = gamma(x) * gamma(1.0 - x);
            let rhs = PI / (PI * x).sin();
            assert!((lhs / rhs - 1.0).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
