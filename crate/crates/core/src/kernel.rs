//! Sphere integrals of the fractional kernel.
//!
//! K(r0, r) = int_{S^{N-1}} |r0 e1 - r w|^{-N-2s} dw, written either as the
//! hypergeometric series
//!
//! ```text
//! K = |S^{N-1}| r_>^{-N-2s} sum_k (a)_k (b)_k / ((c)_k k!) t^{2k},
//!     a = N/2 + s, b = 1 + s, c = N/2, t = r_< / r_>,
//! ```
//!
//! (used for t <= 0.8) or as a one-dimensional angular integral on panels
//! graded towards phi = 0. N = 1 uses the two-point sphere directly.

use std::f64::consts::PI;

use crate::quad::GaussLegendre;
use crate::special::sphere_area;

/// Ratio r_< / r_> up to which the series is used.
pub const SERIES_RATIO: f64 = 0.8;
const TERMS: usize = 200;
const PANEL_POINTS: usize = 16;

#[derive(Debug, Clone)]
pub struct Kernel {
    pub n: u32,
    pub s: f64,
    /// |S^{N-1}|
    pub area: f64,
    /// |S^{N-2}| (2 for N = 2, unused for N = 1)
    pub area_lower: f64,
    /// (N + 2s) / 2
    pub lambda: f64,
    /// Series coefficients (a)_k (b)_k / ((c)_k k!).
    pub coeffs: Vec<f64>,
}

impl Kernel {
    pub fn new(n: u32, s: f64) -> Self {
        let nf = n as f64;
        let (a, b, c) = (0.5 * nf + s, 1.0 + s, 0.5 * nf);
        let mut coeffs = Vec::with_capacity(TERMS);
        let mut ck = 1.0;
        for k in 0..TERMS {
            coeffs.push(ck);
            let kf = k as f64;
            ck *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0));
        }
        Kernel {
            n,
            s,
            area: sphere_area(n),
            area_lower: if n >= 2 { sphere_area(n - 1) } else { 0.0 },
            lambda: 0.5 * nf + s,
            coeffs,
        }
    }

    /// sum_k c_k q^k f(k), truncated once terms fall below 1e-17 of the sum.
    /// Requires 0 <= q < 1 and f decreasing in size.
    pub fn series_sum(&self, q: f64, mut f: impl FnMut(usize) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut qk = 1.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let term = c * qk * f(k);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() && k > 2 {
                break;
            }
            qk *= q;
            if qk == 0.0 {
                break;
            }
        }
        sum
    }

    /// Full kernel K(r0, r) for r != r0.
    pub fn full(&self, r0: f64, r: f64) -> f64 {
        let (lo, hi) = if r0 < r { (r0, r) } else { (r, r0) };
        let gap = hi - lo;
        if self.n == 1 {
            return gap.powf(-1.0 - 2.0 * self.s) + (hi + lo).powf(-1.0 - 2.0 * self.s);
        }
        let t = lo / hi;
        if t <= SERIES_RATIO {
            let t2 = t * t;
            return self.area * hi.powf(-2.0 * self.lambda) * self.series_sum(t2, |_| 1.0);
        }
        self.graded(lo, hi, gap, 0.0, PANEL_POINTS)
    }

    /// Kernel restricted to directions with |r0 e1 - r w| >= window.
    /// Equals [`Kernel::full`] when |r - r0| >= window.
    pub fn excised(&self, r0: f64, r: f64, window: f64) -> f64 {
        let (lo, hi) = if r0 < r { (r0, r) } else { (r, r0) };
        let gap = hi - lo;
        if gap >= window {
            return self.full(r0, r);
        }
        if self.n == 1 {
            return (hi + lo).powf(-1.0 - 2.0 * self.s);
        }
        let phi_c = cap_angle(lo, hi, gap, window);
        self.graded(lo, hi, gap, phi_c, PANEL_POINTS)
    }

    /// Angular integral over [phi0, pi] on panels doubling away from phi0.
    pub fn graded(&self, lo: f64, hi: f64, gap: f64, phi0: f64, points: usize) -> f64 {
        let gl = GaussLegendre::get(points);
        let prod = lo * hi;
        let q = 4.0 * prod;
        let g2 = gap * gap;
        let nm2 = self.n as i32 - 2;
        let lam = self.lambda;
        let f = |phi: f64| -> f64 {
            let sh = (0.5 * phi).sin();
            let d2 = g2 + q * sh * sh;
            let base = d2.powf(-lam);
            if nm2 == 0 {
                base
            } else {
                base * phi.sin().powi(nm2)
            }
        };
        // characteristic width of the peak at phi = 0
        let delta = gap / prod.sqrt();
        let first = if phi0 > 0.0 { phi0 } else { delta };
        let mut total = 0.0;
        let mut a = phi0;
        let mut width = first.max(1e-300);
        while a < PI {
            let b = (a + width).min(PI);
            // avoid a sliver before pi
            let b = if PI - b < 0.25 * (b - a) { PI } else { b };
            total += gl.integrate(a, b, f);
            a = b;
            width *= 2.0;
        }
        self.area_lower * total
    }
}

/// Angle phi_c with |lo e1 - hi w| = window at the cap boundary:
/// sin^2(phi_c/2) = (window^2 - gap^2) / (4 lo hi).
pub fn cap_angle(lo: f64, hi: f64, gap: f64, window: f64) -> f64 {
    let v = ((window - gap) * (window + gap) / (4.0 * lo * hi)).clamp(0.0, 1.0);
    2.0 * v.sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: u32, s: f64, r0: f64, r: f64) -> f64 {
        // plain composite rule with many points
        let k = Kernel::new(n, s);
        let gl = GaussLegendre::get(40);
        let mut total = 0.0;
        let m = 2000;
        for i in 0..m {
            let a = PI * i as f64 / m as f64;
            let b = PI * (i + 1) as f64 / m as f64;
            total += gl.integrate(a, b, |phi| {
                phi.sin().powi(n as i32 - 2) * (r0 * r0 + r * r - 2.0 * r0 * r * phi.cos()).powf(-k.lambda)
            });
        }
        k.area_lower * total
    }

    #[test]
    fn series_and_panels_agree_with_brute_force() {
        for &(n, s) in &[(2, 0.3), (3, 0.5), (4, 0.75)] {
            let k = Kernel::new(n, s);
            for &(r0, r) in &[(1.0, 2.0), (1.0, 0.3), (1.0, 1.3), (1.0, 0.85), (2.0, 1.9)] {
                let v = k.full(r0, r);
                let b = brute(n, s, r0, r);
                assert!((v / b - 1.0).abs() < 1e-11, "{n} {s} {r0} {r}: {v} {b}");
            }
        }
    }

    #[test]
    fn series_matches_panels_at_switch() {
        let k = Kernel::new(3, 0.4);
        let (lo, hi) = (0.8f64, 1.0f64);
        let series = k.area * hi.powf(-2.0 * k.lambda) * k.series_sum(lo * lo, |_| 1.0);
        let panels = k.graded(lo, hi, hi - lo, 0.0, 16);
        assert!((series / panels - 1.0).abs() < 1e-13);
    }

    #[test]
    fn one_dimensional_series_matches_closed_form() {
        let k = Kernel::new(1, 0.3);
        let (lo, hi) = (0.5, 1.0);
        let series = k.area * k.series_sum(lo * lo, |_| 1.0);
        let exact = k.full(lo, hi);
        assert!((series / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn excised_reduces_to_full_outside_window() {
        let k = Kernel::new(3, 0.5);
        assert_eq!(k.excised(1.0, 1.2, 0.1), k.full(1.0, 1.2));
        let inside = k.excised(1.0, 1.01, 0.1);
        assert!(inside > 0.0 && inside < k.full(1.0, 1.01));
    }
}
