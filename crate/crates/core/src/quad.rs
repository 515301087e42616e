//! Quadrature rules: Gauss-Legendre panels and double-exponential (tanh-sinh)
//! integration for integrands with endpoint singularities.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared, cached rule with `n` points.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints on [a, b] graded geometrically away from `a`: a, a+d, a+2d,
/// a+4d, ... until b.
pub fn graded_from_left(a: f64, b: f64, first: f64) -> Vec<f64> {
    let mut pts = vec![a];
    if !(first > 0.0) || first >= b - a {
        pts.push(b);
        return pts;
    }
    let mut step = first;
    let mut x = a + step;
    while x < b {
        pts.push(x);
        x = a + 2.0 * step;
        step *= 2.0;
    }
    let len = pts.len();
    // avoid a sliver at the end
    if len > 1 && b - pts[len - 1] < 0.25 * (pts[len - 1] - a) {
        pts[len - 1] = b;
    } else {
        pts.push(b);
    }
    pts
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tanh-sinh quadrature of `f` over [a, b].
///
/// The integrand receives `(x, x - a, b - x)`; the two offsets are computed
/// without cancellation so integrands singular at an endpoint can be
/// evaluated accurately very close to it. Nodes whose endpoint offset falls
/// below `min_offset` (relative to the half-width) are skipped, which bounds
/// the truncation of integrable endpoint singularities.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64, min_offset: f64) -> Result<Estimate>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    tanh_sinh_abs(f, a, b, tol, 0.0, min_offset)
}

/// As [`tanh_sinh`], also accepting once the change between levels drops
/// below `abs_tol`.
pub fn tanh_sinh_abs<F>(mut f: F, a: f64, b: f64, tol: f64, abs_tol: f64, min_offset: f64) -> Result<Estimate>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    const MAX_LEVEL: usize = 12;
    let half = 0.5 * (b - a);
    let mut evaluations = 0usize;

    // contribution of nodes at t = k h, for the given set of k
    let mut eval_t = |t: f64, evaluations: &mut usize| -> (f64, f64) {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        // 1 - tanh|u| written without cancellation
        let e = (-2.0 * u.abs()).exp();
        let comp = 2.0 * e / (1.0 + e);
        if comp < min_offset {
            return (0.0, 0.0);
        }
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        let off = half * comp;
        let (x, da, db) = if u >= 0.0 {
            (b - off, 2.0 * half - off, off)
        } else {
            (a + off, off, 2.0 * half - off)
        };
        *evaluations += 1;
        let fx = f(x, da, db);
        if fx.is_finite() {
            (w * fx, (w * fx).abs())
        } else {
            (f64::NAN, f64::NAN)
        }
    };

    let t_max = 6.5;
    let mut h = 1.0;
    let (mut sum, mut sum_abs) = eval_t(0.0, &mut evaluations);
    let mut add = |t: f64, sum: &mut f64, sum_abs: &mut f64, evaluations: &mut usize| {
        let (a, aa) = eval_t(t, evaluations);
        let (b, bb) = eval_t(-t, evaluations);
        *sum += a + b;
        *sum_abs += aa + bb;
    };
    let mut k = 1;
    while (k as f64) * h <= t_max {
        add(k as f64 * h, &mut sum, &mut sum_abs, &mut evaluations);
        k += 1;
    }
    let mut prev = sum * h * half;
    let mut error = f64::INFINITY;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            add(k as f64 * h, &mut sum, &mut sum_abs, &mut evaluations);
            k += 2;
        }
        let cur = sum * h * half;
        if !cur.is_finite() {
            return Err(Error::Quadrature {
                estimate: cur,
                achieved: f64::INFINITY,
                requested: tol,
            });
        }
        error = (cur - prev).abs();
        prev = cur;
        // roundoff floor relative to the L1 mass of the integrand
        let floor = 64.0 * f64::EPSILON * sum_abs * h * half.abs();
        if error <= (tol * cur.abs()).max(floor).max(abs_tol) || error == 0.0 {
            return Ok(Estimate {
                value: cur,
                error,
                evaluations,
            });
        }
    }
    Err(Error::Quadrature {
        estimate: prev,
        achieved: error,
        requested: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::get(6);
        for deg in 0..12 {
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let v = gl.integrate(-1.0, 1.0, |x| x.powi(deg));
            assert!((v - exact).abs() < 1e-14, "degree {deg}");
        }
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_mapped_interval() {
        let gl = GaussLegendre::get(20);
        let v = gl.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 x^{-0.9} dx = 10
        let est = tanh_sinh(|_, da, _| da.powf(-0.9), 0.0, 1.0, 1e-10, 1e-300).unwrap();
        assert!((est.value - 10.0).abs() < 1e-8, "{est:?}");
        // int_0^1 ln(x) dx = -1
        let est = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-12, 1e-300).unwrap();
        assert!((est.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_smooth() {
        let est = tanh_sinh(|x, _, _| x.exp(), -1.0, 2.0, 1e-13, 0.0).unwrap();
        let exact = 2f64.exp() - (-1f64).exp();
        assert!((est.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn graded_breakpoints_cover_interval() {
        let pts = graded_from_left(1.0, 4.0, 1e-3);
        assert_eq!(pts[0], 1.0);
        assert_eq!(*pts.last().unwrap(), 4.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
    }
}
