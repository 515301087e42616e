//! The fractional Laplacian of radial functions.
//!
//! For a radial u and x0 = r0 e1,
//!
//! ```text
//! (-Delta)^s u(r0) = C_{N,s} [ int_{B_w(x0)} (u(x0) + T(y - x0) - u(y)) |x0-y|^{-N-2s} dy
//!                              - Delta u(x0) |S^{N-1}| w^{2-2s} / (2N(1-s))
//!                              + u(r0) |S^{N-1}| w^{-2s} / (2s)
//!                              - int_0^inf u(r) r^{N-1} K_w(r0, r) dr ]
//! ```
//!
//! where T is the second-order Taylor polynomial of u at x0 (its linear
//! part integrates to zero over the ball) and K_w is the sphere kernel with
//! the ball removed. The ball term is a bounded integrand in polar
//! coordinates around x0; the radial term is split into a closed-form piece
//! near the origin, panels aligned with the spline knots, the window
//! |r - r0| < w, and the exterior data beyond r_max.
//!
//! Every contribution is linear in the model coefficients, so the same
//! traversal evaluates the operator on one function or accumulates the rows
//! of the collocation matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{check_order, normalization_constant};
use crate::error::{domain, Error, Result};
use crate::grid::{RadialFunction, RadialGrid, SplineKnots, TailModel};
use crate::kernel::{cap_angle, Kernel, SERIES_RATIO};
use crate::quad::{graded_from_left, GaussLegendre};

/// Innermost radius of the Taylor-subtracted ball relative to r0; capped
/// at 1e-2 of the ball radius. Below it the angular average of the
/// subtracted integrand is O(rho^4) while roundoff grows like rho^{-2s}.
const BALL_DEPTH: f64 = 1e-4;
const BALL_PANELS: usize = 4;
/// Largest panel width in ln r.
const MAX_LOG_WIDTH: f64 = 0.5;
const ORDERS: [usize; 5] = [8, 16, 32, 64, 128];

/// Radius of the Taylor window around r0.
pub fn window(r0: f64, r_max: f64) -> f64 {
    (0.1 * r0).min(0.5 * (r_max - r0))
}

/// Value of the sphere kernel, regularized on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    /// Present when r = r0: `value` then excludes directions within the
    /// window, and the removed cap behaves like
    /// `singular_coefficient * (eps^{-1-2s} - window^{-1-2s})` as the
    /// inner cut-off eps goes to 0.
    pub excision: Option<Excision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Excision {
    pub window: f64,
    pub singular_coefficient: f64,
}

/// Sphere average kernel |S^{N-2}| int_0^pi sin^{N-2}phi (r0^2 + r^2 -
/// 2 r0 r cos phi)^{-(N+2s)/2} dphi; the two-point form for N = 1.
pub fn angular_kernel(n: u32, s: f64, r0: f64, r: f64, tol: f64) -> Result<KernelValue> {
    check_order(n, s)?;
    if !(r0 > 0.0 && r > 0.0 && r0.is_finite() && r.is_finite()) {
        return Err(domain("kernel radii must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let k = Kernel::new(n, s);
    if r == r0 {
        let w = 0.1 * r0;
        let value = k.excised(r0, r, w);
        let check = if n == 1 {
            value
        } else {
            k.graded(r0, r, 0.0, cap_angle(r0, r, 0.0, w), 24)
        };
        check_kernel(value, check, tol)?;
        let singular_coefficient = if n == 1 {
            // two-point sphere: |r0 - r|^{-1-2s} has no angular cap
            0.0
        } else {
            k.area_lower * r0.powf(1.0 - n as f64) / (1.0 + 2.0 * s)
        };
        return Ok(KernelValue {
            value,
            excision: Some(Excision {
                window: w,
                singular_coefficient,
            }),
        });
    }
    let value = k.full(r0, r);
    let (lo, hi) = if r0 < r { (r0, r) } else { (r, r0) };
    let check = if n == 1 {
        value
    } else if lo / hi <= SERIES_RATIO {
        k.graded(lo, hi, hi - lo, 0.0, 24)
    } else {
        k.graded(lo, hi, hi - lo, 0.0, 32)
    };
    check_kernel(value, check, tol)?;
    Ok(KernelValue { value, excision: None })
}

fn check_kernel(value: f64, check: f64, tol: f64) -> Result<()> {
    let err = (value - check).abs();
    if err > tol * value.abs() && err > 4.0 * f64::EPSILON * value.abs() {
        return Err(Error::Quadrature {
            estimate: value,
            achieved: err / value.abs(),
            requested: tol,
        });
    }
    Ok(())
}

/// Receives contributions `v * coefficient(k, m)` and constants.
trait Sink {
    fn coef(&mut self, k: usize, m: usize, v: f64);
    fn constant(&mut self, v: f64);
}

/// Everything about the function except its knot values.
struct Geometry<'a> {
    knots: &'a SplineKnots,
    nodes: &'a [f64],
    beta: f64,
    r_max: f64,
    tail: TailModel,
}

impl Geometry<'_> {
    /// Adds w * u(r).
    fn point<S: Sink>(&self, sink: &mut S, r: f64, w: f64) {
        if r > self.r_max {
            sink.constant(w * self.tail.value(r));
            return;
        }
        let x = r.ln();
        let (k, t) = self.knots.locate(x);
        let e = w * (-self.beta * x).exp();
        sink.coef(k, 0, e);
        if t >= 0.0 {
            sink.coef(k, 1, e * t);
            sink.coef(k, 2, e * t * t);
            sink.coef(k, 3, e * t * t * t);
        }
    }

    /// Adds w[0] u(r0) + w[1] u'(r0) + w[2] u''(r0).
    fn derivs<S: Sink>(&self, sink: &mut S, r0: f64, w: [f64; 3]) {
        let x = r0.ln();
        let (k, t) = self.knots.locate(x);
        let b = self.beta;
        let e = (-b * x).exp();
        let (y, y1, y2): ([f64; 4], [f64; 4], [f64; 4]) = if t < 0.0 {
            ([1.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4])
        } else {
            (
                [1.0, t, t * t, t * t * t],
                [0.0, 1.0, 2.0 * t, 3.0 * t * t],
                [0.0, 0.0, 2.0, 6.0 * t],
            )
        };
        for m in 0..4 {
            let v = w[0] * y[m]
                + w[1] * (y1[m] - b * y[m]) / r0
                + w[2] * (y2[m] - (2.0 * b + 1.0) * y1[m] + b * (b + 1.0) * y[m]) / (r0 * r0);
            if v != 0.0 {
                sink.coef(k, m, e * v);
            }
        }
    }
}

/// The operator (-Delta)^s for fixed (N, s).
#[derive(Debug, Clone)]
pub struct FracLaplacian {
    pub n: u32,
    pub s: f64,
    /// C_{N,s}
    pub normalization: f64,
    kernel: Kernel,
}

impl FracLaplacian {
    pub fn new(n: u32, s: f64) -> Result<Self> {
        check_order(n, s)?;
        Ok(FracLaplacian {
            n,
            s,
            normalization: normalization_constant(n, s)?,
            kernel: Kernel::new(n, s),
        })
    }

    fn check_model(&self, grid: &RadialGrid, tail: &TailModel, beta: f64) -> Result<()> {
        tail.check_integrable(self.s)?;
        if !(beta < self.n as f64) {
            return Err(Error::NotIntegrable(format!(
                "weight exponent {beta} must be below N = {} for the model to be locally integrable",
                self.n
            )));
        }
        if grid.is_empty() {
            return Err(domain("empty grid"));
        }
        Ok(())
    }

    /// (-Delta)^s u at r0, doubling the quadrature order until two
    /// successive values agree to `tol` relative.
    pub fn apply(&self, u: &RadialFunction, r0: f64, tol: f64) -> Result<f64> {
        self.check_model(&u.grid, &u.tail, u.weight)?;
        if !(r0 > u.grid.r_min() && r0 < u.grid.r_max()) {
            return Err(domain(format!(
                "r0 = {r0} outside the grid range ({}, {})",
                u.grid.r_min(),
                u.grid.r_max()
            )));
        }
        if !(tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        let model = u.model();
        let geom = Geometry {
            knots: &model.knots,
            nodes: u.grid.nodes(),
            beta: u.weight,
            r_max: u.grid.r_max(),
            tail: u.tail,
        };
        let eval = |order: usize| {
            let mut sink = Evaluator {
                coefs: &model.coefs,
                value: 0.0,
                magnitude: 0.0,
            };
            self.traverse(&geom, r0, order, &mut sink);
            (sink.value, sink.magnitude)
        };
        let (mut prev, _) = eval(ORDERS[0]);
        let mut achieved = f64::INFINITY;
        for &order in &ORDERS[1..] {
            let (cur, mag) = eval(order);
            let diff = (cur - prev).abs();
            achieved = diff / cur.abs();
            if diff <= tol * cur.abs() || diff <= 64.0 * f64::EPSILON * mag {
                return Ok(self.normalization * cur);
            }
            prev = cur;
        }
        Err(Error::Quadrature {
            estimate: self.normalization * prev,
            achieved,
            requested: tol,
        })
    }

    /// Dense collocation matrix at the grid nodes for functions with the
    /// given tail and weight.
    pub fn assemble(&self, grid: &RadialGrid, tail: &TailModel, beta: f64, tol: f64) -> Result<OperatorMatrix> {
        self.check_model(grid, tail, beta)?;
        if !(tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        let knots = SplineKnots::new(grid);
        let maps = knots.coefficient_maps();
        let geom = Geometry {
            knots: &knots,
            nodes: grid.nodes(),
            beta,
            r_max: grid.r_max(),
            tail: *tail,
        };
        let n = grid.len();
        let cols = n + 1;
        let r_max = grid.r_max();
        let y_boundary = r_max.powf(beta) * tail.boundary_value(r_max);
        let col_scale: Vec<f64> = grid.nodes().iter().map(|r| r.powf(beta)).collect();

        let row = |i: usize, order: usize| -> Vec<f64> {
            let mut sink = Moments {
                e: vec![[0.0; 4]; n],
                constant: 0.0,
            };
            self.traverse(&geom, grid.nodes()[i], order, &mut sink);
            // entries in knot values, then node values
            let mut out = vec![0.0; cols];
            for (k, ek) in sink.e.iter().enumerate() {
                for (m, map) in maps.iter().enumerate() {
                    let v = ek[m];
                    if v == 0.0 {
                        continue;
                    }
                    if m == 0 {
                        out[k] += v;
                        continue;
                    }
                    let base = k * cols;
                    for (o, c) in out.iter_mut().zip(&map[base..base + cols]) {
                        *o += v * c;
                    }
                }
            }
            let mut entries: Vec<f64> = (0..n).map(|j| self.normalization * out[j] * col_scale[j]).collect();
            entries.push(self.normalization * (out[n] * y_boundary + sink.constant));
            entries.push(self.normalization * out[n]);
            entries
        };

        let rows: Vec<Result<(Vec<f64>, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut prev = row(i, ORDERS[0]);
                let mut achieved = f64::INFINITY;
                for &order in &ORDERS[1..] {
                    let cur = row(i, order);
                    let scale = cur[i].abs().max(cur[n].abs());
                    let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    achieved = diff / scale;
                    if diff <= tol * scale {
                        let boundary = cur[n + 1];
                        let mut cur = cur;
                        cur.truncate(n + 1);
                        return Ok((cur, boundary));
                    }
                    prev = cur;
                }
                Err(Error::Assembly {
                    row: i,
                    source: Box::new(Error::Quadrature {
                        estimate: prev[i],
                        achieved,
                        requested: tol,
                    }),
                })
            })
            .collect();

        let mut entries = DMatrix::zeros(n, n);
        let mut exterior = DVector::zeros(n);
        let mut boundary = DVector::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            let (row, b) = row?;
            for j in 0..n {
                entries[(i, j)] = row[j];
            }
            exterior[i] = row[n];
            boundary[i] = b;
        }
        Ok(OperatorMatrix {
            n: self.n,
            s: self.s,
            entries,
            exterior_vector: exterior,
            boundary_column: boundary,
            grid: grid.clone(),
            tail: *tail,
            weight: beta,
        })
    }

    /// Exterior vector of `matrix` for different exterior data.
    pub fn exterior_for(&self, matrix: &OperatorMatrix, tail: &TailModel, tol: f64) -> Result<DVector<f64>> {
        self.check_model(&matrix.grid, tail, matrix.weight)?;
        let grid = &matrix.grid;
        let knots = SplineKnots::new(grid);
        let geom = Geometry {
            knots: &knots,
            nodes: grid.nodes(),
            beta: matrix.weight,
            r_max: grid.r_max(),
            tail: *tail,
        };
        let r_max = grid.r_max();
        let y_boundary = r_max.powf(matrix.weight) * tail.boundary_value(r_max);
        let constants: Vec<Result<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let r0 = grid.nodes()[i];
                let eval = |order: usize| {
                    let mut sink = Moments {
                        e: Vec::new(),
                        constant: 0.0,
                    };
                    self.tail_part(&geom, r0, order, &mut sink);
                    sink.constant
                };
                let mut prev = eval(ORDERS[0]);
                let scale = matrix.entries[(i, i)].abs() / self.normalization;
                for &order in &ORDERS[1..] {
                    let cur = eval(order);
                    if (cur - prev).abs() <= tol * scale.max(cur.abs()) {
                        return Ok(cur);
                    }
                    prev = cur;
                }
                Err(Error::Assembly {
                    row: i,
                    source: Box::new(Error::Quadrature {
                        estimate: prev,
                        achieved: f64::NAN,
                        requested: tol,
                    }),
                })
            })
            .collect();
        let mut out = DVector::zeros(grid.len());
        for (i, c) in constants.into_iter().enumerate() {
            out[i] = matrix.boundary_column[i] * y_boundary + self.normalization * c?;
        }
        Ok(out)
    }

    /// All contributions at r0 (without the factor C_{N,s}).
    fn traverse<S: Sink>(&self, g: &Geometry, r0: f64, order: usize, sink: &mut S) {
        let kern = &self.kernel;
        let s = self.s;
        let nf = self.n as f64;
        let w = window(r0, g.r_max);

        self.ball(g, r0, w, order, sink);

        // |y - x0| > w: constant part, then the radial integral of u K_w
        g.derivs(sink, r0, [kern.area * w.powf(-2.0 * s) / (2.0 * s), 0.0, 0.0]);

        // (0, r_a]: constant weighted model below the first knot, series kernel
        let r_a = g.nodes[0].min(0.5 * r0);
        {
            let beta = g.beta;
            let scale = kern.area * r0.powf(-nf - 2.0 * s);
            let q = (r_a / r0).powi(2);
            let m0 = kern.series_sum(q, |k| {
                let e = nf - beta + 2.0 * k as f64;
                r_a.powf(nf - beta) / e
            });
            sink.coef(0, 0, -scale * m0);
        }

        let gl = GaussLegendre::get(order);
        let radial = |sink: &mut S, a: f64, b: f64| {
            for (x, wx) in gl.mapped(a.ln(), b.ln()) {
                let r = x.exp();
                let k = kern.full(r0, r);
                g.point(sink, r, -wx * r.powf(nf) * k);
            }
        };

        // [r_a, r0 - w] and [r0 + w, r_max], broken at knots
        for (a, b) in side_panels(r_a, r0 - w, r0, g.nodes) {
            radial(sink, a, b);
        }
        for (a, b) in side_panels(r0 + w, g.r_max, r0, g.nodes) {
            radial(sink, a, b);
        }

        // window r = r0 + w sin(theta)
        {
            let mut cuts = vec![-0.5 * PI];
            for &rk in g.nodes {
                let z = (rk - r0) / w;
                if z > -1.0 && z < 1.0 {
                    cuts.push(z.asin());
                }
            }
            cuts.push(0.5 * PI);
            cuts.sort_by(f64::total_cmp);
            for c in cuts.windows(2) {
                if c[1] - c[0] < 1e-14 {
                    continue;
                }
                for (th, wt) in gl.mapped(c[0], c[1]) {
                    let r = r0 + w * th.sin();
                    let k = kern.excised(r0, r, w);
                    g.point(sink, r, -wt * w * th.cos() * r.powf(nf - 1.0) * k);
                }
            }
        }

        self.tail_part(g, r0, order, sink);
    }

    /// Taylor-subtracted ball integral and its analytic correction.
    fn ball<S: Sink>(&self, g: &Geometry, r0: f64, w: f64, order: usize, sink: &mut S) {
        let kern = &self.kernel;
        let s = self.s;
        let nf = self.n as f64;
        let gl = GaussLegendre::get(order);
        let rho_min = (BALL_DEPTH * r0).min(1e-2 * w);
        let v_lo = rho_min.ln();
        let dv = (w.ln() - v_lo) / BALL_PANELS as f64;
        let base: Vec<f64> = (0..=BALL_PANELS).map(|p| v_lo + dv * p as f64).collect();
        // knots whose spheres cut the ball; the integrand is only C^2 there
        let lo = g.nodes.partition_point(|&r| r <= r0 - w);
        let hi = g.nodes.partition_point(|&r| r < r0 + w);
        let near = &g.nodes[lo..hi.max(lo)];

        // integrates f(rho, rho^{-2s} d rho-weight) over rho in [rho_min, w]
        // with extra breakpoints
        let radial = |extra: &mut Vec<f64>, f: &mut dyn FnMut(f64, f64)| {
            extra.extend_from_slice(&base);
            extra.sort_by(f64::total_cmp);
            for c in extra.windows(2) {
                if c[1] - c[0] < 1e-12 * dv {
                    continue;
                }
                for (v, wv) in gl.mapped(c[0], c[1]) {
                    let rho = v.exp();
                    // rho^{-1-2s} d rho = rho^{-2s} dv
                    f(rho, wv * rho.powf(-2.0 * s));
                }
            }
        };

        if self.n == 1 {
            let mut cuts: Vec<f64> = near
                .iter()
                .map(|&rk| (rk - r0).abs())
                .filter(|&d| d > rho_min && d < w)
                .map(f64::ln)
                .collect();
            radial(&mut cuts, &mut |rho, w_rho| {
                g.derivs(sink, r0, [2.0 * w_rho, 0.0, w_rho * rho * rho]);
                g.point(sink, r0 + rho, -w_rho);
                g.point(sink, r0 - rho, -w_rho);
            });
        } else {
            // angles where a knot sphere inside r0 becomes tangent to the ray
            let mut alpha_cuts = vec![0.0, 0.5 * PI, PI];
            for &rk in near {
                if rk < r0 {
                    let reach = ((r0 - rk) * (r0 + rk)).sqrt();
                    if reach > rho_min && reach < w {
                        alpha_cuts.push(PI - (rk / r0).asin());
                    }
                }
                // where the knot sphere meets the ball boundary rho = w
                let c = ((rk - r0) * (rk + r0) - w * w) / (2.0 * r0 * w);
                if c.abs() < 1.0 {
                    alpha_cuts.push(c.acos());
                }
            }
            // a knot sphere through the centre gives the angular integrand a
            // power singularity at pi/2 from above
            if near.iter().any(|&rk| (rk - r0).abs() <= 1e-12 * r0) {
                let floor = 0.25 * rho_min / r0;
                let mut d = 0.25 * PI;
                while d > floor {
                    alpha_cuts.push(0.5 * PI + d);
                    d *= 0.25;
                }
            }
            alpha_cuts.sort_by(f64::total_cmp);
            let mut cuts = Vec::new();
            for ac in alpha_cuts.windows(2) {
                if ac[1] - ac[0] < 1e-14 {
                    continue;
                }
                for (alpha, wa) in gl.mapped(ac[0], ac[1]) {
                    let (sa, ca) = alpha.sin_cos();
                    let w_alpha = wa * kern.area_lower * sa.powi(self.n as i32 - 2);
                    cuts.clear();
                    for &rk in near {
                        // |x0 + rho (cos a, sin a)| = rk
                        let disc = (rk - r0 * sa) * (rk + r0 * sa);
                        if disc < 0.0 {
                            continue;
                        }
                        let q = -r0 * ca - disc.sqrt().copysign(ca);
                        let mut roots = [q, 0.0];
                        if q != 0.0 {
                            roots[1] = (r0 - rk) * (r0 + rk) / q;
                        }
                        for rho in roots {
                            if rho > rho_min && rho < w {
                                cuts.push(rho.ln());
                            }
                        }
                    }
                    radial(&mut cuts, &mut |rho, w_rho| {
                        let weight = w_rho * w_alpha;
                        let along = r0 + rho * ca;
                        let across = rho * sa;
                        let r = along.hypot(across);
                        g.derivs(
                            sink,
                            r0,
                            [
                                weight,
                                weight * (rho * ca + 0.5 * across * across / r0),
                                0.5 * weight * rho * rho * ca * ca,
                            ],
                        );
                        g.point(sink, r, -weight);
                    });
                }
            }
        }
        // - (1/2) Delta u(x0) |S^{N-1}| w^{2-2s} / (N (2-2s))
        let c = 0.5 * kern.area * w.powf(2.0 - 2.0 * s) / (nf * (2.0 - 2.0 * s));
        g.derivs(sink, r0, [0.0, -c * (nf - 1.0) / r0, -c]);
    }

    /// Contribution of the exterior data r > r_max.
    fn tail_part<S: Sink>(&self, g: &Geometry, r0: f64, order: usize, sink: &mut S) {
        let kern = &self.kernel;
        let s = self.s;
        let nf = self.n as f64;
        let r_max = g.r_max;
        let outer = match g.tail {
            TailModel::Zero => return,
            TailModel::ConstantThenZero { outer_radius, .. } => outer_radius,
            TailModel::Power { .. } => f64::INFINITY,
        };
        if outer <= r_max {
            return;
        }
        let r_b = r_max.max(r0 / SERIES_RATIO);
        // numeric panels on [r_max, min(r_b, outer)]
        let top = r_b.min(outer);
        if top > r_max {
            let gl = GaussLegendre::get(order);
            let pts = graded_from_left(r_max, top, r_max - r0);
            for seg in pts.windows(2) {
                for (a, b) in log_split(seg[0], seg[1]) {
                    for (x, wx) in gl.mapped(a.ln(), b.ln()) {
                        let r = x.exp();
                        let k = kern.full(r0, r);
                        g.point(sink, r, -wx * r.powf(nf) * k);
                    }
                }
            }
        }
        if outer <= r_b {
            return;
        }
        let q = (r0 / r_b).powi(2);
        let value = match g.tail {
            TailModel::Power { amplitude, decay } => {
                amplitude
                    * kern.area
                    * r_b.powf(-decay - 2.0 * s)
                    * kern.series_sum(q, |k| 1.0 / (decay + 2.0 * s + 2.0 * k as f64))
            }
            TailModel::ConstantThenZero { value, outer_radius } => {
                let near = r_b.powf(-2.0 * s) * kern.series_sum(q, |k| 1.0 / (2.0 * s + 2.0 * k as f64));
                let far = if outer_radius.is_finite() {
                    let qo = (r0 / outer_radius).powi(2);
                    outer_radius.powf(-2.0 * s) * kern.series_sum(qo, |k| 1.0 / (2.0 * s + 2.0 * k as f64))
                } else {
                    0.0
                };
                value * kern.area * (near - far)
            }
            TailModel::Zero => 0.0,
        };
        sink.constant(-value);
    }
}

/// Panels covering [a, b] (one side of r0), broken at grid nodes, graded
/// so no panel is wider than its distance to r0, and at most
/// [`MAX_LOG_WIDTH`] wide in ln r.
fn side_panels(a: f64, b: f64, r0: f64, nodes: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(b > a) {
        return out;
    }
    let lo = nodes.partition_point(|&r| r <= a);
    let hi = nodes.partition_point(|&r| r < b);
    let mut cuts = Vec::with_capacity(hi.saturating_sub(lo) + 2);
    cuts.push(a);
    cuts.extend_from_slice(&nodes[lo..hi.max(lo)]);
    cuts.push(b);
    for c in cuts.windows(2) {
        let (p, q) = (c[0], c[1]);
        if q - p <= 0.0 {
            continue;
        }
        let pts: Vec<f64> = if p >= r0 {
            graded_from_left(p, q, p - r0)
        } else {
            graded_from_left(-q, -p, r0 - q).into_iter().rev().map(|v| -v).collect()
        };
        for seg in pts.windows(2) {
            out.extend(log_split(seg[0], seg[1]));
        }
    }
    out
}

/// Uniform split of [a, b] in ln r into pieces at most MAX_LOG_WIDTH wide.
fn log_split(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let la = a.ln();
    let span = b.ln() - la;
    let pieces = ((span / MAX_LOG_WIDTH).ceil() as usize).max(1);
    (0..pieces).map(move |i| {
        let x0 = if i == 0 {
            a
        } else {
            (la + span * i as f64 / pieces as f64).exp()
        };
        let x1 = if i + 1 == pieces {
            b
        } else {
            (la + span * (i + 1) as f64 / pieces as f64).exp()
        };
        (x0, x1)
    })
}

struct Evaluator<'a> {
    coefs: &'a [[f64; 4]],
    value: f64,
    magnitude: f64,
}

impl Sink for Evaluator<'_> {
    fn coef(&mut self, k: usize, m: usize, v: f64) {
        let c = v * self.coefs[k][m];
        self.value += c;
        self.magnitude += c.abs();
    }

    fn constant(&mut self, v: f64) {
        self.value += v;
        self.magnitude += v.abs();
    }
}

struct Moments {
    e: Vec<[f64; 4]>,
    constant: f64,
}

impl Sink for Moments {
    fn coef(&mut self, k: usize, m: usize, v: f64) {
        self.e[k][m] += v;
    }

    fn constant(&mut self, v: f64) {
        self.constant += v;
    }
}

/// Collocation matrix: (-Delta)^s u(r_i) ~ (A u)_i + exterior_i.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub n: u32,
    pub s: f64,
    pub entries: DMatrix<f64>,
    pub exterior_vector: DVector<f64>,
    /// Response to the weighted model value at the boundary knot r_max.
    pub boundary_column: DVector<f64>,
    pub grid: RadialGrid,
    pub tail: TailModel,
    pub weight: f64,
}

impl OperatorMatrix {
    /// A u + exterior.
    pub fn apply(&self, values: &DVector<f64>) -> DVector<f64> {
        &self.entries * values + &self.exterior_vector
    }

    /// The same interior operator with exterior data `tail`.
    pub fn with_tail(&self, tail: &TailModel, tol: f64) -> Result<OperatorMatrix> {
        let op = FracLaplacian::new(self.n, self.s)?;
        let exterior_vector = op.exterior_for(self, tail, tol)?;
        Ok(OperatorMatrix {
            exterior_vector,
            tail: *tail,
            ..self.clone()
        })
    }
}

/// (-Delta)^s u at r0 to relative tolerance `tol`.
pub fn apply_frac_laplacian(n: u32, s: f64, u: &RadialFunction, r0: f64, tol: f64) -> Result<f64> {
    FracLaplacian::new(n, s)?.apply(u, r0, tol)
}

/// Dense operator matrix for functions on `grid` with exterior data `tail`
/// and interior weight `beta_w`.
pub fn assemble_operator(
    n: u32,
    s: f64,
    grid: &RadialGrid,
    tail: &TailModel,
    beta_w: f64,
    tol: f64,
) -> Result<OperatorMatrix> {
    FracLaplacian::new(n, s)?.assemble(grid, tail, beta_w, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::constants::spectral_constant;

    fn power_case(n: u32, s: f64, tau: f64, r0: f64) -> f64 {
        let grid = RadialGrid::log_uniform(1e-3, 1e2, 120).unwrap();
        let u = RadialFunction::power(grid, 1.0, -tau).unwrap();
        let v = apply_frac_laplacian(n, s, &u, r0, 1e-9).unwrap();
        let exact = spectral_constant(n, s, tau).unwrap().value * r0.powf(tau - 2.0 * s);
        (v - exact).abs() / exact.abs()
    }

    #[test]
    fn power_identity_pointwise() {
        for &(n, s) in &[(1, 0.3), (2, 0.5), (3, 0.5), (3, 0.8)] {
            let nf = n as f64;
            for k in [1, 4, 7] {
                let tau = -(nf - 2.0 * s) * k as f64 / 8.0;
                for r0 in [0.1, 1.0, 10.0] {
                    let err = power_case(n, s, tau, r0);
                    assert!(err < 1e-6, "N={n} s={s} tau={tau} r0={r0}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn matrix_reproduces_weighted_powers() {
        let grid = RadialGrid::log_uniform(1e-3, 1e2, 80).unwrap();
        for &(n, s, tau) in &[(3, 0.5, -1.0), (2, 0.3, -0.9), (1, 0.3, -0.2)] {
            let tail = TailModel::Power {
                amplitude: 1.0,
                decay: -tau,
            };
            let a = assemble_operator(n, s, &grid, &tail, -tau, 1e-9).unwrap();
            let u = DVector::from_iterator(80, grid.nodes().iter().map(|r| r.powf(tau)));
            let lu = a.apply(&u);
            let c = spectral_constant(n, s, tau).unwrap().value;
            for (i, &r) in grid.nodes().iter().enumerate() {
                let exact = c * r.powf(tau - 2.0 * s);
                assert!((lu[i] / exact - 1.0).abs() < 1e-6, "N={n} s={s} row {i}");
            }
        }
    }

    #[test]
    fn constant_function_rows_vanish() {
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 60).unwrap();
        let tail = TailModel::ConstantThenZero {
            value: 1.0,
            outer_radius: f64::INFINITY,
        };
        let a = assemble_operator(3, 0.6, &grid, &tail, 0.0, 1e-10).unwrap();
        let lu = a.apply(&DVector::from_element(60, 1.0));
        for i in 0..60 {
            assert!(lu[i].abs() < 1e-8 * a.entries[(i, i)], "row {i}: {}", lu[i]);
        }
    }

    #[test]
    fn sign_pattern_away_from_the_diagonal() {
        let grid = RadialGrid::log_uniform(1e-4, 1.0, 60).unwrap();
        let a = assemble_operator(3, 0.5, &grid, &TailModel::Zero, 0.0, 1e-8).unwrap();
        for i in 0..60 {
            assert!(a.entries[(i, i)] > 0.0);
            for j in 0..60 {
                if i.abs_diff(j) >= 3 {
                    assert!(a.entries[(i, j)] <= 0.0, "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn exterior_data_can_be_swapped() {
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 40).unwrap();
        let power = TailModel::Power {
            amplitude: 2.0,
            decay: 0.7,
        };
        let a = assemble_operator(2, 0.4, &grid, &TailModel::Zero, 0.0, 1e-10).unwrap();
        let b = assemble_operator(2, 0.4, &grid, &power, 0.0, 1e-10).unwrap();
        let swapped = a.with_tail(&power, 1e-10).unwrap();
        for i in 0..40 {
            let d = (swapped.exterior_vector[i] - b.exterior_vector[i]).abs();
            assert!(d <= 1e-9 * b.entries[(i, i)], "row {i}");
        }
    }

    #[test]
    fn kernel_is_symmetric_and_homogeneous() {
        let a = angular_kernel(3, 0.4, 1.0, 1.7, 1e-10).unwrap().value;
        let b = angular_kernel(3, 0.4, 1.7, 1.0, 1e-10).unwrap().value;
        assert_eq!(a, b);
        let c = angular_kernel(3, 0.4, 2.5, 4.25, 1e-10).unwrap().value;
        assert!((c / (a * 2.5f64.powf(-3.8)) - 1.0).abs() < 1e-10);
    }
}
