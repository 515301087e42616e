//! Radial grids and the interior/exterior model of a radial function.
//!
//! A [`RadialFunction`] stores nodal values u_i = u(r_i) together with a
//! weight exponent beta. Between nodes the weighted values y = r^beta u are
//! interpolated by a cubic spline in x = ln r. The spline has one extra
//! knot at r_max carrying the value of the exterior data there (natural end
//! condition), is clamped (dy/dx = 0) at the first node and held constant
//! below it. Beyond r_max the function is given by its [`TailModel`].

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// How the nodes of a grid were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// r_{i+1} / r_i constant.
    LogUniform,
    /// Geometric clustering at both the origin and r_max.
    TwoSided,
    Custom,
}

/// Strictly increasing radii inside (r_min, r_max).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    r_min: f64,
    r_max: f64,
    spacing: Spacing,
}

impl RadialGrid {
    /// `n` nodes r_min q^i, i = 1..n, with q = (r_max/r_min)^{1/(n+1)}.
    pub fn log_uniform(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        check_range(r_min, r_max)?;
        if n == 0 {
            return Err(domain("grid needs at least one node"));
        }
        let l0 = r_min.ln();
        let step = (r_max.ln() - l0) / (n as f64 + 1.0);
        let nodes = (1..=n).map(|i| (l0 + step * i as f64).exp()).collect();
        Ok(RadialGrid {
            nodes,
            r_min,
            r_max,
            spacing: Spacing::LogUniform,
        })
    }

    /// Default grid: log-uniform on [1e-6, 1] with 400 nodes.
    pub fn default_unit() -> Self {
        Self::log_uniform(1e-6, 1.0, 400).expect("valid default grid")
    }

    /// Nodes geometric in r near 0 and geometric in r_max - r near r_max,
    /// joined at r_max / 2. `gap` is the smallest distance to r_max.
    pub fn two_sided(r_min: f64, r_max: f64, gap: f64, n: usize) -> Result<Self> {
        check_range(r_min, r_max)?;
        let mid = 0.5 * r_max;
        if !(r_min < mid) || !(gap > 0.0 && gap < mid) {
            return Err(domain(format!(
                "two-sided grid needs r_min < r_max/2 and 0 < gap < r_max/2 (r_min = {r_min}, gap = {gap})"
            )));
        }
        if n < 4 {
            return Err(domain("two-sided grid needs at least 4 nodes"));
        }
        let left_span = (mid / r_min).ln();
        let right_span = (mid / gap).ln();
        // split nodes in proportion to the logarithmic spans
        let n_left = ((n as f64 * left_span / (left_span + right_span)).round() as usize).clamp(2, n - 2);
        let n_right = n - n_left;
        let mut nodes = Vec::with_capacity(n);
        let q_left = left_span / n_left as f64;
        for i in 1..=n_left {
            nodes.push(r_min * (q_left * i as f64).exp());
        }
        // the right part starts one step past mid
        let q_right = right_span / n_right as f64;
        for i in (0..n_right).rev() {
            nodes.push(r_max - gap * (q_right * i as f64).exp());
        }
        Self::build(nodes, r_min, r_max, Spacing::TwoSided)
    }

    /// Arbitrary strictly increasing nodes inside (r_min, r_max).
    pub fn from_nodes(nodes: Vec<f64>, r_min: f64, r_max: f64) -> Result<Self> {
        check_range(r_min, r_max)?;
        Self::build(nodes, r_min, r_max, Spacing::Custom)
    }

    fn build(nodes: Vec<f64>, r_min: f64, r_max: f64, spacing: Spacing) -> Result<Self> {
        if nodes.is_empty() {
            return Err(domain("grid needs at least one node"));
        }
        if nodes.iter().any(|r| !r.is_finite()) {
            return Err(domain("grid nodes must be finite"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("grid nodes must be strictly increasing"));
        }
        if nodes[0] <= r_min || nodes[nodes.len() - 1] >= r_max {
            return Err(domain(format!(
                "grid nodes must lie strictly inside ({r_min}, {r_max})"
            )));
        }
        Ok(RadialGrid {
            nodes,
            r_min,
            r_max,
            spacing,
        })
    }

    /// Grid of reciprocal radii 1/r on (1/r_max, 1/r_min).
    pub fn reflected(&self) -> Self {
        let nodes = self.nodes.iter().rev().map(|r| 1.0 / r).collect();
        RadialGrid {
            nodes,
            r_min: 1.0 / self.r_max,
            r_max: 1.0 / self.r_min,
            spacing: match self.spacing {
                Spacing::LogUniform => Spacing::LogUniform,
                _ => Spacing::Custom,
            },
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// True if the node ratios are constant to 1e-12.
    pub fn is_log_uniform(&self) -> bool {
        if self.nodes.len() < 2 {
            return true;
        }
        let q = self.nodes[1] / self.nodes[0];
        self.nodes.windows(2).all(|w| ((w[1] / w[0]) / q - 1.0).abs() <= 1e-12)
    }

    /// Indices of nodes inside the closed interval [a, b].
    pub fn indices_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&r| r < a);
        let hi = self.nodes.partition_point(|&r| r <= b);
        lo..hi.max(lo)
    }
}

fn check_range(r_min: f64, r_max: f64) -> Result<()> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(domain(format!(
            "need 0 < r_min < r_max < inf (r_min = {r_min}, r_max = {r_max})"
        )));
    }
    Ok(())
}

/// Exterior data for r > r_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    Zero,
    /// amplitude * r^{-decay}.
    Power {
        amplitude: f64,
        decay: f64,
    },
    /// `value` on r_max < r < outer_radius, zero beyond. `outer_radius`
    /// may be infinite.
    ConstantThenZero {
        value: f64,
        outer_radius: f64,
    },
}

impl TailModel {
    /// Value at r > r_max.
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            TailModel::Zero => 0.0,
            TailModel::Power { amplitude, decay } => amplitude * r.powf(-decay),
            TailModel::ConstantThenZero { value, outer_radius } => {
                if r < outer_radius {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// Limit of the exterior data as r decreases to `r_max`.
    pub fn boundary_value(&self, r_max: f64) -> f64 {
        match *self {
            TailModel::ConstantThenZero { value, outer_radius } if outer_radius > r_max => value,
            TailModel::ConstantThenZero { .. } => 0.0,
            _ => self.value(r_max),
        }
    }

    /// Checks integrability against (1+r)^{-N-2s}.
    pub fn check_integrable(&self, s: f64) -> Result<()> {
        match *self {
            TailModel::Zero => Ok(()),
            TailModel::Power { amplitude, decay } => {
                if !amplitude.is_finite() || !decay.is_finite() {
                    return Err(domain("power tail parameters must be finite"));
                }
                if decay <= -2.0 * s {
                    return Err(Error::NotIntegrable(format!(
                        "power tail r^-{decay} needs decay > -2s = {}",
                        -2.0 * s
                    )));
                }
                Ok(())
            }
            TailModel::ConstantThenZero { value, outer_radius } => {
                if !value.is_finite() || outer_radius.is_nan() {
                    return Err(domain("constant tail parameters must be finite"));
                }
                Ok(())
            }
        }
    }

    /// a * self + b * other when both have the same shape.
    pub fn combine(&self, a: f64, other: &TailModel, b: f64) -> Result<TailModel> {
        use TailModel::*;
        match (*self, *other) {
            (Zero, Zero) => Ok(Zero),
            (Zero, t) => Ok(t.scaled(b)),
            (t, Zero) => Ok(t.scaled(a)),
            (
                Power {
                    amplitude: a1,
                    decay: d1,
                },
                Power {
                    amplitude: a2,
                    decay: d2,
                },
            ) if d1 == d2 => Ok(Power {
                amplitude: a * a1 + b * a2,
                decay: d1,
            }),
            (
                ConstantThenZero {
                    value: v1,
                    outer_radius: o1,
                },
                ConstantThenZero {
                    value: v2,
                    outer_radius: o2,
                },
            ) if o1 == o2 => Ok(ConstantThenZero {
                value: a * v1 + b * v2,
                outer_radius: o1,
            }),
            _ => Err(domain("tail models of different shape cannot be combined")),
        }
    }

    pub fn scaled(&self, a: f64) -> TailModel {
        match *self {
            TailModel::Zero => TailModel::Zero,
            TailModel::Power { amplitude, decay } => TailModel::Power {
                amplitude: a * amplitude,
                decay,
            },
            TailModel::ConstantThenZero { value, outer_radius } => TailModel::ConstantThenZero {
                value: a * value,
                outer_radius,
            },
        }
    }
}

/// Knot layout of the interior model: x_k = ln r_k for the nodes plus
/// x_n = ln r_max.
#[derive(Debug, Clone)]
pub struct SplineKnots {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
}

impl SplineKnots {
    pub fn new(grid: &RadialGrid) -> Self {
        let mut x: Vec<f64> = grid.nodes().iter().map(|r| r.ln()).collect();
        x.push(grid.r_max().ln());
        let h = x.windows(2).map(|w| w[1] - w[0]).collect();
        SplineKnots { x, h }
    }

    /// Number of spline intervals (equals the node count).
    pub fn intervals(&self) -> usize {
        self.h.len()
    }

    /// Interval index and local coordinate t = x - x_k. Points left of the
    /// first knot return interval 0 with negative t, where the model is the
    /// constant a_0.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.intervals();
        if n == 0 || x < self.x[0] {
            return (0, x - self.x[0]);
        }
        let k = (self.x.partition_point(|&xk| xk <= x) - 1).min(n - 1);
        (k, x - self.x[k])
    }

    /// Spline second derivatives M_0..M_n for knot values y: clamped
    /// (y' = 0) at the first knot, natural (M_n = 0) at r_max.
    pub fn second_derivatives(&self, y: &[f64]) -> Vec<f64> {
        let n = self.intervals();
        let h = &self.h;
        let mut m = vec![0.0; n + 1];
        if n == 0 {
            return m;
        }
        // unknowns M_0..M_{n-1}; Thomas algorithm
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for k in 0..n {
            let (sub, diag, sup, rhs) = if k == 0 {
                (0.0, 2.0 * h[0], h[0], 6.0 * (y[1] - y[0]) / h[0])
            } else {
                (
                    h[k - 1],
                    2.0 * (h[k - 1] + h[k]),
                    h[k],
                    6.0 * ((y[k + 1] - y[k]) / h[k] - (y[k] - y[k - 1]) / h[k - 1]),
                )
            };
            let (c_prev, d_prev) = if k == 0 { (0.0, 0.0) } else { (cp[k - 1], dp[k - 1]) };
            let denom = diag - sub * c_prev;
            cp[k] = if k + 1 < n { sup / denom } else { 0.0 };
            dp[k] = (rhs - sub * d_prev) / denom;
        }
        for k in (0..n).rev() {
            m[k] = dp[k] - if k + 1 < n { cp[k] * m[k + 1] } else { 0.0 };
        }
        m
    }

    /// Coefficients (a, b, c, d) per interval, y = a + b t + c t^2 + d t^3.
    pub fn coefficients(&self, y: &[f64]) -> Vec<[f64; 4]> {
        let m = self.second_derivatives(y);
        (0..self.intervals())
            .map(|k| {
                let h = self.h[k];
                [
                    y[k],
                    (y[k + 1] - y[k]) / h - h * (2.0 * m[k] + m[k + 1]) / 6.0,
                    0.5 * m[k],
                    (m[k + 1] - m[k]) / (6.0 * h),
                ]
            })
            .collect()
    }

    /// Linear maps from knot values to coefficients: `maps[j][k][i]` is the
    /// derivative of coefficient j on interval k with respect to y_i.
    /// Row-major, `intervals x (intervals + 1)`.
    pub fn coefficient_maps(&self) -> [Vec<f64>; 4] {
        let n = self.intervals();
        let cols = n + 1;
        let mut second = vec![0.0; cols * cols]; // M_k as rows, y_i as columns
        let mut e = vec![0.0; cols];
        for i in 0..cols {
            e[i] = 1.0;
            for (k, v) in self.second_derivatives(&e).into_iter().enumerate() {
                second[k * cols + i] = v;
            }
            e[i] = 0.0;
        }
        let mut a = vec![0.0; n * cols];
        let mut b = vec![0.0; n * cols];
        let mut c = vec![0.0; n * cols];
        let mut d = vec![0.0; n * cols];
        for k in 0..n {
            let h = self.h[k];
            a[k * cols + k] = 1.0;
            b[k * cols + k] -= 1.0 / h;
            b[k * cols + k + 1] += 1.0 / h;
            for i in 0..cols {
                let mk = second[k * cols + i];
                let mk1 = second[(k + 1) * cols + i];
                b[k * cols + i] -= h * (2.0 * mk + mk1) / 6.0;
                c[k * cols + i] = 0.5 * mk;
                d[k * cols + i] = (mk1 - mk) / (6.0 * h);
            }
        }
        [a, b, c, d]
    }
}

/// Nodal values with interior weight and exterior data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialFunction {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    /// Weight exponent beta_w: the model interpolates r^beta_w u.
    pub weight: f64,
    pub tail: TailModel,
}

/// Evaluator for the interior model of a [`RadialFunction`].
#[derive(Debug, Clone)]
pub struct Model {
    pub knots: SplineKnots,
    pub coefs: Vec<[f64; 4]>,
    pub weight: f64,
    pub r_max: f64,
    pub tail: TailModel,
}

impl RadialFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>, weight: f64, tail: TailModel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(domain(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("function values must be finite"));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(domain(format!("weight exponent {weight} must be finite and >= 0")));
        }
        Ok(RadialFunction {
            grid,
            values,
            weight,
            tail,
        })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64, weight: f64, tail: TailModel) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, weight, tail)
    }

    /// A r^{-gamma} on the grid with the matching power tail and weight gamma.
    pub fn power(grid: RadialGrid, amplitude: f64, gamma: f64) -> Result<Self> {
        let tail = TailModel::Power {
            amplitude,
            decay: gamma,
        };
        Self::from_fn(grid, |r| amplitude * r.powf(-gamma), gamma.max(0.0), tail)
    }

    /// Weighted knot values, including the boundary knot.
    pub fn weighted_values(&self) -> Vec<f64> {
        let beta = self.weight;
        let mut y: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &u)| r.powf(beta) * u)
            .collect();
        let r_max = self.grid.r_max();
        y.push(r_max.powf(beta) * self.tail.boundary_value(r_max));
        y
    }

    pub fn model(&self) -> Model {
        let knots = SplineKnots::new(&self.grid);
        let coefs = knots.coefficients(&self.weighted_values());
        Model {
            knots,
            coefs,
            weight: self.weight,
            r_max: self.grid.r_max(),
            tail: self.tail,
        }
    }

    /// Model value at any r > 0.
    pub fn eval(&self, r: f64) -> f64 {
        self.model().value(r)
    }

    /// a * self + b * other on a common grid and weight.
    pub fn combine(&self, a: f64, other: &RadialFunction, b: f64) -> Result<RadialFunction> {
        if self.grid != other.grid || self.weight != other.weight {
            return Err(domain("functions must share grid and weight"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        let tail = self.tail.combine(a, &other.tail, b)?;
        RadialFunction::new(self.grid.clone(), values, self.weight, tail)
    }

    /// True if every weighted value r^beta u stays below `bound` in size.
    pub fn weighted_bounded(&self, bound: f64) -> bool {
        self.weighted_values().iter().all(|y| y.abs() <= bound)
    }
}

impl Model {
    /// Weighted model y(x) and its first two x-derivatives.
    pub fn weighted(&self, x: f64) -> [f64; 3] {
        let (k, t) = self.knots.locate(x);
        let [a, b, c, d] = self.coefs[k];
        if t < 0.0 {
            return [a, 0.0, 0.0];
        }
        [
            a + t * (b + t * (c + t * d)),
            b + t * (2.0 * c + 3.0 * t * d),
            2.0 * c + 6.0 * t * d,
        ]
    }

    /// u(r) for any r > 0, using the tail beyond r_max.
    pub fn value(&self, r: f64) -> f64 {
        if r > self.r_max {
            return self.tail.value(r);
        }
        let x = r.ln();
        (-self.weight * x).exp() * self.weighted(x)[0]
    }

    /// u, u', u'' at r < r_max.
    pub fn derivatives(&self, r: f64) -> [f64; 3] {
        let x = r.ln();
        let [y, y1, y2] = self.weighted(x);
        let b = self.weight;
        let e = (-b * x).exp();
        [
            e * y,
            e * (y1 - b * y) / r,
            e * (y2 - (2.0 * b + 1.0) * y1 + b * (b + 1.0) * y) / (r * r),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_ratio_constant() {
        let g = RadialGrid::log_uniform(1e-6, 1.0, 400).unwrap();
        assert_eq!(g.len(), 400);
        assert!(g.is_log_uniform());
        assert!(g.nodes()[0] > 1e-6 && g.nodes()[399] < 1.0);
    }

    #[test]
    fn two_sided_grid_clusters_at_both_ends() {
        let g = RadialGrid::two_sided(1e-4, 1.0, 1e-5, 200).unwrap();
        assert_eq!(g.len(), 200);
        let nodes = g.nodes();
        assert!(nodes[0] < 2e-4);
        assert!(1.0 - nodes[199] < 2e-5);
    }

    #[test]
    fn spline_interpolates_smooth_data() {
        let g = RadialGrid::log_uniform(0.01, 1.0, 60).unwrap();
        let f = RadialFunction::from_fn(
            g,
            |r| 2.0 + (3.0 * r).sin(),
            0.0,
            TailModel::ConstantThenZero {
                value: 2.0 + 3f64.sin(),
                outer_radius: f64::INFINITY,
            },
        )
        .unwrap();
        let m = f.model();
        for r in [0.05f64, 0.2, 0.5] {
            assert!((m.value(r) - (2.0 + (3.0 * r).sin())).abs() < 1e-5, "{r}");
        }
        // constant below the first node
        let r0 = f.grid.nodes()[0];
        assert_eq!(m.value(1e-3 * r0), f.values[0]);
        assert!(m.derivatives(r0)[1].abs() < 1e-10);
    }

    #[test]
    fn weighted_power_is_exact() {
        let g = RadialGrid::log_uniform(1e-3, 1.0, 20).unwrap();
        let f = RadialFunction::power(g, 0.7, 0.4).unwrap();
        let m = f.model();
        for r in [1e-5f64, 2e-3, 0.3, 0.99] {
            let exact = 0.7 * r.powf(-0.4);
            let [u, du, ddu] = m.derivatives(r);
            assert!((u / exact - 1.0).abs() < 1e-13);
            assert!((du / (-0.4 * exact / r) - 1.0).abs() < 1e-12);
            assert!((ddu / (0.4 * 1.4 * exact / (r * r)) - 1.0).abs() < 1e-12);
        }
        assert!((m.value(3.0) - 0.7 * 3f64.powf(-0.4)).abs() < 1e-15);
    }

    #[test]
    fn coefficient_maps_match_direct_spline() {
        let g = RadialGrid::log_uniform(0.1, 2.0, 9).unwrap();
        let knots = SplineKnots::new(&g);
        let y: Vec<f64> = (0..10).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let direct = knots.coefficients(&y);
        let maps = knots.coefficient_maps();
        let cols = 10;
        for k in 0..9 {
            for j in 0..4 {
                let via: f64 = (0..cols).map(|i| maps[j][k * cols + i] * y[i]).sum();
                assert!((via - direct[k][j]).abs() < 1e-10, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn reflection_is_involution() {
        let g = RadialGrid::log_uniform(1e-3, 1.0, 50).unwrap();
        let back = g.reflected().reflected();
        for (a, b) in g.nodes().iter().zip(back.nodes()) {
            assert!((a / b - 1.0).abs() < 1e-15);
        }
        assert!(g.reflected().is_log_uniform());
    }
}
