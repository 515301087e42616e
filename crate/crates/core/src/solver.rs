//! Radial Dirichlet problems on the unit ball: linear solves, the Picard
//! iteration for minimal solutions, Newton's method for singular profiles
//! and the first Dirichlet eigenpair.

use nalgebra::{DMatrix, DVector, LU};
use serde::Serialize;

use crate::constants::ProblemParams;
use crate::error::{domain, Error, Result};
use crate::fracop::{FracLaplacian, OperatorMatrix};
use crate::grid::{RadialFunction, RadialGrid, TailModel};

/// Largest condition number accepted by the linear solves.
pub const MAX_CONDITION: f64 = 1e14;
/// Default Picard cap on the sup-norm.
pub const PICARD_CAP: f64 = 1e6;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm of the residual at the nodes. Newton measures it in units
    /// of the profile, |F_i| r_i^{beta + 2s} (see [`newton_singular_solution`]).
    pub residual_sup: f64,
    pub converged: bool,
    /// Picard only: every iterate dominates its predecessor.
    pub monotone: bool,
    pub cap_exceeded: bool,
    /// Some iterate had negative values, clamped to 0 in the nonlinearity.
    pub negative_clamped: bool,
    pub residual_history: Vec<f64>,
    /// Newton only: largest r_{k+1} / r_k^2 once r_k < 1e-3.
    pub quadratic_constant: Option<f64>,
}

impl SolveReport {
    fn new() -> Self {
        SolveReport {
            iterations: 0,
            residual_sup: f64::INFINITY,
            converged: false,
            monotone: true,
            cap_exceeded: false,
            negative_clamped: false,
            residual_history: Vec::new(),
            quadratic_constant: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Sup-norm 1, zero exterior.
    pub xi1: RadialFunction,
    pub iterations: usize,
    /// sup |A xi - lambda xi| / lambda.
    pub residual: f64,
}

/// Row- and column-equilibrated LU factorization with the 1-norm
/// condition number of the equilibrated matrix.
pub struct Factorized {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    row_scale: DVector<f64>,
    col_scale: DVector<f64>,
    pub condition: f64,
}

impl Factorized {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let singular = Error::Singular {
            condition: f64::INFINITY,
        };
        let row_scale = DVector::from_iterator(
            a.nrows(),
            a.row_iter().map(|r| 1.0 / r.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        );
        let mut scaled = a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= row_scale[i];
        }
        let col_scale = DVector::from_iterator(
            a.ncols(),
            scaled
                .column_iter()
                .map(|c| 1.0 / c.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        );
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= col_scale[j];
        }
        if !scaled.iter().all(|v| v.is_finite()) {
            return Err(singular);
        }
        let norm = one_norm(&scaled);
        let lu = scaled.lu();
        let inv = lu.try_inverse().ok_or(singular)?;
        let condition = norm * one_norm(&inv);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        Ok(Factorized {
            lu,
            row_scale,
            col_scale,
            condition,
        })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let z = self
            .lu
            .solve(&b.component_mul(&self.row_scale))
            .expect("factorization checked at construction");
        z.component_mul(&self.col_scale)
    }
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves A u = rhs - exterior for the nodal values.
pub fn solve_with(matrix: &OperatorMatrix, rhs: &[f64]) -> Result<RadialFunction> {
    check_rhs(matrix, rhs)?;
    let f = Factorized::new(&matrix.entries)?;
    let b = DVector::from_column_slice(rhs) - &matrix.exterior_vector;
    let u = f.solve(&b);
    RadialFunction::new(matrix.grid.clone(), u.as_slice().to_vec(), matrix.weight, matrix.tail)
}

fn check_rhs(matrix: &OperatorMatrix, rhs: &[f64]) -> Result<()> {
    if rhs.len() != matrix.grid.len() {
        return Err(domain(format!(
            "right-hand side has {} values for {} nodes",
            rhs.len(),
            matrix.grid.len()
        )));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(domain("right-hand side must be finite"));
    }
    Ok(())
}

/// (-Delta)^s u = f in the ball of radius `grid.r_max()`, u = tail outside.
pub fn solve_linear_dirichlet(
    n: u32,
    s: f64,
    grid: &RadialGrid,
    rhs: &[f64],
    tail: &TailModel,
    beta_w: f64,
    tol: f64,
) -> Result<RadialFunction> {
    if rhs.len() != grid.len() {
        return Err(domain(format!(
            "right-hand side has {} values for {} nodes",
            rhs.len(),
            grid.len()
        )));
    }
    let matrix = FracLaplacian::new(n, s)?.assemble(grid, tail, beta_w, tol)?;
    solve_with(&matrix, rhs)
}

/// Options for [`picard_minimal_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardOptions {
    /// Outer radius of the exterior annulus carrying the constant b.
    pub outer_radius: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub cap: f64,
    /// Quadrature tolerance for the assembly.
    pub quad_tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            outer_radius: f64::INFINITY,
            tol: 1e-10,
            max_iter: 200,
            cap: PICARD_CAP,
            quad_tol: 1e-8,
        }
    }
}

/// Monotone iteration v_m = G(r^theta v_{m-1}^p) from the s-harmonic
/// extension of the exterior constant `b`.
pub fn picard_minimal_solution(
    params: &ProblemParams,
    b: f64,
    grid: &RadialGrid,
    opts: &PicardOptions,
) -> Result<(RadialFunction, SolveReport)> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(domain(format!("exterior value b = {b} must be finite and nonnegative")));
    }
    if !(opts.outer_radius > grid.r_max()) {
        return Err(domain("exterior annulus must extend beyond r_max"));
    }
    if !(opts.tol > 0.0) || !(opts.cap > 0.0) {
        return Err(domain("tolerance and cap must be positive"));
    }
    let tail = TailModel::ConstantThenZero {
        value: b,
        outer_radius: opts.outer_radius,
    };
    let matrix = FracLaplacian::new(params.n, params.s)?.assemble(grid, &tail, 0.0, opts.quad_tol)?;
    picard_with(params, &matrix, opts)
}

/// Picard iteration on an assembled operator.
pub fn picard_with(
    params: &ProblemParams,
    matrix: &OperatorMatrix,
    opts: &PicardOptions,
) -> Result<(RadialFunction, SolveReport)> {
    let f = Factorized::new(&matrix.entries)?;
    let weights: Vec<f64> = matrix.grid.nodes().iter().map(|r| r.powf(params.theta)).collect();
    let nonlinear = |v: &DVector<f64>, clamped: &mut bool| -> DVector<f64> {
        DVector::from_iterator(
            v.len(),
            v.iter().zip(&weights).map(|(&x, &w)| {
                if x < 0.0 {
                    *clamped = true;
                }
                w * x.max(0.0).powf(params.p)
            }),
        )
    };
    let mut report = SolveReport::new();
    let mut v = f.solve(&(-&matrix.exterior_vector));
    for it in 1..=opts.max_iter {
        let rhs = nonlinear(&v, &mut report.negative_clamped);
        let next = f.solve(&(rhs - &matrix.exterior_vector));
        let slack = 1e-12 * sup(&next).max(1.0);
        if next.iter().zip(v.iter()).any(|(a, b)| *a < *b - slack) {
            report.monotone = false;
        }
        let change = sup(&(&next - &v));
        report.residual_history.push(change);
        report.iterations = it;
        v = next;
        if sup(&v) > opts.cap || !v.iter().all(|x| x.is_finite()) {
            report.cap_exceeded = true;
            break;
        }
        if change <= opts.tol {
            report.converged = true;
            break;
        }
    }
    let mut clamped = false;
    let res = matrix.apply(&v) - nonlinear(&v, &mut clamped);
    report.residual_sup = sup(&res);
    let u = RadialFunction::new(matrix.grid.clone(), v.as_slice().to_vec(), 0.0, matrix.tail)?;
    Ok((u, report))
}

/// Options for [`newton_singular_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub quad_tol: f64,
    /// Replace the collocation equation at the first node by r^beta u = K,
    /// the only positive limit r^beta u can have at the origin.
    pub pin_inner: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iter: 100,
            quad_tol: 1e-9,
            pin_inner: true,
        }
    }
}

/// Damped Newton for A u + ext - r^theta u_+^p = 0 with interior weight
/// beta = (2s + theta)/(p - 1), seeded at (1 + delta) K r^{-beta}.
///
/// Residuals are reported as sup_i |F_i| r_i^{beta + 2s}, which is O(1) on
/// the singular profile across the whole grid. Steps are Levenberg-Marquardt
/// corrections with damping |F|^2 in the variables r^beta u, halved while the
/// Euclidean norm of the weighted residual fails to decrease.
pub fn newton_singular_solution(
    params: &ProblemParams,
    grid: &RadialGrid,
    tail: &TailModel,
    delta: f64,
    opts: &NewtonOptions,
) -> Result<(RadialFunction, SolveReport)> {
    if !(delta.abs() <= 0.2) {
        return Err(domain(format!("seed perturbation {delta} must satisfy |delta| <= 0.2")));
    }
    let beta = params.beta();
    let matrix = FracLaplacian::new(params.n, params.s)?.assemble(grid, tail, beta, opts.quad_tol)?;
    let kappa = params.kappa()?;
    let seed: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|r| (1.0 + delta) * kappa * r.powf(-beta))
        .collect();
    let inner = opts.pin_inner.then_some(kappa);
    newton_with(params, &matrix, &seed, inner, opts)
}

/// Newton iteration on an assembled operator from nodal `seed` values.
/// With `inner = Some(y)` the first equation becomes r_0^beta u_0 = y.
pub fn newton_with(
    params: &ProblemParams,
    matrix: &OperatorMatrix,
    seed: &[f64],
    inner: Option<f64>,
    opts: &NewtonOptions,
) -> Result<(RadialFunction, SolveReport)> {
    if seed.len() != matrix.grid.len() {
        return Err(domain("seed length does not match the grid"));
    }
    let beta = params.beta();
    let p = params.p;
    let nodes = matrix.grid.nodes();
    let theta_w: Vec<f64> = nodes.iter().map(|r| r.powf(params.theta)).collect();
    let scale: Vec<f64> = nodes.iter().map(|r| r.powf(beta + 2.0 * params.s)).collect();
    // r_0^{-beta}: pinned row measured as |y_0 - y|
    let pin = nodes[0].powf(-beta);
    let weight: Vec<f64> = nodes.iter().map(|r| r.powf(-beta)).collect();
    let mut report = SolveReport::new();

    let residual = |u: &DVector<f64>, clamped: &mut bool| -> DVector<f64> {
        let au = matrix.apply(u);
        DVector::from_iterator(
            u.len(),
            (0..u.len()).map(|i| {
                if u[i] < 0.0 {
                    *clamped = true;
                }
                match inner {
                    Some(y) if i == 0 => (u[0] - y * pin) / scale[0] * pin,
                    _ => au[i] - theta_w[i] * u[i].max(0.0).powf(p),
                }
            }),
        )
    };
    let measure = |f: &DVector<f64>| -> f64 { f.iter().zip(&scale).fold(0.0, |m, (v, w)| m.max((v * w).abs())) };

    let mut u = DVector::from_column_slice(seed);
    let mut f = residual(&u, &mut report.negative_clamped);
    let merit = |f: &DVector<f64>| -> f64 { f.iter().zip(&scale).map(|(v, w)| (v * w).powi(2)).sum::<f64>().sqrt() };
    let mut norm = measure(&f);
    let mut m0 = merit(&f);
    report.residual_history.push(norm);
    for it in 1..=opts.max_iter {
        if norm <= opts.tol {
            report.converged = true;
            break;
        }
        report.iterations = it;
        let mut jac = matrix.entries.clone();
        for i in 0..u.len() {
            jac[(i, i)] -= p * theta_w[i] * u[i].max(0.0).powf(p - 1.0);
        }
        if inner.is_some() {
            jac.row_mut(0).fill(0.0);
            jac[(0, 0)] = 1.0 / scale[0] * pin;
        }
        let step = regularized_step(&jac, &f, &scale, &weight, norm * norm)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &u - lambda * &step;
            let mut clamped = false;
            let ft = residual(&trial, &mut clamped);
            let nt = measure(&ft);
            let mt = merit(&ft);
            if mt < m0 {
                m0 = mt;
                if clamped {
                    report.negative_clamped = true;
                }
                accepted = Some((trial, ft, nt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, ft, nt)) = accepted else {
            break;
        };
        if norm < 1e-3 {
            let c = nt / (norm * norm);
            report.quadratic_constant = Some(report.quadratic_constant.map_or(c, |q| q.max(c)));
        }
        u = trial;
        f = ft;
        norm = nt;
        report.residual_history.push(norm);
    }
    if norm <= opts.tol {
        report.converged = true;
    }
    report.residual_sup = norm;
    let out = RadialFunction::new(matrix.grid.clone(), u.as_slice().to_vec(), matrix.weight, matrix.tail)?;
    if !report.converged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: norm,
        });
    }
    Ok((out, report))
}

/// Levenberg-Marquardt step for J x = f in the scaled variables
/// rows * J * cols, with damping `mu`. Isolated near-null directions of the
/// linearization are left untouched until the residual is small.
fn regularized_step(jac: &DMatrix<f64>, f: &DVector<f64>, rows: &[f64], cols: &[f64], mu: f64) -> Result<DVector<f64>> {
    let n = f.len();
    let scaled = DMatrix::from_fn(n, n, |i, j| rows[i] * jac[(i, j)] * cols[j]);
    if scaled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    let svd = scaled.svd(true, true);
    let (Some(left), Some(right)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    };
    let rhs = DVector::from_iterator(n, (0..n).map(|i| rows[i] * f[i]));
    let proj = left.transpose() * rhs;
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    if !(smax > 0.0) || sigma.min() < smax / MAX_CONDITION && mu == 0.0 {
        return Err(Error::Singular {
            condition: smax / sigma.min(),
        });
    }
    let coef = DVector::from_iterator(n, (0..n).map(|k| sigma[k] / (sigma[k] * sigma[k] + mu) * proj[k]));
    let x = right.transpose() * coef;
    Ok(DVector::from_iterator(n, (0..n).map(|j| cols[j] * x[j])))
}

/// Smallest eigenvalue and positive eigenvector of the Dirichlet operator
/// on `grid` (zero exterior, unweighted model), by inverse iteration.
pub fn eigenpair(n: u32, s: f64, grid: &RadialGrid, tol: f64) -> Result<EigenPair> {
    let matrix = FracLaplacian::new(n, s)?.assemble(grid, &TailModel::Zero, 0.0, tol.max(1e-8))?;
    eigenpair_with(&matrix, tol)
}

/// Inverse iteration on an assembled operator with zero exterior data.
pub fn eigenpair_with(matrix: &OperatorMatrix, tol: f64) -> Result<EigenPair> {
    const MAX_ITER: usize = 500;
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let f = Factorized::new(&matrix.entries)?;
    let len = matrix.grid.len();
    let mut x = DVector::from_element(len, 1.0);
    let mut lambda = f64::NAN;
    for it in 1..=MAX_ITER {
        let y = f.solve(&x);
        let (imax, ymax) = y.iter().enumerate().fold(
            (0, 0.0f64),
            |acc, (i, &v)| if v.abs() > acc.1.abs() { (i, v) } else { acc },
        );
        let next = &y / ymax;
        let lam = x[imax] / ymax;
        let change = sup(&(&next - &x));
        x = next;
        let settled = (lam - lambda).abs() <= tol * lam.abs() && change <= tol.sqrt();
        lambda = lam;
        if settled {
            let r = sup(&(&matrix.entries * &x - lambda * &x)) / lambda.abs();
            if !(lambda > 0.0) {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: r,
                });
            }
            let xi1 = RadialFunction::new(matrix.grid.clone(), x.as_slice().to_vec(), 0.0, TailModel::Zero)?;
            return Ok(EigenPair {
                lambda1: lambda,
                xi1,
                iterations: it,
                residual: r,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    #[test]
    fn zero_data_gives_zero() {
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 40).unwrap();
        let u = solve_linear_dirichlet(3, 0.5, &grid, &[0.0; 40], &TailModel::Zero, 0.0, 1e-8).unwrap();
        assert!(u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn harmonic_extension_is_positive() {
        let grid = RadialGrid::log_uniform(1e-3, 1.0, 60).unwrap();
        let tail = TailModel::Power {
            amplitude: 1.0,
            decay: 1.5,
        };
        for &(n, s) in &[(1u32, 0.3), (3, 0.5), (2, 0.8)] {
            let u = solve_linear_dirichlet(n, s, &grid, &[0.0; 60], &tail, 0.0, 1e-8).unwrap();
            assert!(u.values.iter().all(|v| *v > 0.0), "N={n} s={s}");
        }
    }

    #[test]
    fn torsion_function() {
        // (-Delta)^s (1 - r^2)_+^s = 4^s Gamma(1+s) Gamma(N/2+s) / Gamma(N/2)
        let (n, s) = (3u32, 0.5);
        let h = 0.5 * n as f64;
        let c = 4f64.powf(s) * gamma(1.0 + s) * gamma(h + s) / gamma(h);
        let grid = RadialGrid::two_sided(1e-3, 1.0, 1e-6, 160).unwrap();
        let u = solve_linear_dirichlet(n, s, &grid, &vec![c; 160], &TailModel::Zero, 0.0, 1e-8).unwrap();
        for (r, v) in grid.nodes().iter().zip(&u.values) {
            if *r < 0.9 {
                let exact = (1.0 - r * r).powf(s);
                assert!((v - exact).abs() < 2e-3, "r={r} u={v} exact={exact}");
            }
        }
    }

    #[test]
    fn picard_regimes() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let grid = RadialGrid::log_uniform(1e-4, 1.0, 80).unwrap();
        let opts = PicardOptions::default();
        let (u, rep) = picard_minimal_solution(&params, 0.0, &grid, &opts).unwrap();
        assert!(rep.converged && u.values.iter().all(|v| *v == 0.0));

        let (u, rep) = picard_minimal_solution(&params, 0.05, &grid, &opts).unwrap();
        assert!(rep.converged && rep.monotone && !rep.cap_exceeded);
        assert!(u.values.iter().all(|v| *v > 0.05));
        assert!(u.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));

        let (_, rep) = picard_minimal_solution(&params, 10.0, &grid, &opts).unwrap();
        assert!(rep.cap_exceeded && !rep.converged);
    }

    #[test]
    fn profile_needs_no_newton_step() {
        let params = ProblemParams::new(3, 0.5, 0.0, 3.0).unwrap();
        let kappa = params.kappa().unwrap();
        let grid = RadialGrid::log_uniform(1e-4, 1.0, 100).unwrap();
        let tail = TailModel::Power {
            amplitude: kappa,
            decay: params.beta(),
        };
        let (u, rep) = newton_singular_solution(&params, &grid, &tail, 0.0, &NewtonOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged && rep.residual_sup < 1e-9);
        let r = grid.nodes()[50];
        assert!((u.values[50] - kappa * r.powf(-0.5)).abs() < 1e-15 * u.values[50].abs().max(1.0) * 10.0);
        assert!(newton_singular_solution(&params, &grid, &tail, 0.5, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn first_eigenpair_of_the_ball() {
        // half-Laplacian on the unit ball of R^3: lambda_1 = 2.75475...
        let grid = RadialGrid::two_sided(1e-4, 1.0, 1e-6, 160).unwrap();
        let e = eigenpair(3, 0.5, &grid, 1e-10).unwrap();
        assert!((e.lambda1 - 2.75475).abs() < 2e-3, "{}", e.lambda1);
        assert!(e.xi1.values.iter().all(|v| *v > 0.0));
        assert!(e.residual < 1e-6);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(Factorized::new(&a), Err(Error::Singular { .. })));
    }
}
