//! C ABI for fraclane.
//!
//! Every fallible call returns an [`FlStatus`]; on failure the message is
//! kept per thread and can be read with [`fl_last_error`]. Problems and
//! computed profiles are opaque handles released by their `_free` function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fraclane::constants::{self, ProblemParams, RegimeTag};
use fraclane::diagnostics::fit_asymptotics;
use fraclane::grid::{RadialFunction, RadialGrid, TailModel};
use fraclane::kelvin::kelvin_transform;
use fraclane::solver::{self, NewtonOptions, PicardOptions, SolveReport};
use fraclane::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RegimeViolation = 3,
    NotIntegrable = 4,
    QuadratureFailed = 5,
    SingularSystem = 6,
    NoConvergence = 7,
    Blowup = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlRegime {
    SerrinSubcritical = 0,
    SerrinSupercriticalSobolevSub = 1,
    SobolevCritical = 2,
    SobolevSupercritical = 3,
}

impl From<RegimeTag> for FlRegime {
    fn from(t: RegimeTag) -> Self {
        match t {
            RegimeTag::SerrinSubcritical => FlRegime::SerrinSubcritical,
            RegimeTag::SerrinSupercriticalSobolevSub => FlRegime::SerrinSupercriticalSobolevSub,
            RegimeTag::SobolevCritical => FlRegime::SobolevCritical,
            RegimeTag::SobolevSupercritical => FlRegime::SobolevSupercritical,
        }
    }
}

/// Convergence summary of the solve that produced a profile.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlSolveInfo {
    pub iterations: usize,
    pub residual_sup: f64,
    pub converged: bool,
    pub monotone: bool,
    pub cap_exceeded: bool,
    /// Eigenvalue for profiles from [`fl_eigenpair`], NaN otherwise.
    pub eigenvalue: f64,
}

impl FlSolveInfo {
    fn from_report(r: &SolveReport) -> Self {
        FlSolveInfo {
            iterations: r.iterations,
            residual_sup: r.residual_sup,
            converged: r.converged,
            monotone: r.monotone,
            cap_exceeded: r.cap_exceeded,
            eigenvalue: f64::NAN,
        }
    }
}

/// Opaque problem data (N, s, theta, p).
pub struct FlProblem {
    params: ProblemParams,
}

/// Opaque radial profile with the summary of the solve that produced it.
pub struct FlProfile {
    u: RadialFunction,
    info: FlSolveInfo,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FlStatus {
    match e {
        Error::Domain(_) => FlStatus::InvalidArgument,
        Error::Regime(_) => FlStatus::RegimeViolation,
        Error::NotIntegrable(_) => FlStatus::NotIntegrable,
        Error::Quadrature { .. } | Error::Assembly { .. } => FlStatus::QuadratureFailed,
        Error::Singular { .. } => FlStatus::SingularSystem,
        Error::NoConvergence { .. } => FlStatus::NoConvergence,
        Error::Blowup { .. } => FlStatus::Blowup,
    }
}

fn fail(status: FlStatus, msg: impl Into<String>) -> FlStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and turning panics into [`FlStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), FlStatus>) -> FlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(FlStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, FlStatus>;
}

impl<T> OrStatus<T> for fraclane::Result<T> {
    fn or_status(self) -> Result<T, FlStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, FlStatus> {
    p.as_mut()
        .ok_or_else(|| fail(FlStatus::NullPointer, "null output pointer"))
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, FlStatus> {
    p.as_ref().ok_or_else(|| fail(FlStatus::NullPointer, "null handle"))
}

fn boxed_profile(out: *mut *mut FlProfile, u: RadialFunction, info: FlSolveInfo) -> Result<(), FlStatus> {
    let slot = unsafe { out_ref(out)? };
    *slot = Box::into_raw(Box::new(FlProfile { u, info }));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 if there is no error.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Power multiplier C_s(tau) with (-Delta)^s |x|^tau = C_s(tau) |x|^{tau - 2s}.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn fl_spectral_constant(n: u32, s: f64, tau: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        *out_ref(out)? = constants::spectral_constant(n, s, tau).or_status()?.value;
        Ok(())
    })
}

/// Optimal Hardy constant mu_0 = -C_s((2s - N)/2).
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn fl_mu_zero(n: u32, s: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        *out_ref(out)? = constants::mu_zero(n, s).or_status()?;
        Ok(())
    })
}

/// The two roots tau_- <= tau_+ of C_s(tau) = -mu for mu >= -mu_0.
///
/// # Safety
/// `tau_minus` and `tau_plus` must be valid pointers to doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_hardy_exponents(
    n: u32,
    s: f64,
    mu: f64,
    tau_minus: *mut f64,
    tau_plus: *mut f64,
) -> FlStatus {
    guard(|| {
        let (lo, hi) = (out_ref(tau_minus)?, out_ref(tau_plus)?);
        let h = constants::hardy_exponents(n, s, mu).or_status()?;
        *lo = h.tau_minus;
        *hi = h.tau_plus;
        Ok(())
    })
}

/// Serrin exponent (N + theta)/(N - 2s).
#[no_mangle]
pub extern "C" fn fl_serrin_exponent(n: u32, s: f64, theta: f64) -> f64 {
    constants::serrin_exponent(n, s, theta)
}

/// Sobolev exponent (N + 2s + 2 theta)/(N - 2s).
#[no_mangle]
pub extern "C" fn fl_sobolev_exponent(n: u32, s: f64, theta: f64) -> f64 {
    constants::sobolev_exponent(n, s, theta)
}

/// Exterior-to-interior weight exponent.
#[no_mangle]
pub extern "C" fn fl_theta_star(n: u32, s: f64, theta_tilde: f64, p: f64) -> f64 {
    constants::theta_star(n, s, theta_tilde, p)
}

/// Validates (N, s, theta, p) and creates a problem handle. With
/// `unrestricted` the Serrin-supercritical requirement is skipped.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`fl_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_problem_new(
    n: u32,
    s: f64,
    theta: f64,
    p: f64,
    unrestricted: bool,
    out: *mut *mut FlProblem,
) -> FlStatus {
    guard(|| {
        let slot = out_ref(out)?;
        let params = if unrestricted {
            ProblemParams::unrestricted(n, s, theta, p)
        } else {
            ProblemParams::new(n, s, theta, p)
        }
        .or_status()?;
        *slot = Box::into_raw(Box::new(FlProblem { params }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be NULL or a handle from [`fl_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_problem_free(problem: *mut FlProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Singular exponent beta = (2s + theta)/(p - 1); NaN for a NULL handle.
///
/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_problem_beta(problem: *const FlProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |p| p.params.beta())
}

/// Coefficient K of the singular profile K |x|^{-beta}.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_problem_kappa(problem: *const FlProblem, out: *mut f64) -> FlStatus {
    guard(|| {
        let p = in_ref(problem)?;
        *out_ref(out)? = p.params.kappa().or_status()?;
        Ok(())
    })
}

/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_problem_regime(problem: *const FlProblem, out: *mut FlRegime) -> FlStatus {
    guard(|| {
        let p = in_ref(problem)?;
        *out_ref(out)? = p.params.regime().tag.into();
        Ok(())
    })
}

/// Newton solve for the singular profile on a log-uniform grid of `nodes`
/// points in [r_min, r_max], exterior data K r^{-beta}, seeded at
/// (1 + delta) K r^{-beta}. Fails with [`FlStatus::NoConvergence`] if the
/// iteration stalls.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer; on success it
/// receives a profile to be released with [`fl_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_solve_singular(
    problem: *const FlProblem,
    r_min: f64,
    r_max: f64,
    nodes: usize,
    delta: f64,
    out: *mut *mut FlProfile,
) -> FlStatus {
    guard(|| {
        let params = in_ref(problem)?.params;
        let grid = RadialGrid::log_uniform(r_min, r_max, nodes).or_status()?;
        let tail = TailModel::Power {
            amplitude: params.kappa().or_status()?,
            decay: params.beta(),
        };
        let (u, report) =
            solver::newton_singular_solution(&params, &grid, &tail, delta, &NewtonOptions::default()).or_status()?;
        if !report.converged {
            return Err(fail(FlStatus::NoConvergence, "Newton iteration did not converge"));
        }
        boxed_profile(out, u, FlSolveInfo::from_report(&report))
    })
}

/// Minimal solution with constant exterior value `b`, by monotone
/// iteration. A profile is returned even when the sup-norm cap is exceeded;
/// check `cap_exceeded` in [`fl_profile_info`].
///
/// # Safety
/// As for [`fl_solve_singular`].
#[no_mangle]
pub unsafe extern "C" fn fl_solve_minimal(
    problem: *const FlProblem,
    b: f64,
    r_min: f64,
    r_max: f64,
    nodes: usize,
    out: *mut *mut FlProfile,
) -> FlStatus {
    guard(|| {
        let params = in_ref(problem)?.params;
        let grid = RadialGrid::log_uniform(r_min, r_max, nodes).or_status()?;
        let (u, report) = solver::picard_minimal_solution(&params, b, &grid, &PicardOptions::default()).or_status()?;
        boxed_profile(out, u, FlSolveInfo::from_report(&report))
    })
}

/// First Dirichlet eigenpair of (-Delta)^s on the ball of radius `r_max`,
/// on a grid refined toward both the origin and the boundary. The
/// eigenvalue is stored in the profile's info.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a profile.
#[no_mangle]
pub unsafe extern "C" fn fl_eigenpair(
    n: u32,
    s: f64,
    r_min: f64,
    r_max: f64,
    gap: f64,
    nodes: usize,
    out: *mut *mut FlProfile,
) -> FlStatus {
    guard(|| {
        let grid = RadialGrid::two_sided(r_min, r_max, gap, nodes).or_status()?;
        let e = solver::eigenpair(n, s, &grid, 1e-10).or_status()?;
        let info = FlSolveInfo {
            iterations: e.iterations,
            residual_sup: e.residual,
            converged: true,
            monotone: true,
            cap_exceeded: false,
            eigenvalue: e.lambda1,
        };
        boxed_profile(out, e.xi1, info)
    })
}

/// Kelvin transform of a profile; the result has the same info.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_kelvin(
    profile: *const FlProfile,
    n: u32,
    s: f64,
    out: *mut *mut FlProfile,
) -> FlStatus {
    guard(|| {
        let p = in_ref(profile)?;
        let u = kelvin_transform(&p.u, n, s).or_status()?;
        boxed_profile(out, u, p.info)
    })
}

/// # Safety
/// `profile` must be NULL or a profile handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_free(profile: *mut FlProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Number of grid nodes; 0 for a NULL handle.
///
/// # Safety
/// `profile` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_len(profile: *const FlProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.u.grid.len())
}

/// Copies nodes and nodal values into caller buffers of length `len`.
/// Either buffer may be NULL to skip it.
///
/// # Safety
/// `profile` must be a live handle; non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_copy(
    profile: *const FlProfile,
    radii: *mut f64,
    values: *mut f64,
    len: usize,
) -> FlStatus {
    guard(|| {
        let p = in_ref(profile)?;
        let n = p.u.grid.len();
        if len < n {
            return Err(fail(FlStatus::BufferTooSmall, format!("need {n} entries, got {len}")));
        }
        if !radii.is_null() {
            ptr::copy_nonoverlapping(p.u.grid.nodes().as_ptr(), radii, n);
        }
        if !values.is_null() {
            ptr::copy_nonoverlapping(p.u.values.as_ptr(), values, n);
        }
        Ok(())
    })
}

/// Evaluates the profile at any r > 0, using the exterior model beyond r_max.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_eval(profile: *const FlProfile, r: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        let p = in_ref(profile)?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(fail(FlStatus::InvalidArgument, format!("radius {r} must be positive")));
        }
        *out_ref(out)? = p.u.eval(r);
        Ok(())
    })
}

/// Fits u ~ coefficient * r^{-exponent} over the nodes in [lo, hi].
///
/// # Safety
/// `profile` must be a live handle; `exponent` and `coefficient` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_fit(
    profile: *const FlProfile,
    lo: f64,
    hi: f64,
    exponent: *mut f64,
    coefficient: *mut f64,
) -> FlStatus {
    guard(|| {
        let p = in_ref(profile)?;
        let (e, c) = (out_ref(exponent)?, out_ref(coefficient)?);
        let fit = fit_asymptotics(&p.u, (lo, hi)).or_status()?;
        *e = fit.exponent;
        *c = fit.coefficient;
        Ok(())
    })
}

/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_profile_info(profile: *const FlProfile, out: *mut FlSolveInfo) -> FlStatus {
    guard(|| {
        let p = in_ref(profile)?;
        *out_ref(out)? = p.info;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = [0 as c_char; 256];
        let n = unsafe { fl_last_error(buf.as_mut_ptr(), buf.len()) };
        let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|c| *c as u8).collect();
        String::from_utf8(bytes).unwrap()
    }

    #[test]
    fn spectral_constant_matches_core() {
        let mut v = 0.0;
        assert_eq!(unsafe { fl_spectral_constant(3, 0.5, -1.0, &mut v) }, FlStatus::Ok);
        assert_eq!(v, constants::spectral_constant(3, 0.5, -1.0).unwrap().value);
        // constants are harmonic
        let mut w = 1.0;
        assert_eq!(unsafe { fl_spectral_constant(3, 0.5, 0.0, &mut w) }, FlStatus::Ok);
        assert!(v > 0.0 && w.abs() < 1e-14);
    }

    #[test]
    fn errors_are_reported() {
        let mut v = 0.0;
        assert_eq!(
            unsafe { fl_spectral_constant(3, 1.5, 0.0, &mut v) },
            FlStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        assert_eq!(unsafe { fl_mu_zero(3, 0.5, ptr::null_mut()) }, FlStatus::NullPointer);
        assert_eq!(last_error(), "null output pointer");
        let mut h = ptr::null_mut();
        assert_eq!(
            unsafe { fl_problem_new(3, 0.5, 0.0, 1.2, false, &mut h) },
            FlStatus::RegimeViolation
        );
        assert!(h.is_null());
        assert!(last_error().contains("Serrin"));
        let mut v = 0.0;
        assert_eq!(unsafe { fl_mu_zero(3, 0.5, &mut v) }, FlStatus::Ok);
        assert_eq!(unsafe { fl_last_error(ptr::null_mut(), 0) }, 0);
    }

    #[test]
    fn truncated_messages_are_terminated() {
        let mut v = 0.0;
        unsafe { fl_mu_zero(0, 0.5, &mut v) };
        let mut buf = [1 as c_char; 4];
        let full = unsafe { fl_last_error(buf.as_mut_ptr(), buf.len()) };
        assert!(full > 3);
        assert_eq!(buf[3], 0);
    }

    #[test]
    fn problem_handle_round_trip() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { fl_problem_new(3, 0.5, 0.0, 3.0, false, &mut h) }, FlStatus::Ok);
        assert_eq!(unsafe { fl_problem_beta(h) }, 0.5);
        let mut k = 0.0;
        assert_eq!(unsafe { fl_problem_kappa(h, &mut k) }, FlStatus::Ok);
        let c = constants::spectral_constant(3, 0.5, -0.5).unwrap().value;
        assert!((k * k - c).abs() < 1e-14);
        let mut r = FlRegime::SobolevCritical;
        assert_eq!(unsafe { fl_problem_regime(h, &mut r) }, FlStatus::Ok);
        assert_eq!(r, FlRegime::SobolevSupercritical);
        unsafe { fl_problem_free(h) };
        assert!(unsafe { fl_problem_beta(ptr::null()) }.is_nan());
    }

    #[test]
    fn minimal_solution_profile() {
        let mut h = ptr::null_mut();
        unsafe { fl_problem_new(3, 0.5, 0.0, 3.0, false, &mut h) };
        let mut u = ptr::null_mut();
        assert_eq!(unsafe { fl_solve_minimal(h, 0.1, 1e-3, 1.0, 40, &mut u) }, FlStatus::Ok);
        let n = unsafe { fl_profile_len(u) };
        assert_eq!(n, 40);
        let mut small = vec![0.0; n - 1];
        assert_eq!(
            unsafe { fl_profile_copy(u, small.as_mut_ptr(), ptr::null_mut(), small.len()) },
            FlStatus::BufferTooSmall
        );
        let (mut r, mut v) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            unsafe { fl_profile_copy(u, r.as_mut_ptr(), v.as_mut_ptr(), n) },
            FlStatus::Ok
        );
        assert!(r[0] > 1e-3 && r[n - 1] < 1.0 && r.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|x| *x > 0.1));
        let mut info = std::mem::MaybeUninit::<FlSolveInfo>::uninit();
        assert_eq!(unsafe { fl_profile_info(u, info.as_mut_ptr()) }, FlStatus::Ok);
        let info = unsafe { info.assume_init() };
        assert!(info.converged && info.monotone && !info.cap_exceeded && info.eigenvalue.is_nan());
        let mut outside = 0.0;
        assert_eq!(unsafe { fl_profile_eval(u, 1.5, &mut outside) }, FlStatus::Ok);
        assert_eq!(outside, 0.1);
        assert_eq!(
            unsafe { fl_profile_eval(u, -1.0, &mut outside) },
            FlStatus::InvalidArgument
        );
        unsafe {
            fl_profile_free(u);
            fl_problem_free(h);
        }
    }

    #[test]
    fn kelvin_of_profile_inverts() {
        let mut h = ptr::null_mut();
        unsafe { fl_problem_new(3, 0.5, 0.0, 3.0, false, &mut h) };
        let mut u = ptr::null_mut();
        unsafe { fl_solve_minimal(h, 0.1, 1e-3, 1.0, 30, &mut u) };
        let (mut k, mut kk) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(unsafe { fl_profile_kelvin(u, 3, 0.5, &mut k) }, FlStatus::Ok);
        assert_eq!(unsafe { fl_profile_kelvin(k, 3, 0.5, &mut kk) }, FlStatus::Ok);
        let n = unsafe { fl_profile_len(u) };
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        unsafe {
            fl_profile_copy(u, ptr::null_mut(), a.as_mut_ptr(), n);
            fl_profile_copy(kk, ptr::null_mut(), b.as_mut_ptr(), n);
        }
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
        unsafe {
            fl_profile_free(kk);
            fl_profile_free(k);
            fl_profile_free(u);
            fl_problem_free(h);
        }
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { std::ffi::CStr::from_ptr(fl_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
