//! C ABI for the estimation-bound library: opaque model-point handles,
//! status codes mirroring the CLI exit classes, and a thread-local error
//! message. All matrices cross the boundary as row-major double arrays;
//! complex entries are interleaved (re, im) pairs.
//!
//! Every entry point catches panics, so no unwinding crosses the ABI.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use holevo::matrix::{c64, CMatrix, RMatrix};

use holevo::model::{builtin_family, CostMatrix, ModelPoint};
use holevo::{Error, Result};

/// Outcome class of a call. Mirrors the CLI exit codes: 2 for invalid
/// input, 3 for solver non-convergence, 4 for precision loss.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum HolevoStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Validation failure: shapes, domains, parse errors.
    InvalidInput = 2,
    /// The SDP solver stalled or found the problem infeasible.
    SolverFailure = 3,
    /// A result lost too much precision to be meaningful.
    PrecisionFailure = 4,
    /// A panic was caught at the boundary; state is still consistent.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(err: &Error) -> HolevoStatus {
    match err {
        Error::SolverStalled { .. }
        | Error::SolverInfeasible(_)
        | Error::ConstraintViolation { .. } => HolevoStatus::SolverFailure,
        Error::Precision(_) => HolevoStatus::PrecisionFailure,
        _ => HolevoStatus::InvalidInput,
    }
}

/// Runs a fallible body, records its error message, and converts panics
/// into `Internal` instead of unwinding into the caller.
fn guarded(body: impl FnOnce() -> Result<()>) -> HolevoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HolevoStatus::Ok,
        Ok(Err(err)) => {
            set_error(&err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_error("internal panic caught at the C boundary");
            HolevoStatus::Internal
        }
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn holevo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque parametric-model point: a density matrix with its parameter
/// gradients, ready for bound evaluation.
pub struct HolevoModelPoint {
    inner: ModelPoint,
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

fn cmatrix_from_interleaved(dim: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        c64(data[k], data[k + 1])
    })
}

fn rmatrix_from_row_major(rows: usize, cols: usize, data: &[f64]) -> RMatrix {
    RMatrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

fn null_error(what: &str) -> HolevoStatus {
    set_error(&format!("{what} must not be null"));
    HolevoStatus::NullPointer
}

/// Builds a model point from explicit matrices.
///
/// `rho` holds 2*dim*dim doubles (row-major, interleaved re/im) and
/// `grads` holds `params` consecutive blocks of the same layout. On
/// success `*out` owns the handle; release it with
/// `holevo_model_point_free`.
///
/// # Safety
/// Pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn holevo_model_point_new(
    dim: usize,
    params: usize,
    rho: *const f64,
    grads: *const f64,
    out: *mut *mut HolevoModelPoint,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    let block = 2 * dim * dim;
    let (rho, grads) = match (
        slice_arg(rho, block),
        slice_arg(grads, params.saturating_mul(block)),
    ) {
        (Some(r), Some(g)) => (r, g),
        _ => return null_error("rho and grads"),
    };
    guarded(|| {
        if dim == 0 || params == 0 {
            return Err(Error::Domain(
                "dimension and parameter count must be positive".into(),
            ));
        }
        let rho = cmatrix_from_interleaved(dim, rho);
        let grads = (0..params)
            .map(|k| cmatrix_from_interleaved(dim, &grads[k * block..(k + 1) * block]))
            .collect();
        let point = ModelPoint::from_parts(vec![0.0; params], rho, grads)?;
        *out = Box::into_raw(Box::new(HolevoModelPoint { inner: point }));
        Ok(())
    })
}

/// Evaluates a builtin family (pure-qubit, qubit-bloch, qubit-spherical,
/// qubit-r-theta, phase:B) at `point`, or at the family default when
/// `point` is null.
///
/// # Safety
/// `name` must be a NUL-terminated string; `point`, when non-null, must
/// hold `point_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn holevo_model_point_builtin(
    name: *const c_char,
    point: *const f64,
    point_len: usize,
    out: *mut *mut HolevoModelPoint,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    if name.is_null() {
        return null_error("name");
    }
    let name = CStr::from_ptr(name);
    let point = slice_arg(point, point_len);
    guarded(|| {
        let name = name
            .to_str()
            .map_err(|_| Error::Parse("model name is not valid UTF-8".into()))?;
        let (family, default_point) = builtin_family(name)?;
        let theta = point.map(<[f64]>::to_vec).unwrap_or(default_point);
        let pt = family.evaluate(&theta)?;
        *out = Box::into_raw(Box::new(HolevoModelPoint { inner: pt }));
        Ok(())
    })
}

/// Releases a model point. Null is a no-op.
///
/// # Safety
/// `pt` must be a pointer returned by a constructor, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn holevo_model_point_free(pt: *mut HolevoModelPoint) {
    if !pt.is_null() {
        drop(Box::from_raw(pt));
    }
}

/// Hilbert-space dimension of the point; 0 for null.
///
/// # Safety
/// `pt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn holevo_model_point_dim(pt: *const HolevoModelPoint) -> usize {
    pt.as_ref().map(|p| p.inner.dim()).unwrap_or(0)
}

/// Parameter count of the point; 0 for null.
///
/// # Safety
/// `pt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn holevo_model_point_params(pt: *const HolevoModelPoint) -> usize {
    pt.as_ref().map(|p| p.inner.param_count()).unwrap_or(0)
}

unsafe fn scalar_bound(
    pt: *const HolevoModelPoint,
    cost: *const f64,
    out: *mut f64,
    eval: impl FnOnce(&ModelPoint, &CostMatrix) -> Result<f64>,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    let pt = match pt.as_ref() {
        Some(p) => p,
        None => return null_error("model point"),
    };
    let p = pt.inner.param_count();
    let cost = match slice_arg(cost, p * p) {
        Some(c) => c,
        None => return null_error("cost"),
    };
    guarded(|| {
        let c = CostMatrix::new(rmatrix_from_row_major(p, p, cost))?;
        *out = eval(&pt.inner, &c)?;
        Ok(())
    })
}

/// SLD Cramer-Rao bound trace(C F^{-1}).
///
/// # Safety
/// `cost` must hold p*p doubles (row-major) for p parameters.
#[no_mangle]
pub unsafe extern "C" fn holevo_sld_bound(
    pt: *const HolevoModelPoint,
    cost: *const f64,
    out: *mut f64,
) -> HolevoStatus {
    scalar_bound(pt, cost, out, |pt, c| {
        holevo::bounds::sld_cr_bound(&holevo::bounds::sld_set(pt)?, c)
    })
}

/// RLD bound; fails with InvalidInput on rank-deficient states.
///
/// # Safety
/// `cost` must hold p*p doubles (row-major) for p parameters.
#[no_mangle]
pub unsafe extern "C" fn holevo_rld_bound(
    pt: *const HolevoModelPoint,
    cost: *const f64,
    out: *mut f64,
) -> HolevoStatus {
    scalar_bound(pt, cost, out, holevo::bounds::rld_bound)
}

/// Hayashi-Gill-Massar separable-measurement bound (qubit models only).
///
/// # Safety
/// `cost` must hold p*p doubles (row-major) for p parameters.
#[no_mangle]
pub unsafe extern "C" fn holevo_hgm_bound(
    pt: *const HolevoModelPoint,
    cost: *const f64,
    out: *mut f64,
) -> HolevoStatus {
    scalar_bound(pt, cost, out, |pt, c| {
        holevo::bounds::hgm_bound(&holevo::bounds::sld_set(pt)?, c)
    })
}

/// Holevo Cramer-Rao bound by semidefinite programming. `gap_tol <= 0`
/// selects the default solver tolerance.
///
/// # Safety
/// `cost` must hold p*p doubles (row-major) for p parameters.
#[no_mangle]
pub unsafe extern "C" fn holevo_hcr_bound(
    pt: *const HolevoModelPoint,
    cost: *const f64,
    gap_tol: f64,
    out: *mut f64,
) -> HolevoStatus {
    scalar_bound(pt, cost, out, |pt, c| {
        let mut options = holevo::sdp::SdpOptions::default();
        if gap_tol > 0.0 {
            options.gap_tol = gap_tol;
        }
        Ok(holevo::hcr::hcr_bound_with(pt, c, &options)?.value)
    })
}

/// Holevo bound of a Gaussian shift model with encoding `a` (r x p,
/// row-major, r = 2*q_modes + c_vars), covariance `v` (r x r), and cost
/// `cost` (p x p).
///
/// # Safety
/// The arrays must have the stated shapes.
#[no_mangle]
pub unsafe extern "C" fn holevo_gaussian_hcr(
    q_modes: usize,
    c_vars: usize,
    params: usize,
    a: *const f64,
    v: *const f64,
    cost: *const f64,
    out: *mut f64,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    let r = 2 * q_modes + c_vars;
    let (a, v, cost) = match (
        slice_arg(a, r * params),
        slice_arg(v, r * r),
        slice_arg(cost, params * params),
    ) {
        (Some(a), Some(v), Some(c)) => (a, v, c),
        _ => return null_error("a, v, and cost"),
    };
    guarded(|| {
        let g = holevo::gaussian::GaussianShiftModel::new(
            q_modes,
            c_vars,
            rmatrix_from_row_major(r, params, a),
            rmatrix_from_row_major(r, r, v),
        )?;
        let c = CostMatrix::new(rmatrix_from_row_major(params, params, cost))?;
        *out = holevo::gaussian::gaussian_hcr(&g, &c)?.0;
        Ok(())
    })
}

/// Asymptotic Bures-weighted limit cost for an i.i.d. qudit spectrum
/// (strictly decreasing, positive, summing to 1).
///
/// # Safety
/// `spectrum` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn holevo_lam_bures(
    spectrum: *const f64,
    d: usize,
    out: *mut f64,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    let mu = match slice_arg(spectrum, d) {
        Some(m) => m,
        None => return null_error("spectrum"),
    };
    guarded(|| {
        *out = holevo::qlan::lam_bures(mu)?;
        Ok(())
    })
}

/// Asymptotic Frobenius-weighted limit cost; see `holevo_lam_bures`.
///
/// # Safety
/// `spectrum` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn holevo_lam_frobenius(
    spectrum: *const f64,
    d: usize,
    out: *mut f64,
) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    let mu = match slice_arg(spectrum, d) {
        Some(m) => m,
        None => return null_error("spectrum"),
    };
    guarded(|| {
        *out = holevo::qlan::lam_frobenius(mu)?;
        Ok(())
    })
}

/// Exact optimal Bayesian fidelity cost for n copies of a uniformly
/// distributed pure qubit: 4 / (n + 2).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn holevo_covariant_pure_cost(n: usize, out: *mut f64) -> HolevoStatus {
    if out.is_null() {
        return null_error("out");
    }
    guarded(|| {
        *out = holevo::bayes::covariant_pure_qubit_cost(n)?;
        Ok(())
    })
}

/// Seed-deterministic Monte-Carlo run of the collective (r, theta)
/// protocol on n qubit copies; writes the n-scaled mean cost and its
/// standard error.
///
/// # Safety
/// `out_cost` and `out_stderr` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn holevo_collective_run(
    n: usize,
    r: f64,
    theta: f64,
    c: f64,
    trials: usize,
    seed: u64,
    out_cost: *mut f64,
    out_stderr: *mut f64,
) -> HolevoStatus {
    if out_cost.is_null() || out_stderr.is_null() {
        return null_error("out_cost and out_stderr");
    }
    guarded(|| {
        let summary = holevo::sim::collective_estimation_run(n, r, theta, c, trials, seed)?;
        *out_cost = summary.scaled_cost;
        *out_stderr = summary.scaled_stderr;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn builtin(name: &str, point: Option<&[f64]>) -> *mut HolevoModelPoint {
        let name = CString::new(name).unwrap();
        let mut handle = ptr::null_mut();
        let status = unsafe {
            holevo_model_point_builtin(
                name.as_ptr(),
                point.map_or(ptr::null(), |p| p.as_ptr()),
                point.map_or(0, |p| p.len()),
                &mut handle,
            )
        };
        assert!(matches!(status, HolevoStatus::Ok));
        assert!(!handle.is_null());
        handle
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(holevo_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    #[test]
    fn pure_qubit_bounds_through_ffi() {
        let pt = builtin("pure-qubit", None);
        let cost = [1.0, 0.0, 0.0, 1.0];
        let mut sld = 0.0;
        let mut hgm = 0.0;
        let mut hcr = 0.0;
        unsafe {
            assert!(matches!(
                holevo_sld_bound(pt, cost.as_ptr(), &mut sld),
                HolevoStatus::Ok
            ));
            assert!(matches!(
                holevo_hgm_bound(pt, cost.as_ptr(), &mut hgm),
                HolevoStatus::Ok
            ));
            assert!(matches!(
                holevo_hcr_bound(pt, cost.as_ptr(), 0.0, &mut hcr),
                HolevoStatus::Ok
            ));
            // Pure state: the RLD information does not exist.
            let mut rld = 0.0;
            let status = holevo_rld_bound(pt, cost.as_ptr(), &mut rld);
            assert!(matches!(status, HolevoStatus::InvalidInput));
            assert!(last_error().contains("RLD"), "{}", last_error());
            holevo_model_point_free(pt);
        }
        assert!((sld - 2.0).abs() < 1e-9);
        assert!((hgm - 4.0).abs() < 1e-9);
        assert!((hcr - 4.0).abs() < 1e-6);
    }

    #[test]
    fn explicit_point_matches_builtin() {
        let pt = builtin("qubit-bloch", Some(&[0.0, 0.0, 0.5]));
        unsafe {
            assert_eq!(holevo_model_point_dim(pt), 2);
            assert_eq!(holevo_model_point_params(pt), 3);
        }
        // Same state assembled by hand: rho = diag(0.75, 0.25) with the
        // three Pauli/2 gradients, interleaved row-major.
        let rho = [0.75, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0];
        #[rustfmt::skip]
        let grads = [
            0.0, 0.0, 0.5, 0.0,   0.5, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -0.5,  0.0, 0.5, 0.0, 0.0,
            0.5, 0.0, 0.0, 0.0,   0.0, 0.0, -0.5, 0.0,
        ];
        let mut manual = ptr::null_mut();
        let status = unsafe {
            holevo_model_point_new(2, 3, rho.as_ptr(), grads.as_ptr(), &mut manual)
        };
        assert!(matches!(status, HolevoStatus::Ok));
        let cost = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let mut a = 0.0;
        let mut b = 0.0;
        unsafe {
            holevo_hcr_bound(pt, cost.as_ptr(), 0.0, &mut a);
            holevo_hcr_bound(manual, cost.as_ptr(), 0.0, &mut b);
            holevo_model_point_free(pt);
            holevo_model_point_free(manual);
        }
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        assert!((a - 3.75).abs() < 1e-6, "{a}");
    }

    #[test]
    fn status_codes_and_messages() {
        let mut out = ptr::null_mut();
        let bad = CString::new("no-such-family").unwrap();
        let status = unsafe {
            holevo_model_point_builtin(bad.as_ptr(), ptr::null(), 0, &mut out)
        };
        assert!(matches!(status, HolevoStatus::InvalidInput));
        assert!(last_error().contains("no-such-family"));

        let status = unsafe {
            holevo_model_point_builtin(ptr::null(), ptr::null(), 0, &mut out)
        };
        assert!(matches!(status, HolevoStatus::NullPointer));

        let mut value = 0.0;
        let status = unsafe { holevo_lam_bures(ptr::null(), 2, &mut value) };
        assert!(matches!(status, HolevoStatus::NullPointer));

        // Free of null is a no-op.
        unsafe { holevo_model_point_free(ptr::null_mut()) };
    }

    #[test]
    fn gaussian_qlan_bayes_sim_entry_points() {
        // Vacuum twin of the pure qubit: hcr = 4.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = [s, 0.0, 0.0, s];
        let v = [0.5, 0.0, 0.0, 0.5];
        let cost = [1.0, 0.0, 0.0, 1.0];
        let mut hcr = 0.0;
        let status = unsafe {
            holevo_gaussian_hcr(1, 0, 2, a.as_ptr(), v.as_ptr(), cost.as_ptr(), &mut hcr)
        };
        assert!(matches!(status, HolevoStatus::Ok));
        assert!((hcr - 4.0).abs() < 1e-9, "{hcr}");

        let mu = [0.75, 0.25];
        let mut bures = 0.0;
        unsafe {
            assert!(matches!(
                holevo_lam_bures(mu.as_ptr(), 2, &mut bures),
                HolevoStatus::Ok
            ));
        }
        assert!((bures - 4.0).abs() < 1e-10);

        let mut cost = 0.0;
        unsafe {
            assert!(matches!(
                holevo_covariant_pure_cost(10, &mut cost),
                HolevoStatus::Ok
            ));
        }
        assert!((cost - 4.0 / 12.0).abs() < 1e-12);

        let mut mean = 0.0;
        let mut se = 0.0;
        let mut mean2 = 0.0;
        let mut se2 = 0.0;
        unsafe {
            assert!(matches!(
                holevo_collective_run(2, 0.5, 0.7, 1.0, 2000, 11, &mut mean, &mut se),
                HolevoStatus::Ok
            ));
            assert!(matches!(
                holevo_collective_run(2, 0.5, 0.7, 1.0, 2000, 11, &mut mean2, &mut se2),
                HolevoStatus::Ok
            ));
        }
        assert_eq!(mean, mean2, "seeded runs must agree exactly");
        assert_eq!(se, se2);
        assert!(mean > 0.0 && se > 0.0);
    }
}
