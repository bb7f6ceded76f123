//! C ABI for the `effdim` crate.
//!
//! Every function returns an [`EffdimStatus`] and writes its result through an
//! out-pointer. On failure the message is available from
//! [`effdim_last_error_message`] until the next call on the same thread.
//! Spectra are opaque handles created by `effdim_spectrum_*` constructors and
//! released with [`effdim_spectrum_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use effdim::effdim as ed;
use effdim::rates;
use effdim::spectral::{self, DecayExponent, Spectrum};
use effdim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffdimStatus {
    Ok = 0,
    InvalidParameter = 1,
    DimensionMismatch = 2,
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Opaque eigenvalue spectrum.
pub struct EffdimSpectrum {
    inner: Spectrum,
}

/// Prior parameters. Set `b_is_infinite` to use the exponentially decaying
/// (b = ∞) case, in which `b` is ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EffdimPriorParams {
    pub b: f64,
    pub b_is_infinite: bool,
    pub c: f64,
    pub beta: f64,
    pub alpha: f64,
    pub r: f64,
    pub kappa: f64,
    pub m: f64,
    pub sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EffdimBoundBreakdown {
    pub term_approx: f64,
    pub term_b: f64,
    pub term_a: f64,
    pub term_noise_m: f64,
    pub term_effdim: f64,
    pub total: f64,
    pub c_eta: f64,
    pub sample_size_ok: bool,
    pub lambda_ok: bool,
    pub required_ell: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EffdimEffDim {
    pub value: f64,
    pub truncation_error_bound: f64,
    pub terms_summed: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> EffdimStatus {
    match err {
        Error::InvalidParameter { .. } => EffdimStatus::InvalidParameter,
        Error::DimensionMismatch(_) => EffdimStatus::DimensionMismatch,
        Error::Cell { source, .. } => status_of(source),
        _ => EffdimStatus::Numerical,
    }
}

/// Runs `f`, stores its value in `out`, and converts errors and panics.
fn guard<T>(out: *mut T, f: impl FnOnce() -> effdim::Result<T>) -> EffdimStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    if out.is_null() {
        set_last_error("output pointer is null".to_string());
        return EffdimStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(value)) => {
            // SAFETY: `out` is non-null and the caller guarantees it points to
            // writable storage for a `T`.
            unsafe { ptr::write(out, value) };
            EffdimStatus::Ok
        }
        Ok(Err(err)) => {
            let status = status_of(&err);
            set_last_error(err.to_string());
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            EffdimStatus::Panic
        }
    }
}

fn prior_params(p: &EffdimPriorParams) -> spectral::PriorParams {
    spectral::PriorParams {
        b: if p.b_is_infinite {
            DecayExponent::Infinite
        } else {
            DecayExponent::Finite(p.b)
        },
        c: p.c,
        beta: p.beta,
        alpha: p.alpha,
        r: p.r,
        kappa: p.kappa,
        m: p.m,
        sigma: p.sigma,
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn effdim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates the spectrum `β n^{-b}` for `n = 1..=n_max`, keeping its decay model
/// so effective dimensions include the infinite tail.
#[no_mangle]
pub extern "C" fn effdim_spectrum_polynomial(
    beta: f64,
    b: f64,
    n_max: usize,
    out: *mut *mut EffdimSpectrum,
) -> EffdimStatus {
    guard(out, || {
        let inner = spectral::polynomial_spectrum(beta, b, n_max)?;
        Ok(Box::into_raw(Box::new(EffdimSpectrum { inner })))
    })
}

/// Creates a spectrum from `len` positive nonincreasing eigenvalues.
///
/// # Safety
/// `values` must point to `len` readable `f64`s.
#[no_mangle]
pub unsafe extern "C" fn effdim_spectrum_from_values(
    values: *const f64,
    len: usize,
    out: *mut *mut EffdimSpectrum,
) -> EffdimStatus {
    if values.is_null() {
        set_last_error("values pointer is null".to_string());
        return EffdimStatus::NullPointer;
    }
    // SAFETY: the caller guarantees `values` points to `len` f64s.
    let slice = unsafe { std::slice::from_raw_parts(values, len) };
    guard(out, || {
        let inner = Spectrum::from_eigenvalues(slice.to_vec())?;
        Ok(Box::into_raw(Box::new(EffdimSpectrum { inner })))
    })
}

/// Releases a spectrum. Null is ignored.
///
/// # Safety
/// `spectrum` must be null or a handle returned by this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn effdim_spectrum_free(spectrum: *mut EffdimSpectrum) {
    if !spectrum.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(spectrum) });
    }
}

/// Number of stored eigenvalues.
///
/// # Safety
/// `spectrum` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn effdim_spectrum_len(spectrum: *const EffdimSpectrum, out: *mut usize) -> EffdimStatus {
    // SAFETY: the caller guarantees the handle is live or null.
    let Some(s) = (unsafe { spectrum.as_ref() }) else {
        set_last_error("spectrum handle is null".to_string());
        return EffdimStatus::NullPointer;
    };
    guard(out, || Ok(s.inner.len()))
}

/// Effective dimension `Σ t_n / (t_n + λ)` of a spectrum.
///
/// # Safety
/// `spectrum` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn effdim_spectrum_effective_dimension(
    spectrum: *const EffdimSpectrum,
    lambda: f64,
    tol: f64,
    out: *mut EffdimEffDim,
) -> EffdimStatus {
    // SAFETY: the caller guarantees the handle is live or null.
    let Some(s) = (unsafe { spectrum.as_ref() }) else {
        set_last_error("spectrum handle is null".to_string());
        return EffdimStatus::NullPointer;
    };
    guard(out, || {
        let r = ed::effective_dimension_exact(&s.inner, lambda, tol)?;
        Ok(EffdimEffDim {
            value: r.value,
            truncation_error_bound: r.truncation_error_bound,
            terms_summed: r.terms_summed,
        })
    })
}

/// Effective dimension of the infinite spectrum `β n^{-b}`.
#[no_mangle]
pub extern "C" fn effdim_effective_dimension(
    beta: f64,
    b: f64,
    lambda: f64,
    tol: f64,
    out: *mut EffdimEffDim,
) -> EffdimStatus {
    guard(out, || {
        let model = spectral::DecayModel::new(beta, b)?;
        let r = ed::effective_dimension_model(model, lambda, tol)?;
        Ok(EffdimEffDim {
            value: r.value,
            truncation_error_bound: r.truncation_error_bound,
            terms_summed: r.terms_summed,
        })
    })
}

/// `Q = β^{1/b} (π/b) / sin(π/b)`, or `β` when `b_is_infinite`.
#[no_mangle]
pub extern "C" fn effdim_q_constant(beta: f64, b: f64, b_is_infinite: bool, out: *mut f64) -> EffdimStatus {
    guard(out, || {
        let b = if b_is_infinite {
            DecayExponent::Infinite
        } else {
            DecayExponent::Finite(b)
        };
        spectral::q_constant(beta, b)
    })
}

/// `Q λ^{-1/b}`.
#[no_mangle]
pub extern "C" fn effdim_corrected_bound(beta: f64, b: f64, lambda: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || ed::corrected_bound(beta, b, lambda))
}

/// `β b/(b−1) λ^{-1/b}`, which is not an upper bound for every β.
#[no_mangle]
pub extern "C" fn effdim_claimed_bound(beta: f64, b: f64, lambda: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || ed::claimed_bound(beta, b, lambda))
}

/// `∫_0^∞ dτ / (β + τ^b)`.
#[no_mangle]
pub extern "C" fn effdim_integral(beta: f64, b: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || ed::integral_value(beta, b))
}

/// `∫_0^∞ dτ / (β + τ^b) − b/(b−1)`.
#[no_mangle]
pub extern "C" fn effdim_wrong_inequality_gap(beta: f64, b: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || ed::wrong_inequality_gap(beta, b))
}

/// β below which the gap is positive, in closed form.
#[no_mangle]
pub extern "C" fn effdim_counterexample_threshold(b: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || ed::counterexample_threshold(b))
}

/// `96 ln²(6/η)`.
#[no_mangle]
pub extern "C" fn effdim_c_eta(eta: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || rates::c_eta(eta))
}

/// Five-term excess-risk bound with its validity flags.
///
/// # Safety
/// `params` must point to a readable `EffdimPriorParams`.
#[no_mangle]
pub unsafe extern "C" fn effdim_risk_bound(
    params: *const EffdimPriorParams,
    lambda: f64,
    ell: f64,
    eta: f64,
    out: *mut EffdimBoundBreakdown,
) -> EffdimStatus {
    // SAFETY: the caller guarantees `params` is valid or null.
    let Some(p) = (unsafe { params.as_ref() }) else {
        set_last_error("params pointer is null".to_string());
        return EffdimStatus::NullPointer;
    };
    guard(out, || {
        let r = rates::risk_bound(&prior_params(p), lambda, ell, eta)?;
        Ok(EffdimBoundBreakdown {
            term_approx: r.term_approx,
            term_b: r.term_b,
            term_a: r.term_a,
            term_noise_m: r.term_noise_m,
            term_effdim: r.term_effdim,
            total: r.total,
            c_eta: r.c_eta,
            sample_size_ok: r.sample_size_ok,
            lambda_ok: r.lambda_ok,
            required_ell: r.required_ell,
        })
    })
}

/// Regularization schedule `λ_ℓ`.
#[no_mangle]
pub extern "C" fn effdim_lambda_schedule(b: f64, c: f64, ell: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || rates::lambda_schedule(b, c, ell))
}

/// Smallest sample size `ℓ_η` from which the schedule meets the sample-size
/// condition.
///
/// # Safety
/// `params` must point to a readable `EffdimPriorParams`.
#[no_mangle]
pub unsafe extern "C" fn effdim_min_sample_size(
    params: *const EffdimPriorParams,
    eta: f64,
    out: *mut f64,
) -> EffdimStatus {
    // SAFETY: the caller guarantees `params` is valid or null.
    let Some(p) = (unsafe { params.as_ref() }) else {
        set_last_error("params pointer is null".to_string());
        return EffdimStatus::NullPointer;
    };
    guard(out, || rates::min_sample_size(&prior_params(p), eta))
}

/// `bc / (bc + 1)`.
#[no_mangle]
pub extern "C" fn effdim_rate_exponent(b: f64, c: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || rates::rate_exponent(b, c))
}

/// `6 exp(−√(τ / (192 D)))`.
#[no_mangle]
pub extern "C" fn effdim_eta_tau(tau: f64, d: f64, out: *mut f64) -> EffdimStatus {
    guard(out, || rates::eta_tau(tau, d))
}
