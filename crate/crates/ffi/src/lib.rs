//! C interface to `landmod`.
//!
//! Landscapes and generators are opaque handles created and released through
//! this API. Every function returns an [`LmStatus`]; on failure the message is
//! available from [`lm_last_error_message`] on the same thread. Panics never
//! cross the boundary, they surface as `LM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use landmod::analysis::{critical_heights, spectral_gap};
use landmod::chain::{build_mh_generator, mixing_time, FiniteLandscape, Generator};
use landmod::transform::{acceptance_probability, modified_gap, Family, TransformSpec};
use landmod::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Precondition = 5,
    Structure = 6,
    Numerical = 7,
    Range = 8,
    Io = 9,
    Panic = 10,
}

/// Shape applied above the threshold.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmFamily {
    /// Plain Metropolis-Hastings.
    Zero = 0,
    Linear = 1,
    Quadratic = 2,
    SquareRoot = 3,
}

impl From<LmFamily> for Family {
    fn from(f: LmFamily) -> Self {
        match f {
            LmFamily::Zero => Family::Zero,
            LmFamily::Linear => Family::Linear,
            LmFamily::Quadratic => Family::Quadratic,
            LmFamily::SquareRoot => Family::SquareRoot,
        }
    }
}

/// Transform parameters: shape, threshold `c` and temperature `epsilon`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LmTransform {
    pub family: LmFamily,
    pub c: f64,
    pub epsilon: f64,
}

impl LmTransform {
    fn spec(&self) -> Result<TransformSpec, Error> {
        TransformSpec::new(self.family.into(), self.c, self.epsilon)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LmCriticalHeights {
    pub h0: f64,
    pub hf: f64,
    pub c_star: f64,
}

/// Opaque landscape handle.
pub struct LmLandscape(FiniteLandscape);

/// Opaque generator handle.
pub struct LmGenerator(Generator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> LmStatus {
    match e {
        Error::Config(_) | Error::Parse { .. } => LmStatus::Config,
        Error::Argument(_) => LmStatus::InvalidArgument,
        Error::Domain(_) => LmStatus::Domain,
        Error::Precondition(_) => LmStatus::Precondition,
        Error::Structure(_) => LmStatus::Structure,
        Error::Numerical { .. } => LmStatus::Numerical,
        Error::Range(_) => LmStatus::Range,
        Error::Io(_) => LmStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LmStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LmStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            LmStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers obtained from this API or valid for reads.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass pointers valid for writes of one `T`.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the contract, valid for `len` reads.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Landscape on `n` states with undirected edges `(from[k], to[k])` of proposal
/// rate `rate[k]` from `from[k]`; the reverse rate follows from detailed balance.
/// `mu` may be NULL for the uniform law.
///
/// # Safety
/// `energies` (and `mu` when non-NULL) must hold `n` values, the edge arrays
/// `n_edges` values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lm_landscape_new(
    n: usize,
    energies: *const f64,
    mu: *const f64,
    n_edges: usize,
    from: *const usize,
    to: *const usize,
    rate: *const f64,
    out_landscape: *mut *mut LmLandscape,
) -> LmStatus {
    guard(|| {
        let slot = out(out_landscape, "out_landscape")?;
        *slot = ptr::null_mut();
        let energies = slice(energies, n, "energies")?.to_vec();
        let mu = if mu.is_null() {
            vec![1.0 / n.max(1) as f64; n]
        } else {
            slice(mu, n, "mu")?.to_vec()
        };
        let (from, to, rate) = (
            slice(from, n_edges, "from")?,
            slice(to, n_edges, "to")?,
            slice(rate, n_edges, "rate")?,
        );
        let pairs: Vec<_> = (0..n_edges).map(|k| (from[k], to[k], rate[k])).collect();
        let land = FiniteLandscape::from_pairs(energies, mu, &pairs)?;
        *slot = Box::into_raw(Box::new(LmLandscape(land)));
        Ok(())
    })
}

/// Path `0 - 1 - ... - n-1` with unit rates and uniform law.
///
/// # Safety
/// `energies` must hold `n` values and `out_landscape` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lm_landscape_path(
    n: usize,
    energies: *const f64,
    out_landscape: *mut *mut LmLandscape,
) -> LmStatus {
    guard(|| {
        let slot = out(out_landscape, "out_landscape")?;
        *slot = ptr::null_mut();
        let land = FiniteLandscape::path(slice(energies, n, "energies")?.to_vec())?;
        *slot = Box::into_raw(Box::new(LmLandscape(land)));
        Ok(())
    })
}

/// Reads a landscape file (`n`, then `index energy mu` lines, then `x y rate` edges).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_landscape` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_landscape_load(path: *const c_char, out_landscape: *mut *mut LmLandscape) -> LmStatus {
    guard(|| {
        let slot = out(out_landscape, "out_landscape")?;
        *slot = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let path = unsafe { CStr::from_ptr(path) };
        let path = path
            .to_str()
            .map_err(|_| Error::Argument("path is not valid UTF-8".into()))?;
        let land = FiniteLandscape::load(path)?;
        *slot = Box::into_raw(Box::new(LmLandscape(land)));
        Ok(())
    })
}

/// Releases a landscape. NULL is ignored.
///
/// # Safety
/// `landscape` must come from this API and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lm_landscape_free(landscape: *mut LmLandscape) {
    if !landscape.is_null() {
        // SAFETY: created by Box::into_raw in this crate and released once.
        drop(unsafe { Box::from_raw(landscape) });
    }
}

/// # Safety
/// `landscape` must be a live handle and `out_n` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_landscape_size(landscape: *const LmLandscape, out_n: *mut usize) -> LmStatus {
    guard(|| {
        *out(out_n, "out_n")? = non_null(landscape, "landscape")?.0.n();
        Ok(())
    })
}

/// Modified energy gap `H^f(y) - H^f(x)` between levels `hx` and `hy`, in units
/// where the acceptance probability is `exp(-max(gap, 0))`.
///
/// # Safety
/// `out_gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lm_modified_gap(transform: LmTransform, hx: f64, hy: f64, out_gap: *mut f64) -> LmStatus {
    guard(|| {
        let slot = out(out_gap, "out_gap")?;
        *slot = modified_gap(&transform.spec()?, hx, hy)?.value();
        Ok(())
    })
}

/// Metropolis acceptance probability of a move from level `hx` to `hy`.
///
/// # Safety
/// `out_probability` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lm_acceptance_probability(
    transform: LmTransform,
    hx: f64,
    hy: f64,
    out_probability: *mut f64,
) -> LmStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        *slot = acceptance_probability(&transform.spec()?, hx, hy)?;
        Ok(())
    })
}

/// Classical `H0`, modified `Hf` and clipped `c*` critical heights.
///
/// # Safety
/// `landscape` must be a live handle and `out_heights` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_critical_heights(
    landscape: *const LmLandscape,
    transform: LmTransform,
    out_heights: *mut LmCriticalHeights,
) -> LmStatus {
    guard(|| {
        let slot = out(out_heights, "out_heights")?;
        let land = &non_null(landscape, "landscape")?.0;
        let h = critical_heights(land, &transform.spec()?)?;
        *slot = LmCriticalHeights {
            h0: h.h0,
            hf: h.hf,
            c_star: h.c_star,
        };
        Ok(())
    })
}

/// Metropolis-Hastings generator of the modified landscape.
///
/// # Safety
/// `landscape` must be a live handle and `out_generator` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_generator_build(
    landscape: *const LmLandscape,
    transform: LmTransform,
    out_generator: *mut *mut LmGenerator,
) -> LmStatus {
    guard(|| {
        let slot = out(out_generator, "out_generator")?;
        *slot = ptr::null_mut();
        let land = &non_null(landscape, "landscape")?.0;
        let gen = build_mh_generator(land, &transform.spec()?)?;
        *slot = Box::into_raw(Box::new(LmGenerator(gen)));
        Ok(())
    })
}

/// Releases a generator. NULL is ignored.
///
/// # Safety
/// `generator` must come from this API and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lm_generator_free(generator: *mut LmGenerator) {
    if !generator.is_null() {
        // SAFETY: created by Box::into_raw in this crate and released once.
        drop(unsafe { Box::from_raw(generator) });
    }
}

/// # Safety
/// `generator` must be a live handle and `out_n` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_generator_size(generator: *const LmGenerator, out_n: *mut usize) -> LmStatus {
    guard(|| {
        *out(out_n, "out_n")? = non_null(generator, "generator")?.0.n();
        Ok(())
    })
}

/// Copies the stationary law into `out_pi`, which must hold `len` values with
/// `len` equal to the number of states.
///
/// # Safety
/// `generator` must be a live handle and `out_pi` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn lm_generator_stationary(generator: *const LmGenerator, out_pi: *mut f64, len: usize) -> LmStatus {
    guard(|| {
        let pi = non_null(generator, "generator")?.0.stationary();
        if len != pi.len() {
            return Err(Error::Argument(format!("buffer holds {len} values for {} states", pi.len())).into());
        }
        if out_pi.is_null() {
            return Err(Failure::Null("out_pi"));
        }
        // SAFETY: non-null and writable for `len` values per the contract.
        let dst = unsafe { std::slice::from_raw_parts_mut(out_pi, len) };
        dst.copy_from_slice(pi);
        Ok(())
    })
}

/// Smallest non-zero eigenvalue of `-M`.
///
/// # Safety
/// `generator` must be a live handle and `out_gap` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_spectral_gap(generator: *const LmGenerator, out_gap: *mut f64) -> LmStatus {
    guard(|| {
        let slot = out(out_gap, "out_gap")?;
        *slot = spectral_gap(&non_null(generator, "generator")?.0)?;
        Ok(())
    })
}

/// First time the worst-case total-variation distance drops below `threshold`.
///
/// # Safety
/// `generator` must be a live handle and `out_time` writable.
#[no_mangle]
pub unsafe extern "C" fn lm_mixing_time(generator: *const LmGenerator, threshold: f64, out_time: *mut f64) -> LmStatus {
    guard(|| {
        let slot = out(out_time, "out_time")?;
        *slot = mixing_time(&non_null(generator, "generator")?.0, threshold)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_message_is_cleared_on_success() {
        let mut g = 0.0;
        let bad = LmTransform {
            family: LmFamily::Linear,
            c: 0.0,
            epsilon: -1.0,
        };
        // SAFETY: `g` is a valid out-pointer.
        assert_ne!(unsafe { lm_modified_gap(bad, 0.0, 1.0, &mut g) }, LmStatus::Ok);
        assert!(!lm_last_error_message().is_null());
        let good = LmTransform { epsilon: 1.0, ..bad };
        // SAFETY: as above.
        assert_eq!(unsafe { lm_modified_gap(good, 0.0, 1.0, &mut g) }, LmStatus::Ok);
        assert!(lm_last_error_message().is_null());
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, LmStatus::Panic);
        // SAFETY: the message pointer is valid until the next call on this thread.
        let msg = unsafe { CStr::from_ptr(lm_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn version_is_nul_terminated() {
        // SAFETY: static string.
        let v = unsafe { CStr::from_ptr(lm_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
