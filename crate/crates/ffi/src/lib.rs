//! C ABI for the hardedge library.
//!
//! Every function returns an [`HeStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`he_last_error`]. Objects are opaque handles released by their `_free`
//! function. Panics never cross the boundary.

use hardedge::fredholm::{laguerre_det, limit_det, SpikedKernelParams, DEFAULT_GL_NODES};
use hardedge::matrix_models::{build_one_spike, smallest_eigs_one_spike};
use hardedge::mc::par_map;
use hardedge::pde::{solve_fk, PdeGrid, PdeSolution};
use hardedge::riccati::{estimate_f1, CountMode};
use hardedge::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeStatus {
    Ok = 0,
    /// A parameter is outside the domain of the operation.
    Domain = 1,
    /// A solver missed its accuracy or sanity checks.
    Solver = 2,
    /// Internal invariant failure.
    Internal = 3,
    /// File or serialization failure.
    Io = 4,
    /// A required pointer argument was null.
    NullPointer = 5,
    /// A Rust panic was caught.
    Panic = 6,
}

/// Counting convention of the Riccati estimator.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeCountMode {
    Zeros = 0,
    Explosions = 1,
}

/// Solved PDE chain `F_0..F_k`.
pub struct HePde {
    chain: Vec<PdeSolution>,
}

/// A vector of samples.
pub struct HeSamples {
    values: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HeStatus {
    match e {
        Error::Domain(_) => HeStatus::Domain,
        Error::Solver(_) => HeStatus::Solver,
        Error::Internal(_) => HeStatus::Internal,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => HeStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> HeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HeStatus::Ok,
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("panic inside hardedge".into());
            HeStatus::Panic
        }
    }
}

macro_rules! check_ptr {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument".into());
            return HeStatus::NullPointer;
        }
    };
}

/// Last error message of this thread, or null if none. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn he_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn he_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Riccati Monte Carlo estimate of `F_k(μ, c)` for rank one; `c` may be
/// `INFINITY`.
///
/// # Safety
/// `estimate` and `se` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn he_riccati_f1(
    beta: f64,
    a: f64,
    k: usize,
    mu: f64,
    c: f64,
    n_paths: usize,
    mode: HeCountMode,
    seed: u64,
    estimate: *mut f64,
    se: *mut f64,
) -> HeStatus {
    check_ptr!(estimate, se);
    let mode = match mode {
        HeCountMode::Zeros => CountMode::Zeros,
        HeCountMode::Explosions => CountMode::Explosions,
    };
    guard(|| {
        let e = estimate_f1(beta, a, k, mu, c, n_paths, mode, seed)?;
        *estimate = e.estimate;
        *se = e.se;
        Ok(())
    })
}

/// Limiting β = 2 Fredholm determinant `det(I − K)` on `[0, t]` for spikes
/// `c[0..r]`.
///
/// # Safety
/// `c` must point to `r` readable values; `det` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn he_fredholm_limit_det(t: f64, a: u32, c: *const f64, r: usize, det: *mut f64) -> HeStatus {
    check_ptr!(c, det);
    guard(|| {
        let cs = std::slice::from_raw_parts(c, r);
        *det = limit_det(t, &SpikedKernelParams::new(a, cs)?, DEFAULT_GL_NODES)?.det;
        Ok(())
    })
}

/// `P(λ_min > t)` for the complex `r × (r + a)` Wishart matrix.
///
/// # Safety
/// `det` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn he_laguerre_det(t: f64, r: usize, a: u32, det: *mut f64) -> HeStatus {
    check_ptr!(det);
    guard(|| {
        *det = laguerre_det(t, r, a)?.det;
        Ok(())
    })
}

/// Draw `count` samples of `n λ_min` from the one-spike model with
/// `σ = c/n` (`c = INFINITY` gives `σ = 1`).
///
/// # Safety
/// `out` must be valid for writes; the handle is released by
/// [`he_samples_free`].
#[no_mangle]
pub unsafe extern "C" fn he_finite_n_samples(
    n: usize,
    a: f64,
    beta: f64,
    c: f64,
    count: usize,
    seed: u64,
    out: *mut *mut HeSamples,
) -> HeStatus {
    check_ptr!(out);
    guard(|| {
        let sigma = if c.is_infinite() { 1.0 } else { c / n as f64 };
        let values =
            par_map(count, seed, |_, rng| Ok(smallest_eigs_one_spike(&build_one_spike(n, a, beta, sigma, rng)?, 1)?.eigenvalues[0]))
                .into_iter()
                .collect::<Result<Vec<f64>, Error>>()?;
        *out = Box::into_raw(Box::new(HeSamples { values }));
        Ok(())
    })
}

/// Number of samples held by the handle.
///
/// # Safety
/// `s` must be a live handle; `len` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn he_samples_len(s: *const HeSamples, len: *mut usize) -> HeStatus {
    check_ptr!(s, len);
    *len = (*s).values.len();
    HeStatus::Ok
}

/// Copy up to `cap` samples into `buf`; `written` receives the count.
///
/// # Safety
/// `s` must be a live handle, `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn he_samples_copy(s: *const HeSamples, buf: *mut f64, cap: usize, written: *mut usize) -> HeStatus {
    check_ptr!(s, buf, written);
    let v = &(*s).values;
    let m = v.len().min(cap);
    ptr::copy_nonoverlapping(v.as_ptr(), buf, m);
    *written = m;
    HeStatus::Ok
}

/// Release a sample handle. Null is ignored.
///
/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn he_samples_free(s: *mut HeSamples) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Solve the rank-one PDE chain `F_0..F_k` on the default grid with
/// `n_mu` μ-steps and `n_c` c-nodes (0 keeps the default).
///
/// # Safety
/// `out` must be valid for writes; release with [`he_pde_free`].
#[no_mangle]
pub unsafe extern "C" fn he_pde_solve(beta: f64, a: f64, k: usize, n_mu: usize, n_c: usize, out: *mut *mut HePde) -> HeStatus {
    check_ptr!(out);
    guard(|| {
        let d = PdeGrid::default();
        let grid = PdeGrid { n_mu: if n_mu == 0 { d.n_mu } else { n_mu }, n_c: if n_c == 0 { d.n_c } else { n_c }, ..d };
        let chain = solve_fk(k, beta, a, &grid)?;
        *out = Box::into_raw(Box::new(HePde { chain }));
        Ok(())
    })
}

/// Interpolated `F_j(μ, c)` for `j ≤ k` of the solved chain.
///
/// # Safety
/// `p` must be a live handle; `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn he_pde_probe(p: *const HePde, j: usize, mu: f64, c: f64, value: *mut f64) -> HeStatus {
    check_ptr!(p, value);
    guard(|| {
        let chain = &(*p).chain;
        let s = chain.get(j).ok_or_else(|| Error::Domain(format!("no F_{j} in this chain")))?;
        *value = s.probe(mu, c)?;
        Ok(())
    })
}

/// Release a PDE handle. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn he_pde_free(p: *mut HePde) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}
