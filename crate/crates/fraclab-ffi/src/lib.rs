//! C ABI over the core numerics.
//!
//! Every fallible call returns a [`FraclabStatus`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be read back with
//! [`fraclab_last_error_message`]. Handles are opaque and must be released with the
//! matching `_free` function.

use fraclab::bubbles::{family_q, Ambient, BubbleFamily};
use fraclab::fraclap::check_bubble_pde;
use fraclab::quadrature::{FunctionRepr, QuadratureSpec};
use fraclab::specfun::{gamma, hyp2f1_abcz};
use fraclab::stability_lab::{deficit, spectral_gap_radial};
use fraclab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FraclabStatus {
    Ok = 0,
    Domain = 1,
    Pole = 2,
    Overflow = 3,
    NonConvergence = 4,
    Precondition = 5,
    IllConditioned = 6,
    RankDeficient = 7,
    Config = 8,
    Io = 9,
    NullPointer = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Opaque handle to an ambient (n, s).
pub struct FraclabAmbient(Ambient);

/// Opaque handle to a bubble family.
pub struct FraclabFamily(BubbleFamily);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FraclabStatus {
    match e {
        Error::Domain(_) => FraclabStatus::Domain,
        Error::Pole(_) => FraclabStatus::Pole,
        Error::Overflow(_) => FraclabStatus::Overflow,
        Error::NonConvergence(_) => FraclabStatus::NonConvergence,
        Error::Precondition(_) => FraclabStatus::Precondition,
        Error::IllConditioned(_) => FraclabStatus::IllConditioned,
        Error::RankDeficient(_) => FraclabStatus::RankDeficient,
        Error::Config(_) => FraclabStatus::Config,
        Error::Io(_) => FraclabStatus::Io,
    }
}

struct Fail(FraclabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FraclabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any error or panic, and maps the outcome to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FraclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FraclabStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside fraclab".into());
            FraclabStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated) and
/// returns the full message length in bytes, excluding the terminator. Pass a null
/// `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fraclab_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Γ(x).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_gamma(x: f64, out: *mut f64) -> FraclabStatus {
    guard(|| write(out, gamma(x)?))
}

/// Gauss hypergeometric ₂F₁(a, b; c; z) for real arguments.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_hyp2f1(a: f64, b: f64, c: f64, z: f64, out: *mut f64) -> FraclabStatus {
    guard(|| write(out, hyp2f1_abcz(a, b, c, z)?))
}

/// Creates an ambient handle for dimension `n` and order `s` (requires n > 2s).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_ambient_new(n: u32, s: f64, out: *mut *mut FraclabAmbient) -> FraclabStatus {
    guard(|| {
        let amb = Ambient::new(n, s)?;
        write(out, Box::into_raw(Box::new(FraclabAmbient(amb))))
    })
}

/// # Safety
/// `amb` must be null or a handle from [`fraclab_ambient_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fraclab_ambient_free(amb: *mut FraclabAmbient) {
    if !amb.is_null() {
        drop(Box::from_raw(amb));
    }
}

/// Critical exponent p = (n+2s)/(n-2s).
///
/// # Safety
/// `amb` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_ambient_p(amb: *const FraclabAmbient, out: *mut f64) -> FraclabStatus {
    guard(|| write(out, amb.as_ref().ok_or_else(|| null("ambient"))?.0.p()))
}

/// Bubble energy ‖U‖² in Ḣ^s.
///
/// # Safety
/// `amb` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_ambient_energy(amb: *const FraclabAmbient, out: *mut f64) -> FraclabStatus {
    guard(|| write(out, amb.as_ref().ok_or_else(|| null("ambient"))?.0.energy()))
}

/// Value of the bubble U[0, λ] at radius r.
///
/// # Safety
/// `amb` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_bubble_radial(amb: *const FraclabAmbient, lambda: f64, r: f64, out: *mut f64) -> FraclabStatus {
    guard(|| {
        let amb = &amb.as_ref().ok_or_else(|| null("ambient"))?.0;
        if !(lambda > 0.0 && r >= 0.0) {
            return Err(Fail(
                FraclabStatus::Domain,
                format!("need lambda > 0 and r >= 0 (got {lambda}, {r})"),
            ));
        }
        write(out, amb.bubble_radial(lambda, r))
    })
}

/// Maximum relative residual of (-Δ)^s U = U^p over the radii in `grid`.
///
/// # Safety
/// `grid` must point to `len` doubles, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_check_bubble_pde(n: u32, s: f64, grid: *const f64, len: usize, out: *mut f64) -> FraclabStatus {
    guard(|| {
        let g = slice(grid, len, "grid")?;
        write(out, check_bubble_pde(n, s, g)?)
    })
}

/// Radial Galerkin eigenvalues of the linearised operator, ascending. Writes
/// `basis_size` values into `out`, which must hold at least that many.
///
/// # Safety
/// `amb` must be a live handle and `out` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fraclab_spectral_radial(
    amb: *const FraclabAmbient,
    basis_size: usize,
    out: *mut f64,
    cap: usize,
) -> FraclabStatus {
    guard(|| {
        let amb = &amb.as_ref().ok_or_else(|| null("ambient"))?.0;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if cap < basis_size {
            return Err(Fail(
                FraclabStatus::BufferTooSmall,
                format!("buffer holds {cap} values, need {basis_size}"),
            ));
        }
        let ev = spectral_gap_radial(amb, basis_size, &QuadratureSpec::default())?;
        std::ptr::copy_nonoverlapping(ev.as_ptr(), out, ev.len());
        Ok(())
    })
}

/// Parses a family from JSON `{"n":..,"s":..,"bubbles":[{"z":[..],"lambda":..}],"alphas":[..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_from_json(json: *const c_char, out: *mut *mut FraclabFamily) -> FraclabStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(FraclabStatus::InvalidUtf8, e.to_string()))?;
        let fam = BubbleFamily::from_json(text)?;
        write(out, Box::into_raw(Box::new(FraclabFamily(fam))))
    })
}

/// # Safety
/// `fam` must be null or a handle from [`fraclab_family_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_free(fam: *mut FraclabFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Number of bubbles in the family.
///
/// # Safety
/// `fam` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_len(fam: *const FraclabFamily, out: *mut usize) -> FraclabStatus {
    guard(|| write(out, fam.as_ref().ok_or_else(|| null("family"))?.0.len()))
}

/// σ(x) = Σ α_i U_i(x); `x` has `len` = n coordinates.
///
/// # Safety
/// `fam` must be a live handle, `x` must point to `len` doubles, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_sigma(fam: *const FraclabFamily, x: *const f64, len: usize, out: *mut f64) -> FraclabStatus {
    guard(|| {
        let fam = &fam.as_ref().ok_or_else(|| null("family"))?.0;
        let x = slice(x, len, "x")?;
        if len != fam.ambient.n() as usize {
            return Err(Fail(
                FraclabStatus::Domain,
                format!("point has {len} coordinates, ambient dimension is {}", fam.ambient.n()),
            ));
        }
        write(out, fam.sigma(x))
    })
}

/// Interaction Q = max_{i≠j} q_ij of the family.
///
/// # Safety
/// `fam` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_q(fam: *const FraclabFamily, out: *mut f64) -> FraclabStatus {
    guard(|| write(out, family_q(&fam.as_ref().ok_or_else(|| null("family"))?.0)?))
}

/// Deficit Γ = ‖(-Δ)^s σ - |σ|^{p-1}σ‖ in H^{-s} for σ the family sum.
///
/// # Safety
/// `fam` must be a live handle, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fraclab_family_deficit(fam: *const FraclabFamily, out: *mut f64) -> FraclabStatus {
    guard(|| {
        let fam = &fam.as_ref().ok_or_else(|| null("family"))?.0;
        write(out, deficit(&FunctionRepr::from_family(fam), &QuadratureSpec::default())?)
    })
}
