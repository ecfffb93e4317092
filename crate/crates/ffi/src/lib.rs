//! C ABI over `bergman-lab`.
//!
//! Every function returns a [`BlStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be fetched
//! with [`bl_last_error_message`]. Handles are created by `*_new`, released
//! by the matching `*_free` and are immutable, so a handle may be shared
//! between threads for concurrent queries.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bergman_lab::geometry::{curvature_signature, morse_density, ChartPoint, DerivativeMode, Preset};
use bergman_lab::manifold::{cohomology_space, section_grid, SectionSpace};
use bergman_lab::model::{fock_kernel, model_kernel_origin, ModelWeight};
use bergman_lab::numerics::gaussian_moment;
use bergman_lab::spectral::{galerkin_assemble, SpectralSlice};
use bergman_lab::{Complex64, Error};

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed argument: bad UTF-8, unknown preset, zero length.
    InvalidArgument = 2,
    Domain = 3,
    Capacity = 4,
    RankDeficient = 5,
    Numerical = 6,
    Degenerate = 7,
    SignatureMismatch = 8,
    Invariant = 9,
    /// The caller's buffer is too short; the required length was written.
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&Error> for BlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => BlStatus::Domain,
            Error::Capacity(_) => BlStatus::Capacity,
            Error::RankDeficient { .. } => BlStatus::RankDeficient,
            Error::NumericalDerivative(_) | Error::UnreliableIntegral { .. } | Error::NotHarmonic { .. } => {
                BlStatus::Numerical
            }
            Error::Degenerate { .. } | Error::DegenerateSection(_) => BlStatus::Degenerate,
            Error::SignatureMismatch { .. } => BlStatus::SignatureMismatch,
            Error::Invariant(_) => BlStatus::Invariant,
            Error::Parse { .. } | Error::Validation { .. } | Error::Io(_) => BlStatus::InvalidArgument,
        }
    }
}

/// A point on the projective line: the affine coordinate `z = re + i·im`, or,
/// when `inverted` is set, the point `1/w` with `w = re + i·im` (so `w = 0`
/// is infinity).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlChartPoint {
    pub re: f64,
    pub im: f64,
    pub inverted: bool,
}

impl From<BlChartPoint> for ChartPoint {
    fn from(p: BlChartPoint) -> Self {
        let c = Complex64::new(p.re, p.im);
        if p.inverted {
            ChartPoint::Inverted(c)
        } else {
            ChartPoint::affine1(c)
        }
    }
}

/// Orthonormal basis of `H^q(P¹, L^k)` for a weight preset.
pub struct BlSectionSpace(SectionSpace);

/// Galerkin eigenpairs of the model Laplacian on `(0, q)`-forms.
pub struct BlSpectralSlice(SpectralSlice);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(BlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(BlStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(BlStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(BlStatus::InvalidArgument, msg)
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            BlStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Err(invalid(format!("`{name}` must have at least one entry")));
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn complex_point(z: *const f64, n: usize) -> Result<Vec<Complex64>, Failure> {
    let raw = slice(z, 2 * n, "z")?;
    Ok(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

unsafe fn preset(text: *const c_char) -> Result<Preset, Failure> {
    if text.is_null() {
        return Err(null("preset"));
    }
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|e| invalid(format!("preset is not UTF-8: {e}")))?;
    s.parse::<Preset>().map_err(|e| invalid(e.to_string()))
}

unsafe fn weight(lambda: *const f64, n: usize) -> Result<ModelWeight, Failure> {
    Ok(ModelWeight::new(slice(lambda, n, "lambda")?.to_vec())?)
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `cap`) and returns the full length without the NUL.
#[no_mangle]
pub unsafe extern "C" fn bl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `∫ ∏|zᵢ|^{2aᵢ} e^{-Σλᵢ|zᵢ|²} dV` for positive `λ`.
#[no_mangle]
pub unsafe extern "C" fn bl_gaussian_moment(
    a: *const u32,
    lambda: *const f64,
    n: usize,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let v = gaussian_moment(slice(a, n, "a")?, slice(lambda, n, "lambda")?)?;
        *out(result, "result")? = v;
        Ok(())
    })
}

/// Closed-form model Bergman density at the origin.
#[no_mangle]
pub unsafe extern "C" fn bl_model_kernel_origin(
    lambda: *const f64,
    n: usize,
    q: usize,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let w = weight(lambda, n)?;
        if q > n {
            return Err(invalid(format!("q = {q} exceeds n = {n}")));
        }
        *out(result, "result")? = model_kernel_origin(&w, q);
        Ok(())
    })
}

/// Truncated Fock kernel on the diagonal. `z` holds `n` complex numbers as
/// interleaved `(re, im)` pairs.
#[no_mangle]
pub unsafe extern "C" fn bl_fock_kernel(
    lambda: *const f64,
    n: usize,
    degree: usize,
    z: *const f64,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let w = weight(lambda, n)?;
        let v = fock_kernel(&w, degree, &complex_point(z, n)?)?;
        *out(result, "result")? = v;
        Ok(())
    })
}

/// Morse density of a projective-line preset at a point.
#[no_mangle]
pub unsafe extern "C" fn bl_morse_density(
    preset_name: *const c_char,
    point: BlChartPoint,
    q: usize,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let chart = preset(preset_name)?.chart(DerivativeMode::Analytic)?;
        let sig = curvature_signature(&chart, &point.into(), None)?;
        *out(result, "result")? = morse_density(&sig, q)?;
        Ok(())
    })
}

/// Builds `H^q(P¹, L^k)` for a preset such as `"perturbed(1, 3)"`.
#[no_mangle]
pub unsafe extern "C" fn bl_section_space_new(
    preset_name: *const c_char,
    k: u32,
    q: usize,
    space: *mut *mut BlSectionSpace,
) -> BlStatus {
    guard(|| {
        let slot = out(space, "space")?;
        *slot = ptr::null_mut();
        let p = preset(preset_name)?;
        let chart = p.chart(DerivativeMode::Analytic)?;
        let s = cohomology_space(&chart, k, q, &section_grid(k, chart.degree())?)?;
        *slot = Box::into_raw(Box::new(BlSectionSpace(s)));
        Ok(())
    })
}

/// Releases a section space. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bl_section_space_free(space: *mut BlSectionSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bl_section_space_dimension(
    space: *const BlSectionSpace,
    result: *mut usize,
) -> BlStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(|| null("space"))?;
        *out(result, "result")? = s.0.dimension();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bl_section_space_bergman_at(
    space: *const BlSectionSpace,
    point: BlChartPoint,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(|| null("space"))?;
        *out(result, "result")? = s.0.bergman_at(&point.into())?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bl_section_space_extremal_at(
    space: *const BlSectionSpace,
    point: BlChartPoint,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let s = space.as_ref().ok_or_else(|| null("space"))?;
        *out(result, "result")? = s.0.extremal_at(&point.into())?.s;
        Ok(())
    })
}

/// Assembles the Galerkin slice of the model weight `Σ λᵢ|zᵢ|²` on
/// `(0, q)`-forms with trial degree `degree`.
#[no_mangle]
pub unsafe extern "C" fn bl_spectral_slice_new(
    lambda: *const f64,
    n: usize,
    q: usize,
    degree: usize,
    slice_out: *mut *mut BlSpectralSlice,
) -> BlStatus {
    guard(|| {
        let slot = out(slice_out, "slice")?;
        *slot = ptr::null_mut();
        let s = galerkin_assemble(&weight(lambda, n)?, q, degree)?;
        *slot = Box::into_raw(Box::new(BlSpectralSlice(s)));
        Ok(())
    })
}

/// Releases a spectral slice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bl_spectral_slice_free(slice: *mut BlSpectralSlice) {
    if !slice.is_null() {
        drop(Box::from_raw(slice));
    }
}

/// Writes the ascending eigenvalues into `buf`. `len` receives the count;
/// if it exceeds `cap`, nothing is copied and `BufferTooSmall` is returned.
#[no_mangle]
pub unsafe extern "C" fn bl_spectral_slice_eigenvalues(
    slice: *const BlSpectralSlice,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> BlStatus {
    guard(|| {
        let s = slice.as_ref().ok_or_else(|| null("slice"))?;
        let values = s.0.eigenvalues();
        *out(len, "len")? = values.len();
        if values.len() > cap {
            return Err(Failure(
                BlStatus::BufferTooSmall,
                format!("{} eigenvalues do not fit in {cap}", values.len()),
            ));
        }
        if !values.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        }
        Ok(())
    })
}

/// `B_{≤ν}(z)` from the slice; `z` holds `n` interleaved `(re, im)` pairs.
#[no_mangle]
pub unsafe extern "C" fn bl_spectral_slice_low_energy_bergman(
    slice: *const BlSpectralSlice,
    nu: f64,
    z: *const f64,
    n: usize,
    result: *mut f64,
) -> BlStatus {
    guard(|| {
        let s = slice.as_ref().ok_or_else(|| null("slice"))?;
        let v = s.0.low_energy_bergman(nu, &complex_point(z, n)?)?;
        *out(result, "result")? = v;
        Ok(())
    })
}
