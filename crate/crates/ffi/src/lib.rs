//! C ABI over `riemannian_prox`.
//!
//! Objects are opaque handles created by `rp_*_new` / `rp_*` constructors
//! and released with the matching `rp_*_free`. Every function returns an
//! [`RpStatus`]; on failure, `rp_last_error` copies a message for the
//! calling thread. Coordinate arrays are ambient coordinates of length
//! `rp_manifold_ambient_dim`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use riemannian_prox::calculus::ScalarField;
use riemannian_prox::envelope::{moreau_envelope, EnvelopeOptions};
use riemannian_prox::harness::{run_scenario, RunConfig, RunRecord};
use riemannian_prox::solvers::{find_circumcenter, CircumcenterClass, CircumcenterOptions, SolveReport};
use riemannian_prox::{Error, Manifold, Point, Vector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    OutsideDomain = 3,
    AmbiguousLog = 4,
    SearchFailure = 5,
    UnboundedBelow = 6,
    Refuted = 7,
    PreconditionViolated = 8,
    BudgetExhausted = 9,
    Inconclusive = 10,
    UnknownScenario = 11,
    BufferTooSmall = 12,
    Internal = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpManifoldKind {
    Euclidean = 0,
    Sphere2 = 1,
    Cylinder = 2,
    Paraboloid = 3,
    CircleLine = 4,
    TruncatedL2 = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpCircumcenterClass {
    Circumcenter = 0,
    Aligned = 1,
    NoCircumcenter = 2,
}

/// Opaque manifold handle.
pub struct RpManifold(Manifold);

/// Opaque solver report handle.
pub struct RpReport(SolveReport);

/// Opaque scenario run record handle.
pub struct RpRunRecord(RunRecord);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RpStatus {
    match e {
        Error::InvalidInput(_) | Error::UnknownKey(_) => RpStatus::InvalidInput,
        Error::OutsideDomain => RpStatus::OutsideDomain,
        Error::AmbiguousLog { .. } => RpStatus::AmbiguousLog,
        Error::SearchFailure(_) | Error::IntegrationFailure { .. } | Error::DifferentiabilityProbe(_) => {
            RpStatus::SearchFailure
        }
        Error::UnboundedBelow(_) => RpStatus::UnboundedBelow,
        Error::HypothesisRefuted(_) | Error::PremiseViolation(_) => RpStatus::Refuted,
        Error::PreconditionViolated { .. } => RpStatus::PreconditionViolated,
        Error::BudgetExhausted(_) => RpStatus::BudgetExhausted,
        Error::ClassificationInconclusive(_) => RpStatus::Inconclusive,
        Error::UnknownScenario(_) => RpStatus::UnknownScenario,
        Error::Io(_) => RpStatus::Internal,
    }
}

enum Fail {
    Status(RpStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Status(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RpStatus::Internal
        }
    }
}

fn null() -> Fail {
    Fail::Status(RpStatus::NullPointer, "null pointer argument".into())
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn point_in(m: &Manifold, p: *const f64, len: usize) -> Result<Point, Fail> {
    if p.is_null() {
        return Err(null());
    }
    if len != m.ambient_dim() {
        return Err(Fail::Status(
            RpStatus::InvalidInput,
            format!("expected {} coordinates, got {len}", m.ambient_dim()),
        ));
    }
    Ok(Point::from_slice(std::slice::from_raw_parts(p, len)))
}

unsafe fn write_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    if len < src.len() {
        return Err(Fail::Status(RpStatus::BufferTooSmall, format!("need {} slots, got {len}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a manifold. `dim` is used by the Euclidean and truncated ℓ²
/// kinds and ignored otherwise.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_manifold_new(kind: RpManifoldKind, dim: usize, out: *mut *mut RpManifold) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let m = match kind {
            RpManifoldKind::Euclidean | RpManifoldKind::TruncatedL2 if dim == 0 => {
                return Err(Fail::Status(RpStatus::InvalidInput, "dimension must be positive".into()))
            }
            RpManifoldKind::Euclidean => Manifold::euclidean(dim),
            RpManifoldKind::TruncatedL2 => Manifold::TruncatedL2 { n: dim },
            RpManifoldKind::Sphere2 => Manifold::Sphere2,
            RpManifoldKind::Cylinder => Manifold::Cylinder,
            RpManifoldKind::Paraboloid => Manifold::Paraboloid,
            RpManifoldKind::CircleLine => Manifold::ProductCircleLine,
        };
        *out = Box::into_raw(Box::new(RpManifold(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from `rp_manifold_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_manifold_free(m: *mut RpManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_manifold_ambient_dim(m: *const RpManifold) -> usize {
    m.as_ref().map(|m| m.0.ambient_dim()).unwrap_or(0)
}

/// Geodesic distance between two points.
///
/// # Safety
/// `p` and `q` must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_distance(
    m: *const RpManifold,
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> RpStatus {
    guard(|| {
        let m = &handle(m)?.0;
        let (p, q) = (point_in(m, p, len)?, point_in(m, q, len)?);
        let d = m.distance(&p, &q)?;
        write_out(&[d], out, 1)
    })
}

/// exp_p(v), written to `out` (length `len`).
///
/// # Safety
/// `p`, `v` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_exp(m: *const RpManifold, p: *const f64, v: *const f64, len: usize, out: *mut f64) -> RpStatus {
    guard(|| {
        let m = &handle(m)?.0;
        let p = point_in(m, p, len)?;
        if v.is_null() {
            return Err(null());
        }
        let v = Vector::from_column_slice(std::slice::from_raw_parts(v, len));
        let q = m.exp(&p, &v)?;
        write_out(q.as_slice(), out, len)
    })
}

/// log_p(q) as an ambient tangent vector.
///
/// # Safety
/// `p`, `q` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_log(m: *const RpManifold, p: *const f64, q: *const f64, len: usize, out: *mut f64) -> RpStatus {
    guard(|| {
        let m = &handle(m)?.0;
        let (p, q) = (point_in(m, p, len)?, point_in(m, q, len)?);
        let v = m.log(&p, &q)?;
        write_out(v.components.as_slice(), out, len)
    })
}

/// Moreau envelope of |x| on the real line: value and derivative at `x`.
///
/// # Safety
/// `value` and `gradient` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_envelope_abs(alpha: f64, x: f64, seed: u64, value: *mut f64, gradient: *mut f64) -> RpStatus {
    guard(|| {
        if value.is_null() || gradient.is_null() {
            return Err(null());
        }
        let f = ScalarField::abs(Manifold::euclidean(1));
        let opts = EnvelopeOptions {
            seed,
            ..Default::default()
        };
        let r = moreau_envelope(&f, alpha, &Point::from_slice(&[x]), &opts)?;
        *value = r.value;
        *gradient = r.gradient.map(|g| g.components[0]).unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Finds or classifies a circumcenter of three points.
///
/// # Safety
/// All coordinate arrays must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_circumcenter(
    m: *const RpManifold,
    a1: *const f64,
    a2: *const f64,
    a3: *const f64,
    init: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut RpReport,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let m = &handle(m)?.0;
        let a = [point_in(m, a1, len)?, point_in(m, a2, len)?, point_in(m, a3, len)?];
        let x = point_in(m, init, len)?;
        let opts = CircumcenterOptions {
            seed,
            ..Default::default()
        };
        let r = find_circumcenter(m, &a[0], &a[1], &a[2], &x, &opts)?;
        *out = Box::into_raw(Box::new(RpReport(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live report handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_report_classification(r: *const RpReport, out: *mut RpCircumcenterClass) -> RpStatus {
    guard(|| {
        let r = &handle(r)?.0;
        if out.is_null() {
            return Err(null());
        }
        *out = match r.classification {
            Some(CircumcenterClass::Circumcenter) => RpCircumcenterClass::Circumcenter,
            Some(CircumcenterClass::Aligned) => RpCircumcenterClass::Aligned,
            Some(CircumcenterClass::NoCircumcenter) => RpCircumcenterClass::NoCircumcenter,
            None => return Err(Fail::Status(RpStatus::InvalidInput, "report has no classification".into())),
        };
        Ok(())
    })
}

/// Witness coordinates; `BufferTooSmall` if `len` is short.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_report_witness(r: *const RpReport, out: *mut f64, len: usize) -> RpStatus {
    guard(|| {
        let r = &handle(r)?.0;
        let w = r
            .witness
            .as_ref()
            .ok_or_else(|| Fail::Status(RpStatus::InvalidInput, "report has no witness".into()))?;
        write_out(w.as_slice(), out, len)
    })
}

/// Residual of the solve and the certified lower bound (NaN when absent).
///
/// # Safety
/// `residual` and `lower_bound` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_report_values(r: *const RpReport, residual: *mut f64, lower_bound: *mut f64) -> RpStatus {
    guard(|| {
        let r = &handle(r)?.0;
        if residual.is_null() || lower_bound.is_null() {
            return Err(null());
        }
        *residual = r.residual;
        *lower_bound = r.lower_bound.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn rp_report_free(r: *mut RpReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Runs a registered scenario with the given seed.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_run_scenario(name: *const c_char, seed: u64, out: *mut *mut RpRunRecord) -> RpStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return Err(null());
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|e| Fail::Status(RpStatus::InvalidInput, e.to_string()))?;
        let config = RunConfig {
            seed,
            ..Default::default()
        };
        *out = Box::into_raw(Box::new(RpRunRecord(run_scenario(name, &config)?)));
        Ok(())
    })
}

/// 1 if every expectation passed, 0 otherwise (also for a null handle).
///
/// # Safety
/// `r` must be null or a live record handle.
#[no_mangle]
pub unsafe extern "C" fn rp_run_record_passed(r: *const RpRunRecord) -> i32 {
    r.as_ref().map(|r| r.0.passed() as i32).unwrap_or(0)
}

/// The record as JSON. Free the string with `rp_string_free`.
///
/// # Safety
/// `r` must be a live record handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rp_run_record_json(r: *const RpRunRecord, out: *mut *mut c_char) -> RpStatus {
    guard(|| {
        let r = &handle(r)?.0;
        if out.is_null() {
            return Err(null());
        }
        let s = serde_json::to_string(r).map_err(|e| Fail::Status(RpStatus::Internal, e.to_string()))?;
        *out = CString::new(s).map_err(|e| Fail::Status(RpStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live record handle.
#[no_mangle]
pub unsafe extern "C" fn rp_run_record_free(r: *mut RpRunRecord) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
