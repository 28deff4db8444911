//! C interface to `ubw1`.
//!
//! Every function returns a [`Ubw1Status`]; results come back through out
//! pointers. Objects live behind opaque handles that the caller releases with
//! the matching `*_free` function. After a failure,
//! [`ubw1_last_error_message`] describes what went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use ubw1::dirac::{solve_dirac, DiracInstance, Regime};
use ubw1::discrepancy::LocalDiscrepancy;
use ubw1::dynamic::semicoupling_cost;
use ubw1::error::Error;
use ubw1::flow::DynamicPenalty;
use ubw1::measure::{DiscreteMeasure, MetricSpace};
use ubw1::transport::{max_transport_distances, solve_static, TransportSolution};

/// Result codes. Zero is success; every library error kind has its own code.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ubw1Status {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    MassMismatch = 10,
    EmptySpace = 11,
    SpaceMismatch = 12,
    InvalidMeasure = 13,
    UnknownName = 14,
    InvalidParameters = 15,
    NegativeMass = 16,
    NegativeDensity = 17,
    InfeasibleModel = 18,
    InfeasibleChange = 19,
    ModelMismatch = 20,
    InfeasiblePair = 21,
    OutOfRange = 22,
    Validation = 23,
    NonConvergence = 30,
    DegenerateSlope = 31,
    Inconclusive = 32,
    NotOptimalInput = 33,
    CycleGuardExceeded = 34,
    LpFailure = 35,
    InfiniteCost = 36,
    Io = 40,
    Json = 41,
    Csv = 42,
}

impl From<&Error> for Ubw1Status {
    fn from(e: &Error) -> Self {
        match e {
            Error::MassMismatch(..) => Ubw1Status::MassMismatch,
            Error::EmptySpace => Ubw1Status::EmptySpace,
            Error::SpaceMismatch(_) => Ubw1Status::SpaceMismatch,
            Error::InvalidMeasure(_) => Ubw1Status::InvalidMeasure,
            Error::UnknownName(_) => Ubw1Status::UnknownName,
            Error::InvalidParameters(_) => Ubw1Status::InvalidParameters,
            Error::NegativeMass(..) => Ubw1Status::NegativeMass,
            Error::NegativeDensity(_) => Ubw1Status::NegativeDensity,
            Error::InfeasibleModel(_) => Ubw1Status::InfeasibleModel,
            Error::InfeasibleChange(_) => Ubw1Status::InfeasibleChange,
            Error::ModelMismatch(_) => Ubw1Status::ModelMismatch,
            Error::InfeasiblePair(_) => Ubw1Status::InfeasiblePair,
            Error::OutOfRange(_) => Ubw1Status::OutOfRange,
            Error::Validation(_) => Ubw1Status::Validation,
            Error::NonConvergence { .. } => Ubw1Status::NonConvergence,
            Error::DegenerateSlope(_) => Ubw1Status::DegenerateSlope,
            Error::Inconclusive(_) => Ubw1Status::Inconclusive,
            Error::NotOptimalInput(_) => Ubw1Status::NotOptimalInput,
            Error::CycleGuardExceeded(_) => Ubw1Status::CycleGuardExceeded,
            Error::LpFailure(_) => Ubw1Status::LpFailure,
            Error::InfiniteCost(_) => Ubw1Status::InfiniteCost,
            Error::Io(_) => Ubw1Status::Io,
            Error::Json(_) => Ubw1Status::Json,
            Error::Csv(_) => Ubw1Status::Csv,
        }
    }
}

/// A local discrepancy `c_S`.
pub struct Ubw1Discrepancy(LocalDiscrepancy);

/// A dynamic penalty `h_D` with its flow.
pub struct Ubw1Dynamic(DynamicPenalty);

/// Optimal couplings and potentials of a static problem.
pub struct Ubw1Solution(TransportSolution);

/// Outcome of a two-Dirac problem.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct Ubw1DiracResult {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
    /// 0 interior, 1 no transport before the change, 2 no transport after
    /// it, 3 other boundary case.
    pub regime: i32,
    pub swapped: bool,
    pub nonunique: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(Ubw1Status, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(Ubw1Status::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> Ubw1Status {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Ubw1Status::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            Ubw1Status::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(Ubw1Status::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or null after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ubw1_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ubw1_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Look up a catalog model such as `hellinger`, `tv` or `power(2)`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out_handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ubw1_discrepancy_new(name: *const c_char, out_handle: *mut *mut Ubw1Discrepancy) -> Ubw1Status {
    guard(|| {
        let name = read_str(name, "name")?;
        let slot = out(out_handle, "out_handle")?;
        let d = LocalDiscrepancy::catalog(name)?;
        *slot = Box::into_raw(Box::new(Ubw1Discrepancy(d)));
        Ok(())
    })
}

/// Model with `h_S` given by breakpoints and values, interpolated linearly.
///
/// # Safety
/// `breakpoints` and `values` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn ubw1_discrepancy_from_profile(
    breakpoints: *const f64,
    values: *const f64,
    len: usize,
    out_handle: *mut *mut Ubw1Discrepancy,
) -> Ubw1Status {
    guard(|| {
        let z = slice(breakpoints, len, "breakpoints")?.to_vec();
        let v = slice(values, len, "values")?.to_vec();
        let slot = out(out_handle, "out_handle")?;
        let d = LocalDiscrepancy::custom_pwl(z, v)?;
        *slot = Box::into_raw(Box::new(Ubw1Discrepancy(d)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from a constructor of this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn ubw1_discrepancy_free(handle: *mut Ubw1Discrepancy) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `c_S(m0, m1)`, possibly `+inf`.
///
/// # Safety
/// `handle` and `value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ubw1_discrepancy_eval(
    handle: *const Ubw1Discrepancy,
    m0: f64,
    m1: f64,
    value: *mut f64,
) -> Ubw1Status {
    guard(|| {
        let d = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let slot = out(value, "value")?;
        *slot = d.cs_eval(m0, m1)?;
        Ok(())
    })
}

/// Maximal transport distances `L₀` and `L₁`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ubw1_discrepancy_max_distances(
    handle: *const Ubw1Discrepancy,
    l0: *mut f64,
    l1: *mut f64,
) -> Ubw1Status {
    guard(|| {
        let d = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let (a, b) = max_transport_distances(d);
        *out(l0, "l0")? = a;
        *out(l1, "l1")? = b;
        Ok(())
    })
}

/// Semi-coupling cost of moving `m0` to `m1` over distance `dx`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ubw1_semicoupling_cost(
    handle: *const Ubw1Discrepancy,
    dx: f64,
    m0: f64,
    m1: f64,
    primal: *mut f64,
    dual: *mut f64,
) -> Ubw1Status {
    guard(|| {
        let d = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let p = out(primal, "primal")?;
        let q = out(dual, "dual")?;
        let sc = semicoupling_cost(d, dx, m0, m1)?;
        *p = sc.primal;
        *q = sc.dual;
        Ok(())
    })
}

/// Two Diracs at `0` and `L`.
///
/// # Safety
/// `handle` and `result` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ubw1_dirac_solve(
    handle: *const Ubw1Discrepancy,
    l: f64,
    m00: f64,
    m0l: f64,
    m10: f64,
    m1l: f64,
    result: *mut Ubw1DiracResult,
) -> Ubw1Status {
    guard(|| {
        let d = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let slot = out(result, "result")?;
        let inst = DiracInstance { l, m00, m0l, m10, m1l, disc: d.clone() };
        let s = solve_dirac(&inst)?;
        *slot = Ubw1DiracResult {
            a: s.a,
            b: s.b,
            alpha: s.alpha,
            beta: s.beta,
            value: s.value,
            regime: match s.regime {
                Regime::Interior => 0,
                Regime::BoundaryA0 => 1,
                Regime::BoundaryB0 => 2,
                Regime::BoundaryOther => 3,
            },
            swapped: s.swapped,
            nonunique: s.nonunique,
        };
        Ok(())
    })
}

/// Solve the static problem for `n` Euclidean points in dimension `dim`.
/// `points` is row major, `n * dim` doubles; `rho0` and `rho1` hold `n`
/// weights each.
///
/// # Safety
/// Array pointers must cover the stated lengths; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solve_static(
    handle: *const Ubw1Discrepancy,
    points: *const f64,
    n: usize,
    dim: usize,
    rho0: *const f64,
    rho1: *const f64,
    cuts: usize,
    out_handle: *mut *mut Ubw1Solution,
) -> Ubw1Status {
    guard(|| {
        let d = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        if dim == 0 {
            return Err(Error::Validation("dim must be positive".into()).into());
        }
        let len = n.checked_mul(dim).ok_or_else(|| Failure::from(Error::Validation("n * dim overflows".into())))?;
        let pts = slice(points, len, "points")?;
        let w0 = slice(rho0, n, "rho0")?.to_vec();
        let w1 = slice(rho1, n, "rho1")?.to_vec();
        let slot = out(out_handle, "out_handle")?;
        let space = Arc::new(MetricSpace::euclidean(pts.chunks(dim).map(<[f64]>::to_vec).collect())?);
        let a = DiscreteMeasure::new(space.clone(), w0)?;
        let b = DiscreteMeasure::new(space, w1)?;
        let sol = solve_static(&a, &b, d, cuts)?;
        *slot = Box::into_raw(Box::new(Ubw1Solution(sol)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`ubw1_solve_static`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solution_free(handle: *mut Ubw1Solution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Primal and dual values of a solution.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solution_values(
    handle: *const Ubw1Solution,
    primal: *mut f64,
    dual: *mut f64,
) -> Ubw1Status {
    guard(|| {
        let s = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        *out(primal, "primal")? = s.primal_value;
        *out(dual, "dual")? = s.dual_value;
        Ok(())
    })
}

/// Number of points of the solution's space.
///
/// # Safety
/// `handle` and `n` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solution_len(handle: *const Ubw1Solution, n: *mut usize) -> Ubw1Status {
    guard(|| {
        let s = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        *out(n, "n")? = s.space().len();
        Ok(())
    })
}

/// Copy both couplings, row major, into buffers of `len` doubles each;
/// `len` must be at least `n * n`.
///
/// # Safety
/// `pi0` and `pi1` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solution_couplings(
    handle: *const Ubw1Solution,
    pi0: *mut f64,
    pi1: *mut f64,
    len: usize,
) -> Ubw1Status {
    guard(|| {
        let s = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let n = s.space().len();
        if len < n * n {
            return Err(Error::Validation(format!("buffers hold {len} doubles, need {}", n * n)).into());
        }
        for (dst, c) in [(pi0, &s.pi0), (pi1, &s.pi1)] {
            if dst.is_null() {
                return Err(null("coupling buffer"));
            }
            let buf = std::slice::from_raw_parts_mut(dst, n * n);
            for (i, row) in c.matrix().iter().enumerate() {
                buf[i * n..(i + 1) * n].copy_from_slice(row);
            }
        }
        Ok(())
    })
}

/// Copy the potentials into buffers of `len ≥ n` doubles each.
///
/// # Safety
/// `alpha` and `beta` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ubw1_solution_potentials(
    handle: *const Ubw1Solution,
    alpha: *mut f64,
    beta: *mut f64,
    len: usize,
) -> Ubw1Status {
    guard(|| {
        let s = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let n = s.alpha.len();
        if len < n {
            return Err(Error::Validation(format!("buffers hold {len} doubles, need {n}")).into());
        }
        for (dst, src) in [(alpha, &s.alpha), (beta, &s.beta)] {
            if dst.is_null() {
                return Err(null("potential buffer"));
            }
            std::slice::from_raw_parts_mut(dst, n).copy_from_slice(src);
        }
        Ok(())
    })
}

/// Look up a dynamic model such as `hellinger` or `tv`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out_handle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ubw1_dynamic_new(name: *const c_char, out_handle: *mut *mut Ubw1Dynamic) -> Ubw1Status {
    guard(|| {
        let name = read_str(name, "name")?;
        let slot = out(out_handle, "out_handle")?;
        let dp = DynamicPenalty::catalog(name)?;
        *slot = Box::into_raw(Box::new(Ubw1Dynamic(dp)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`ubw1_dynamic_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ubw1_dynamic_free(handle: *mut Ubw1Dynamic) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `F_t(z)`.
///
/// # Safety
/// `handle` and `value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ubw1_dynamic_flow(handle: *const Ubw1Dynamic, t: f64, z: f64, value: *mut f64) -> Ubw1Status {
    guard(|| {
        let dp = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let slot = out(value, "value")?;
        if !(t.is_finite() && t >= 0.0 && z.is_finite()) {
            return Err(Error::Validation(format!("need finite t ≥ 0 and z, got t = {t}, z = {z}")).into());
        }
        *slot = dp.flow(t, z).value;
        Ok(())
    })
}

/// `c_D(ρ, ζ)`, possibly `+inf`.
///
/// # Safety
/// `handle` and `value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ubw1_dynamic_cost(handle: *const Ubw1Dynamic, rho: f64, zeta: f64, value: *mut f64) -> Ubw1Status {
    guard(|| {
        let dp = &handle.as_ref().ok_or_else(|| null("handle"))?.0;
        let slot = out(value, "value")?;
        *slot = dp.cd_eval(rho, zeta)?;
        Ok(())
    })
}
