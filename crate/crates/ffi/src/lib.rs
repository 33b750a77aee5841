//! C ABI over the `randers` crate.
//!
//! Problems live behind an opaque handle. Every entry point returns a
//! [`RandersStatus`]; on failure the message is available from
//! [`randers_last_error`] on the same thread. Strings handed out by the
//! library must be released with [`randers_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use randers::equivalence::{flatness_check, global_verdict, Outcome};
use randers::gallery;
use randers::geodesic::{integrate, CurveMode, Orientation};
use randers::problem::{Problem, ProblemFile};
use randers::randers::RandersMetric;
use randers::Error;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandersStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    /// Degenerate metric or violated validity condition.
    InvalidMetric = 5,
    Problem = 6,
    InvalidArgument = 7,
    Unsupported = 8,
    Io = 9,
    Panic = 10,
}

/// Selects `(g, omega)` or `(g_bar, omega_bar)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandersWhich {
    First = 0,
    Second = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandersMode {
    Oriented = 0,
    Unoriented = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandersOrientation {
    Forward = 0,
    Backward = 1,
}

/// Opaque problem handle.
pub struct RandersProblem {
    inner: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RandersStatus {
    match e {
        Error::Parse(_) => RandersStatus::Parse,
        Error::Domain(_) | Error::Inadmissible { .. } => RandersStatus::Domain,
        Error::Degenerate { .. } | Error::Validity { .. } | Error::Positivity { .. } => RandersStatus::InvalidMetric,
        Error::Problem(_) | Error::Json(_) | Error::UnknownInstance(_) => RandersStatus::Problem,
        Error::Unsupported(_) => RandersStatus::Unsupported,
        Error::Io(_) => RandersStatus::Io,
        _ => RandersStatus::InvalidArgument,
    }
}

struct Failure(RandersStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RandersStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RandersStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RandersStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RandersStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(RandersStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn problem<'a>(h: *const RandersProblem) -> Result<&'a Problem, Failure> {
    h.as_ref().map(|p| &p.inner).ok_or_else(|| null("problem"))
}

fn metric(p: &Problem, which: RandersWhich) -> Result<&RandersMetric, Failure> {
    Ok(match which {
        RandersWhich::First => &p.metric,
        RandersWhich::Second => p.pair()?.1,
    })
}

unsafe fn hand_out(text: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|_| Failure(RandersStatus::InvalidArgument, "output holds a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn store(problem: Problem, out: *mut *mut RandersProblem) {
    *out = Box::into_raw(Box::new(RandersProblem { inner: problem }));
}

/// Parses and validates a JSON problem file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn randers_problem_from_json(json: *const c_char, out: *mut *mut RandersProblem) -> RandersStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        store(ProblemFile::from_json(text)?.build()?, out);
        Ok(())
    })
}

/// Loads a built-in instance by id.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn randers_problem_from_gallery(id: *const c_char, out: *mut *mut RandersProblem) -> RandersStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let id = read_str(id, "id")?;
        store(gallery::build(id)?.problem_file().build()?, out);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randers_problem_free(problem: *mut RandersProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Writes the chart dimension to `out`.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randers_problem_dimension(problem: *const RandersProblem, out: *mut usize) -> RandersStatus {
    guard(|| {
        let p = self::problem(problem)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.metric.dimension();
        Ok(())
    })
}

/// Evaluates `F(x, xi)` for one of the two metrics.
///
/// # Safety
/// `x` and `xi` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn randers_eval_f(
    problem: *const RandersProblem,
    which: RandersWhich,
    x: *const f64,
    xi: *const f64,
    n: usize,
    out: *mut f64,
) -> RandersStatus {
    guard(|| {
        let f = metric(self::problem(problem)?, which)?;
        let (x, xi) = (read_slice(x, n, "x")?, read_slice(xi, n, "xi")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = f.eval(x, xi)?;
        Ok(())
    })
}

/// Runs the equivalence check and hands out the verdict as JSON.
/// `refuted` (optional) receives 1 when the outcome is a refutation.
///
/// # Safety
/// `problem` must be a live handle, `out_json` writable; free the string
/// with `randers_string_free`.
#[no_mangle]
pub unsafe extern "C" fn randers_check(
    problem: *const RandersProblem,
    mode: RandersMode,
    out_json: *mut *mut c_char,
    refuted: *mut i32,
) -> RandersStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let p = self::problem(problem)?;
        let (f, f_bar) = p.pair()?;
        let mode = match mode {
            RandersMode::Oriented => CurveMode::Oriented,
            RandersMode::Unoriented => CurveMode::Unoriented,
        };
        let verdict = global_verdict(f, f_bar, &p.grid, mode, &p.tolerances, p.seed)?;
        if let Some(r) = refuted.as_mut() {
            *r = i32::from(verdict.outcome == Outcome::Refuted);
        }
        hand_out(serde_json::to_string_pretty(&verdict).map_err(Error::from)?, out_json)
    })
}

/// Runs the projective-flatness test and hands out the report as JSON.
///
/// # Safety
/// As for `randers_check`.
#[no_mangle]
pub unsafe extern "C" fn randers_flat(
    problem: *const RandersProblem,
    which: RandersWhich,
    out_json: *mut *mut c_char,
) -> RandersStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let p = self::problem(problem)?;
        let report = flatness_check(metric(p, which)?, &p.grid, &p.tolerances)?;
        hand_out(serde_json::to_string_pretty(&report).map_err(Error::from)?, out_json)
    })
}

/// Traces a geodesic with RK4 and hands out the CSV text.
/// `truncated` (optional) receives 1 when the curve left the domain early.
///
/// # Safety
/// `from` and `dir` must point to `n` doubles; `out_csv` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn randers_trace_csv(
    problem: *const RandersProblem,
    which: RandersWhich,
    orientation: RandersOrientation,
    from: *const f64,
    dir: *const f64,
    n: usize,
    t_max: f64,
    h: f64,
    out_csv: *mut *mut c_char,
    truncated: *mut i32,
) -> RandersStatus {
    guard(|| {
        if out_csv.is_null() {
            return Err(null("out_csv"));
        }
        *out_csv = ptr::null_mut();
        let f = metric(self::problem(problem)?, which)?;
        let (p0, v0) = (read_slice(from, n, "from")?, read_slice(dir, n, "dir")?);
        let orientation = match orientation {
            RandersOrientation::Forward => Orientation::Forward,
            RandersOrientation::Backward => Orientation::Backward,
        };
        let curve = integrate(f, p0, v0, orientation, t_max, h)?;
        if let Some(t) = truncated.as_mut() {
            *t = i32::from(curve.truncated);
        }
        let mut buf = Vec::new();
        curve.write_csv(f, &mut buf)?;
        hand_out(String::from_utf8(buf).expect("CSV is ASCII"), out_csv)
    })
}

/// Releases a string handed out by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn randers_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the most recent failure on this thread, or null after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn randers_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
