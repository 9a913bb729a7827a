//! C ABI for the `ainfty` library.
//!
//! Documents are parsed into an opaque [`AinftyDocument`] handle. Every
//! fallible call returns an [`AinftyStatus`]; on failure a message is kept
//! per thread and can be read with [`ainfty_last_error`]. Strings returned
//! through out-pointers are owned by the caller and released with
//! [`ainfty_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ainfty::characterizations::{full_report, Estimator, Evaluator, Grids, ReportDocument};
use ainfty::filtration::{parse_document, Document};
use ainfty::verifier::{run_suite, to_json_lines, SuiteConfig};
use ainfty::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AinftyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The input document does not parse or fails validation.
    InvalidDocument = 3,
    /// Unknown estimator name or out-of-range parameter.
    InvalidArgument = 4,
    IndexOutOfRange = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// A parsed filtration together with its weights.
pub struct AinftyDocument {
    doc: Document,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: AinftyStatus, msg: impl Into<String>) -> AinftyStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> AinftyStatus {
    match e {
        Error::InvalidParameter { .. } | Error::UnknownEstimator(_) | Error::InvalidSpec(_) => {
            AinftyStatus::InvalidArgument
        }
        Error::LevelOutOfRange { .. } | Error::AtomOutOfRange { .. } => {
            AinftyStatus::IndexOutOfRange
        }
        _ => AinftyStatus::InvalidDocument,
    }
}

fn from_error(e: Error) -> AinftyStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `body`, turning panics into `Internal` and clearing the error slot
/// on success.
fn guard(body: impl FnOnce() -> AinftyStatus) -> AinftyStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(AinftyStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AinftyStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(AinftyStatus::Internal, "panic inside ainfty"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, AinftyStatus> {
    if s.is_null() {
        return Err(fail(AinftyStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(AinftyStatus::InvalidUtf8, "argument is not UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> AinftyStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            AinftyStatus::Ok
        }
        Err(_) => fail(AinftyStatus::Internal, "output contains a NUL byte"),
    }
}

/// Parses a JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer. On
/// success `*out` holds a handle to release with [`ainfty_document_free`].
#[no_mangle]
pub unsafe extern "C" fn ainfty_document_parse(
    json: *const c_char,
    out: *mut *mut AinftyDocument,
) -> AinftyStatus {
    guard(|| {
        if out.is_null() {
            return fail(AinftyStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_document(text) {
            Ok(doc) => {
                *out = Box::into_raw(Box::new(AinftyDocument { doc }));
                AinftyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a document handle. Null is ignored.
///
/// # Safety
/// `doc` must come from [`ainfty_document_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ainfty_document_free(doc: *mut AinftyDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Number of weights in the document, or 0 for a null handle.
///
/// # Safety
/// `doc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ainfty_document_weight_count(doc: *const AinftyDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.doc.weights.len())
}

/// Number of leaves of the filtration, or 0 for a null handle.
///
/// # Safety
/// `doc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ainfty_document_leaf_count(doc: *const AinftyDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.doc.filtration.leaf_count())
}

/// Writes the full JSON report of every weight, on the default grids.
///
/// # Safety
/// `doc` must be a live handle and `out` a valid pointer. The string written
/// to `*out` is released with [`ainfty_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ainfty_analyze_json(
    doc: *const AinftyDocument,
    out: *mut *mut c_char,
) -> AinftyStatus {
    guard(|| {
        let (Some(d), false) = (doc.as_ref(), out.is_null()) else {
            return fail(AinftyStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let grids = Grids::default();
        let reports: Result<Vec<_>, Error> = d
            .doc
            .weights
            .iter()
            .map(|w| full_report(&d.doc.filtration, w, &grids))
            .collect();
        let reports = match reports {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        match serde_json::to_string(&ReportDocument::new(reports)) {
            Ok(s) => write_string(out, s),
            Err(e) => fail(AinftyStatus::Internal, e.to_string()),
        }
    })
}

/// Evaluates one constant, named like `ap:2` or `aexp`, for the weight at
/// `weight_index`.
///
/// # Safety
/// `doc` must be a live handle, `name` a NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ainfty_constant(
    doc: *const AinftyDocument,
    weight_index: usize,
    name: *const c_char,
    out: *mut f64,
) -> AinftyStatus {
    guard(|| {
        let (Some(d), false) = (doc.as_ref(), out.is_null()) else {
            return fail(AinftyStatus::NullPointer, "null argument");
        };
        let name = match read_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let Some(w) = d.doc.weights.get(weight_index) else {
            return fail(
                AinftyStatus::IndexOutOfRange,
                format!("weight index {weight_index} out of range"),
            );
        };
        let value = name
            .parse::<Estimator>()
            .and_then(|e| Evaluator::new(&d.doc.filtration, w)?.estimate(e));
        match value {
            Ok(v) => {
                *out = v.value;
                AinftyStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs the verifier suite on every weight and writes the results as JSON
/// lines. `*failed` receives the number of failing checks; a failing check
/// is not an error.
///
/// # Safety
/// `doc` must be a live handle; `failed` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ainfty_verify_json_lines(
    doc: *const AinftyDocument,
    corrupt: bool,
    failed: *mut usize,
    out: *mut *mut c_char,
) -> AinftyStatus {
    guard(|| {
        let (Some(d), false, false) = (doc.as_ref(), failed.is_null(), out.is_null()) else {
            return fail(AinftyStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let config = SuiteConfig {
            corrupt,
            ..SuiteConfig::default()
        };
        match run_suite(&d.doc.filtration, &d.doc.weights, &config) {
            Ok(results) => {
                *failed = results.iter().filter(|r| !r.passed).count();
                write_string(out, to_json_lines(&results))
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ainfty_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ainfty_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
