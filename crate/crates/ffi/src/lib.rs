//! C interface to singulab.
//!
//! Every function returns an [`SgStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read
//! with [`sg_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function. Strings returned by the library are freed
//! with [`sg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use singulab::cli::{self, CliError, Command, GermDocument, RunOptions};
use singulab::poly::{parse_poly, Polynomial};
use singulab::verify::VerificationReport;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Schema = 4,
    Io = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// A parsed polynomial.
pub struct SgPoly {
    inner: Polynomial,
}

/// A validated germ document.
pub struct SgGerm {
    doc: GermDocument,
    name: CString,
}

/// The outcome of one command on one germ.
pub struct SgReport {
    inner: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SgStatus, msg: impl Into<String>) -> SgStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SgStatus) -> SgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SgStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SgStatus> {
    if p.is_null() {
        return Err(fail(SgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn cli_status(e: &CliError) -> SgStatus {
    match e {
        CliError::Io { .. } => SgStatus::Io,
        CliError::Schema { .. } | CliError::Germ { .. } => SgStatus::Schema,
        CliError::Poly { .. } => SgStatus::Parse,
        CliError::Usage(_) => SgStatus::InvalidArgument,
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `text` as a polynomial in the `nvars` variable names `vars`.
///
/// # Safety
/// `text` and each of `vars[0..nvars]` must be valid C strings; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_poly_parse(
    text: *const c_char,
    vars: *const *const c_char,
    nvars: usize,
    out: *mut *mut SgPoly,
) -> SgStatus {
    guard(|| {
        if out.is_null() || (vars.is_null() && nvars > 0) {
            return fail(SgStatus::NullPointer, "null argument");
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let mut names = Vec::with_capacity(nvars);
        for i in 0..nvars {
            match str_arg(*vars.add(i), "variable name") {
                Ok(v) => names.push(v),
                Err(s) => return s,
            }
        }
        match parse_poly(text, &names) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(SgPoly { inner: p }));
                SgStatus::Ok
            }
            Err(e) => fail(SgStatus::Parse, e.to_string()),
        }
    })
}

/// Number of variables of `poly`.
///
/// # Safety
/// `poly` must be a live handle from [`sg_poly_parse`]; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_poly_nvars(poly: *const SgPoly, out: *mut usize) -> SgStatus {
    guard(|| {
        if poly.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        *out = (*poly).inner.nvars();
        SgStatus::Ok
    })
}

/// Evaluates `poly` at the point `x[0..n]`.
///
/// # Safety
/// `poly` must be a live handle, `x` must point to `n` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_poly_eval(poly: *const SgPoly, x: *const f64, n: usize, out: *mut f64) -> SgStatus {
    guard(|| {
        if poly.is_null() || out.is_null() || (x.is_null() && n > 0) {
            return fail(SgStatus::NullPointer, "null argument");
        }
        let point = if n == 0 { &[][..] } else { std::slice::from_raw_parts(x, n) };
        match (*poly).inner.eval(point) {
            Ok(v) => {
                *out = v;
                SgStatus::Ok
            }
            Err(e) => fail(SgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `poly` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_poly_free(poly: *mut SgPoly) {
    if !poly.is_null() {
        drop(Box::from_raw(poly));
    }
}

fn germ_handle(doc: GermDocument) -> *mut SgGerm {
    let name = CString::new(doc.name.replace('\0', " ")).expect("nul bytes removed");
    Box::into_raw(Box::new(SgGerm { doc, name }))
}

/// Loads and validates a germ file.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_germ_load(path: *const c_char, out: *mut *mut SgGerm) -> SgStatus {
    guard(|| {
        if out.is_null() {
            return fail(SgStatus::NullPointer, "out is null");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match cli::load_germ(Path::new(path)) {
            Ok(doc) => {
                *out = germ_handle(doc);
                SgStatus::Ok
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// Parses and validates a germ document held in memory.
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_germ_from_toml(text: *const c_char, out: *mut *mut SgGerm) -> SgStatus {
    guard(|| {
        if out.is_null() {
            return fail(SgStatus::NullPointer, "out is null");
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match GermDocument::from_toml(text, "<memory>") {
            Ok(doc) => {
                *out = germ_handle(doc);
                SgStatus::Ok
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// Name of the germ; the string is owned by the handle.
///
/// # Safety
/// `germ` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_germ_name(germ: *const SgGerm, out: *mut *const c_char) -> SgStatus {
    guard(|| {
        if germ.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        *out = (*germ).name.as_ptr();
        SgStatus::Ok
    })
}

/// Ambient dimension of the germ.
///
/// # Safety
/// `germ` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_germ_dimension(germ: *const SgGerm, out: *mut usize) -> SgStatus {
    guard(|| {
        if germ.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        *out = (*germ).doc.dimension;
        SgStatus::Ok
    })
}

/// # Safety
/// `germ` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_germ_free(germ: *mut SgGerm) {
    if !germ.is_null() {
        drop(Box::from_raw(germ));
    }
}

/// Runs one command (`le-greuel`, `corollary`, `lemma-link`,
/// `gauss-bonnet`, `sigma`, `kinematic`, `curv-link` or `density`) on the
/// germ. `samples` = 0 keeps the germ's or the default sample count. A
/// failing check still returns `SG_STATUS_OK` with a report whose pass flag
/// is false.
///
/// # Safety
/// `germ` must be a live handle, `command` a valid C string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sg_run(
    germ: *const SgGerm,
    command: *const c_char,
    samples: usize,
    seed: u64,
    out: *mut *mut SgReport,
) -> SgStatus {
    guard(|| {
        if germ.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        let name = match str_arg(command, "command") {
            Ok(c) => c,
            Err(s) => return s,
        };
        let command = match Command::parse(name) {
            Some(c) if c.len() == 1 => c[0],
            _ => return fail(SgStatus::InvalidArgument, format!("unknown command {name:?}")),
        };
        let mut opts = RunOptions::new(vec![command], Vec::new());
        opts.samples = (samples > 0).then_some(samples);
        opts.seed = Some(seed);
        opts.timing = false;
        let doc = &(*germ).doc;
        let report = cli::verify_document(doc, &doc.name, command, &opts);
        *out = Box::into_raw(Box::new(SgReport { inner: report }));
        SgStatus::Ok
    })
}

/// Whether every comparison of the report passed.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_report_pass(report: *const SgReport, out: *mut bool) -> SgStatus {
    guard(|| {
        if report.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        *out = (*report).inner.pass;
        SgStatus::Ok
    })
}

/// Both sides of the main comparison with their standard errors.
///
/// # Safety
/// `report` must be a live handle; the four out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_report_values(
    report: *const SgReport,
    lhs: *mut f64,
    stderr_lhs: *mut f64,
    rhs: *mut f64,
    stderr_rhs: *mut f64,
) -> SgStatus {
    guard(|| {
        if report.is_null() || lhs.is_null() || stderr_lhs.is_null() || rhs.is_null() || stderr_rhs.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        let r = &(*report).inner;
        *lhs = r.lhs;
        *stderr_lhs = r.stderr_lhs;
        *rhs = r.rhs;
        *stderr_rhs = r.stderr_rhs;
        SgStatus::Ok
    })
}

/// The full report as a TOML document; free it with [`sg_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sg_report_toml(report: *const SgReport, out: *mut *mut c_char) -> SgStatus {
    guard(|| {
        if report.is_null() || out.is_null() {
            return fail(SgStatus::NullPointer, "null argument");
        }
        *out = into_c_string(cli::report_to_toml(&(*report).inner));
        SgStatus::Ok
    })
}

/// # Safety
/// `report` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sg_report_free(report: *mut SgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
