//! C ABI over `wsi-anon`.
//!
//! Every function returns a [`WsiStatus`]; on failure the message is kept per
//! thread and read with [`wsi_last_error`]. Handles are opaque and must be
//! released with their `_free` function. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wsi_anon::forge::SentinelProfile;
use wsi_anon::{AnonymizationConfig, AnonymizationReport, Error, NewName, StreamSession, Vendor};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsiStatus {
    Ok = 0,
    Unsupported = 1,
    Corrupt = 2,
    Io = 3,
    PolicyRefused = 4,
    InvalidArgument = 5,
    SessionFinalized = 6,
    Internal = 99,
}

/// Detected slide format.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsiVendor {
    Unknown = 0,
    Aperio = 1,
    Hamamatsu = 2,
    Mirax = 3,
    Ventana = 4,
    PhilipsIsyntax = 5,
    GenericTiff = 6,
}

impl From<Vendor> for WsiVendor {
    fn from(v: Vendor) -> Self {
        match v {
            Vendor::Aperio => WsiVendor::Aperio,
            Vendor::Hamamatsu => WsiVendor::Hamamatsu,
            Vendor::Mirax => WsiVendor::Mirax,
            Vendor::Ventana => WsiVendor::Ventana,
            Vendor::PhilipsISyntax => WsiVendor::PhilipsIsyntax,
            Vendor::GenericTiff => WsiVendor::GenericTiff,
            Vendor::Unknown => WsiVendor::Unknown,
        }
    }
}

/// Anonymization settings. Create with [`wsi_config_new`].
pub struct WsiConfig {
    inner: AnonymizationConfig,
}

/// Outcome of [`wsi_anonymize`].
pub struct WsiReport {
    level: i32,
    patches_planned: usize,
    patches_applied: usize,
    output: CString,
    json: CString,
}

/// In-memory anonymization of a byte stream.
pub struct WsiStream {
    inner: StreamSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WsiStatus {
    match e {
        Error::UnsupportedFormat(_) => WsiStatus::Unsupported,
        Error::CorruptStructure(_)
        | Error::CorruptContainer(_)
        | Error::OutOfBounds { .. }
        | Error::TagAbsent(_) => WsiStatus::Corrupt,
        Error::LabelNotSeparable(_) | Error::ReplacementConstraintViolation { .. } => WsiStatus::PolicyRefused,
        Error::InvalidArgument(_) => WsiStatus::InvalidArgument,
        Error::SessionFinalized => WsiStatus::SessionFinalized,
        _ => WsiStatus::Io,
    }
}

fn fail(e: Error) -> WsiStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn invalid(msg: &str) -> WsiStatus {
    set_error(msg);
    WsiStatus::InvalidArgument
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> WsiStatus) -> WsiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal error");
            WsiStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, WsiStatus> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, WsiStatus> {
    text(p, "path").map(PathBuf::from)
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn wsi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn wsi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Stable identifier such as "leica-aperio", static storage.
#[no_mangle]
pub extern "C" fn wsi_vendor_id(vendor: WsiVendor) -> *const c_char {
    let s: &'static [u8] = match vendor {
        WsiVendor::Aperio => b"leica-aperio\0",
        WsiVendor::Hamamatsu => b"hamamatsu-ndpi\0",
        WsiVendor::Mirax => b"3dhistech-mirax\0",
        WsiVendor::Ventana => b"roche-ventana\0",
        WsiVendor::PhilipsIsyntax => b"philips-isyntax\0",
        WsiVendor::GenericTiff => b"generic-tiff\0",
        WsiVendor::Unknown => b"unknown\0",
    };
    s.as_ptr().cast()
}

/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wsi_detect(path_: *const c_char, out: *mut WsiVendor) -> WsiStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        let p = match path(path_) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match wsi_anon::detect_format(&p) {
            Ok(f) => {
                *out = f.vendor.into();
                WsiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[no_mangle]
pub extern "C" fn wsi_config_new() -> *mut WsiConfig {
    Box::into_raw(Box::new(WsiConfig {
        inner: AnonymizationConfig::default(),
    }))
}

/// # Safety
/// `config` must come from [`wsi_config_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_free(config: *mut WsiConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn with_config(config: *mut WsiConfig, f: impl FnOnce(&mut AnonymizationConfig) -> WsiStatus) -> WsiStatus {
    guard(|| match config.as_mut() {
        Some(c) => f(&mut c.inner),
        None => invalid("config is null"),
    })
}

/// # Safety
/// `config` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_keep_macro(config: *mut WsiConfig, on: bool) -> WsiStatus {
    with_config(config, |c| {
        c.keep_macro = on;
        WsiStatus::Ok
    })
}

/// # Safety
/// `config` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_overwrite_only(config: *mut WsiConfig, on: bool) -> WsiStatus {
    with_config(config, |c| {
        c.overwrite_only = on;
        WsiStatus::Ok
    })
}

/// # Safety
/// `config` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_dry_run(config: *mut WsiConfig, on: bool) -> WsiStatus {
    with_config(config, |c| {
        c.dry_run = on;
        WsiStatus::Ok
    })
}

/// NULL clears the backup directory.
///
/// # Safety
/// `config` must be a live config handle; `dir` a C string or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_backup_dir(config: *mut WsiConfig, dir: *const c_char) -> WsiStatus {
    with_config(config, |c| {
        if dir.is_null() {
            c.backup_dir = None;
            return WsiStatus::Ok;
        }
        match path(dir) {
            Ok(p) => {
                c.backup_dir = Some(p);
                WsiStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Renames the output to `name` plus the original extension. NULL clears.
///
/// # Safety
/// `config` must be a live config handle; `name` a C string or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_rename(config: *mut WsiConfig, name: *const c_char) -> WsiStatus {
    with_config(config, |c| {
        if name.is_null() {
            c.rename = None;
            return WsiStatus::Ok;
        }
        match text(name, "name") {
            Ok(n) => {
                c.rename = Some(NewName::Exact(n.to_string()));
                WsiStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `config` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn wsi_config_set_random_name(config: *mut WsiConfig) -> WsiStatus {
    with_config(config, |c| {
        c.rename = Some(NewName::Random);
        WsiStatus::Ok
    })
}

fn level_number(l: wsi_anon::PolicyLevel) -> i32 {
    l.number() as i32
}

fn report_of(r: &AnonymizationReport) -> Result<WsiReport, Error> {
    let json = serde_json::to_string(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(WsiReport {
        level: level_number(r.achieved_level),
        patches_planned: r.patches_planned,
        patches_applied: r.patches_applied,
        output: CString::new(r.output.to_string_lossy().into_owned()).unwrap_or_default(),
        json: CString::new(json).unwrap_or_default(),
    })
}

/// Anonymizes the slide at `path` in place. `config` may be NULL for
/// defaults. On success `*report` receives a handle for [`wsi_report_free`].
///
/// # Safety
/// `path` must be a C string, `config` a live handle or NULL, `report` valid.
#[no_mangle]
pub unsafe extern "C" fn wsi_anonymize(
    path_: *const c_char,
    config: *const WsiConfig,
    report: *mut *mut WsiReport,
) -> WsiStatus {
    guard(|| {
        if report.is_null() {
            return invalid("report is null");
        }
        *report = ptr::null_mut();
        let p = match path(path_) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let default = AnonymizationConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.inner);
        match wsi_anon::anonymize(&p, cfg).and_then(|r| report_of(&r)) {
            Ok(r) => {
                *report = Box::into_raw(Box::new(r));
                WsiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` must come from [`wsi_anonymize`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_free(report: *mut WsiReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Achieved level 0 to 5, or -1 for NULL.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_level(report: *const WsiReport) -> i32 {
    report.as_ref().map_or(-1, |r| r.level)
}

/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_patches_planned(report: *const WsiReport) -> usize {
    report.as_ref().map_or(0, |r| r.patches_planned)
}

/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_patches_applied(report: *const WsiReport) -> usize {
    report.as_ref().map_or(0, |r| r.patches_applied)
}

/// Final path of the slide. Owned by the report.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_output(report: *const WsiReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.output.as_ptr())
}

/// Full report as one JSON object. Owned by the report.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_report_json(report: *const WsiReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Grades the slide at `path`. `sentinel_file` (one string per line) may be
/// NULL for a structure-only audit.
///
/// # Safety
/// `path` must be a C string, `sentinel_file` a C string or NULL, `level` valid.
#[no_mangle]
pub unsafe extern "C" fn wsi_audit(path_: *const c_char, sentinel_file: *const c_char, level: *mut i32) -> WsiStatus {
    guard(|| {
        if level.is_null() {
            return invalid("level is null");
        }
        let p = match path(path_) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let profile = if sentinel_file.is_null() {
            None
        } else {
            match path(sentinel_file).map(|f| SentinelProfile::from_sentinel_file(&f)) {
                Ok(Ok(prof)) => Some(prof),
                Ok(Err(e)) => return fail(e),
                Err(s) => return s,
            }
        };
        match wsi_anon::audit_level(&p, profile.as_ref()) {
            Ok(l) => {
                *level = level_number(l);
                WsiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `name` is the original filename; its extension takes part in detection.
///
/// # Safety
/// `name` must be a C string. Returns NULL on bad input.
#[no_mangle]
pub unsafe extern "C" fn wsi_stream_new(name: *const c_char) -> *mut WsiStream {
    match text(name, "name") {
        Ok(n) => Box::into_raw(Box::new(WsiStream {
            inner: StreamSession::new(n),
        })),
        Err(_) => ptr::null_mut(),
    }
}

/// # Safety
/// `stream` must come from [`wsi_stream_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_stream_free(stream: *mut WsiStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// # Safety
/// `stream` must be live; `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn wsi_stream_feed(stream: *mut WsiStream, data: *const u8, len: usize) -> WsiStatus {
    guard(|| {
        let Some(s) = stream.as_mut() else {
            return invalid("stream is null");
        };
        if data.is_null() && len > 0 {
            return invalid("data is null");
        }
        let chunk = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        match s.inner.feed(chunk) {
            Ok(()) => WsiStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Anonymizes everything fed so far. On success `*out`/`*out_len` receive a
/// buffer to release with [`wsi_buffer_free`]. Backup and rename settings
/// are ignored.
///
/// # Safety
/// `stream` must be live, `config` a live handle or NULL, `out`/`out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn wsi_stream_finalize(
    stream: *mut WsiStream,
    config: *const WsiConfig,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> WsiStatus {
    guard(|| {
        let Some(s) = stream.as_mut() else {
            return invalid("stream is null");
        };
        if out.is_null() || out_len.is_null() {
            return invalid("output pointers are null");
        }
        *out = ptr::null_mut();
        *out_len = 0;
        let default = AnonymizationConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.inner);
        match s.inner.finalize(cfg) {
            Ok(bytes) => {
                let boxed = bytes.into_boxed_slice();
                *out_len = boxed.len();
                *out = Box::into_raw(boxed).cast();
                WsiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `data`/`len` must come from [`wsi_stream_finalize`], or `data` be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsi_buffer_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}
