//! C ABI over the name-translation scorer: load a trained table file,
//! score mention/candidate name pairs, normalize diagnosis codes. The
//! matching declarations are hand-maintained in `include/pdd.h`.
//!
//! Conventions: every function returns a `PddStatus`; results come back
//! through out-pointers that are written only on `PDD_OK`; handles and
//! strings returned by this library must be released with the matching
//! `pdd_*_free` call; `pdd_last_error_message` describes the most recent
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pdd_core::enm::{load_table, score, EnmError, TranslationTable};
use pdd_core::normalize::{normalize_icd9, tokenize_name};

/// Opaque handle; C code only ever holds a pointer to it.
pub struct PddTable(TranslationTable);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PddStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let value = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(value));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: PddStatus, message: String) -> PddStatus {
    set_error(message);
    status
}

fn model_status(err: &EnmError) -> PddStatus {
    match err {
        EnmError::Io { .. } => PddStatus::Io,
        EnmError::Parse { .. }
        | EnmError::InvalidProb { .. }
        | EnmError::NormalizationViolated { .. }
        | EnmError::MissingNull => PddStatus::Parse,
        EnmError::EmptyName { .. } | EnmError::InvalidEpsilon { .. } => PddStatus::InvalidInput,
        _ => PddStatus::Internal,
    }
}

fn guarded(f: impl FnOnce() -> PddStatus) -> PddStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PddStatus::Internal, "internal panic".into()),
    }
}

/// Borrows a C string as &str or reports why it cannot be.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, PddStatus> {
    if ptr.is_null() {
        return Err(fail(
            PddStatus::NullArgument,
            format!("{name} must not be null"),
        ));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        fail(
            PddStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

/// Most recent error message on this thread, or null if the last call
/// succeeded. The pointer is valid until the next pdd_* call on the same
/// thread; do not free it.
#[no_mangle]
pub extern "C" fn pdd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Loads a trained table file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` must point to
/// writable storage for one pointer. On `PDD_OK` the caller owns the
/// handle and must release it with `pdd_table_free`.
#[no_mangle]
pub unsafe extern "C" fn pdd_table_load(
    path: *const c_char,
    out_table: *mut *mut PddTable,
) -> PddStatus {
    guarded(|| {
        if out_table.is_null() {
            return fail(PddStatus::NullArgument, "out_table must not be null".into());
        }
        let path = match unsafe { cstr_arg(path, "path") } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match load_table(Path::new(path)) {
            Ok(table) => {
                unsafe { *out_table = Box::into_raw(Box::new(PddTable(table))) };
                clear_error();
                PddStatus::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Releases a handle from `pdd_table_load`. Null is a no-op.
///
/// # Safety
/// `table` must be null or a pointer previously returned by
/// `pdd_table_load` that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pdd_table_free(table: *mut PddTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Number of (source, target) entries in the table.
///
/// # Safety
/// `table` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdd_table_entry_count(
    table: *const PddTable,
    out_count: *mut usize,
) -> PddStatus {
    guarded(|| {
        if table.is_null() || out_count.is_null() {
            return fail(
                PddStatus::NullArgument,
                "table and out_count must not be null".into(),
            );
        }
        unsafe { *out_count = (*table).0.num_entries() };
        clear_error();
        PddStatus::Ok
    })
}

/// Scores how plausibly `mention` denotes the entity named `candidate`,
/// writing a probability in [0, epsilon]. Both names are tokenized the
/// same way the trainer tokenizes them.
///
/// # Safety
/// `table` must be a live handle; `mention` and `candidate` must be
/// NUL-terminated strings; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdd_score(
    table: *const PddTable,
    mention: *const c_char,
    candidate: *const c_char,
    epsilon: f64,
    out_score: *mut f64,
) -> PddStatus {
    guarded(|| {
        if table.is_null() || out_score.is_null() {
            return fail(
                PddStatus::NullArgument,
                "table and out_score must not be null".into(),
            );
        }
        let mention = match unsafe { cstr_arg(mention, "mention") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let candidate = match unsafe { cstr_arg(candidate, "candidate") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let mention = tokenize_name(mention);
        let candidate = tokenize_name(candidate);
        match score(&mention, &candidate, unsafe { &(*table).0 }, epsilon) {
            Ok(value) => {
                unsafe { *out_score = value };
                clear_error();
                PddStatus::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Normalizes a diagnosis code (trim, strip dots, uppercase) into a
/// newly allocated string.
///
/// # Safety
/// `code` must be a NUL-terminated string; `out_code` must be writable.
/// On `PDD_OK` the caller owns the result and must release it with
/// `pdd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pdd_normalize_icd9(
    code: *const c_char,
    out_code: *mut *mut c_char,
) -> PddStatus {
    guarded(|| {
        if out_code.is_null() {
            return fail(PddStatus::NullArgument, "out_code must not be null".into());
        }
        let code = match unsafe { cstr_arg(code, "code") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match normalize_icd9(code) {
            Ok(normalized) => {
                // Normalized codes are non-empty and NUL-free.
                let c = CString::new(normalized.as_str().to_owned())
                    .expect("normalized code has no NUL bytes");
                unsafe { *out_code = c.into_raw() };
                clear_error();
                PddStatus::Ok
            }
            Err(e) => fail(PddStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Releases a string from `pdd_normalize_icd9`. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pdd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
