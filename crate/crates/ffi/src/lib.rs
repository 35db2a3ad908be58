//! C interface to levylab.
//!
//! Series are opaque handles from [`ll_series_open`], released with [`ll_series_free`].
//! Every call returns an [`LlStatus`]; on failure [`ll_last_error`] describes the cause
//! for the calling thread. Structured results are JSON strings owned by the caller and
//! released with [`ll_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use levylab::achieve::{achieve_via_reduction, brute_subsums};
use levylab::catalog::{self, Series, SeriesDef};
use levylab::exactnum::{Rat, Vec2};
use levylab::raster::{raster, RasterParams, Region};
use levylab::verify::{run_verify, VerifyOptions};
use levylab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    UnknownSeries = 4,
    TooLarge = 5,
    BudgetExceeded = 6,
    Precondition = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A catalog series.
pub struct LlSeries {
    def: SeriesDef,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(LlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let status = match &e {
            Error::UnknownSeries(_) => LlStatus::UnknownSeries,
            Error::TooLarge { .. } | Error::NonEnumerableBlock { .. } | Error::ExponentTooLarge(_) => LlStatus::TooLarge,
            Error::BudgetExceeded { .. } | Error::PoolExhausted { .. } | Error::SearchFailed { .. } => {
                LlStatus::BudgetExceeded
            }
            Error::Parse(_) | Error::BadRegion => LlStatus::InvalidArgument,
            _ => LlStatus::Precondition,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|l| *l.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|l| *l.borrow_mut() = None);
            LlStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            LlStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(LlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(LlStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

unsafe fn series_arg<'a>(s: *const LlSeries) -> Result<&'a SeriesDef, Fail> {
    s.as_ref().map(|s| &s.def).ok_or_else(null)
}

unsafe fn put_json(out: *mut *mut c_char, json: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn ll_last_error() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ll_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens a catalog series by id, e.g. `"C8"`.
///
/// # Safety
/// `id` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_series_open(id: *const c_char, out: *mut *mut LlSeries) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let def = catalog::lookup(str_arg(id)?)?;
        *out = Box::into_raw(Box::new(LlSeries { def }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`ll_series_open`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ll_series_free(s: *mut LlSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Term `n` (1-based) in floating point.
///
/// # Safety
/// `s` must be a live handle; `x` and `y` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_series_term(s: *const LlSeries, n: u64, x: *mut f64, y: *mut f64) -> LlStatus {
    guard(|| {
        let def = series_arg(s)?;
        if x.is_null() || y.is_null() {
            return Err(null());
        }
        let t = def.term_f64(n)?;
        *x = t.x;
        *y = t.y;
        Ok(())
    })
}

/// Term `n` as JSON; rational series give `"p/q"` strings.
///
/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_series_term_json(s: *const LlSeries, n: u64, out: *mut *mut c_char) -> LlStatus {
    guard(|| {
        let t = series_arg(s)?.term(n)?;
        let v = match t.as_exact() {
            Some(q) => serde_json::json!({ "exact": true, "x": q.x.to_string(), "y": q.y.to_string() }),
            None => {
                let f = t.to_f64();
                serde_json::json!({ "exact": false, "x": f.x, "y": f.y })
            }
        };
        put_json(out, v.to_string())
    })
}

/// Partial sum of the first `n` terms in floating point.
///
/// # Safety
/// `s` must be a live handle; `x` and `y` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_partial_sum(s: *const LlSeries, n: u64, x: *mut f64, y: *mut f64) -> LlStatus {
    guard(|| {
        let def = series_arg(s)?;
        if x.is_null() || y.is_null() {
            return Err(null());
        }
        let v = catalog::partial_sum_f64(def, n)?;
        *x = v.x;
        *y = v.y;
        Ok(())
    })
}

/// Achievement certificate toward `(tx, ty)` as JSON.
///
/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_achieve(
    s: *const LlSeries,
    tx: f64,
    ty: f64,
    depth: u32,
    budget: u64,
    out: *mut *mut c_char,
) -> LlStatus {
    guard(|| {
        let cert = achieve_via_reduction(series_arg(s)?, Vec2::new(tx, ty), depth, budget)?;
        put_json(out, serde_json::to_string(&cert).expect("serializable"))
    })
}

/// Subsums of the first `terms` terms within `tol` of the target. Coordinates and
/// tolerance are decimal or `p/q` strings. Result is a JSON array.
///
/// # Safety
/// `s` must be a live handle, string arguments nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_oracle(
    s: *const LlSeries,
    terms: u32,
    tx: *const c_char,
    ty: *const c_char,
    tol: *const c_char,
    out: *mut *mut c_char,
) -> LlStatus {
    guard(|| {
        let def = series_arg(s)?;
        let target = Vec2::new(Rat::parse(str_arg(tx)?)?, Rat::parse(str_arg(ty)?)?);
        let hits = brute_subsums(def, terms, &target, &Rat::parse(str_arg(tol)?)?)?;
        put_json(out, serde_json::to_string(&hits).expect("serializable"))
    })
}

/// Fills `counts` (row-major, row 0 at the top, `width*height` entries) with a
/// density raster of random subsums. `region` is `{x_min, x_max, y_min, y_max}`.
/// `outside` receives the samples that missed the region.
///
/// # Safety
/// `s` must be a live handle, `counts` must hold `len` values, `region` four, and `outside` be writable.
#[no_mangle]
pub unsafe extern "C" fn ll_raster(
    s: *const LlSeries,
    terms: u32,
    samples: u64,
    region: *const f64,
    width: usize,
    height: usize,
    seed: u64,
    counts: *mut u64,
    len: usize,
    outside: *mut u64,
) -> LlStatus {
    guard(|| {
        let def = series_arg(s)?;
        if region.is_null() || counts.is_null() || outside.is_null() {
            return Err(null());
        }
        if width.checked_mul(height).is_none_or(|n| n > len) {
            return Err(Fail(LlStatus::BufferTooSmall, format!("need {width}x{height} counts, buffer holds {len}")));
        }
        let r = std::slice::from_raw_parts(region, 4);
        let params =
            RasterParams { terms, samples, region: Region::new(r[0], r[1], r[2], r[3])?, width, height, seed };
        let g = raster(def, &params)?;
        std::slice::from_raw_parts_mut(counts, g.counts.len()).copy_from_slice(&g.counts);
        *outside = g.outside;
        Ok(())
    })
}

/// Runs the verification suite. `only` may be NULL, a criterion number or a module
/// name. `passed` receives 1 when every selected criterion holds.
///
/// # Safety
/// `only` must be NULL or nul-terminated; `passed` and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_verify(only: *const c_char, passed: *mut i32, out: *mut *mut c_char) -> LlStatus {
    guard(|| {
        if passed.is_null() {
            return Err(null());
        }
        let only = if only.is_null() { None } else { Some(str_arg(only)?.to_string()) };
        let report = run_verify(&VerifyOptions { only, ..Default::default() })?;
        *passed = report.pass as i32;
        put_json(out, report.to_json())
    })
}
