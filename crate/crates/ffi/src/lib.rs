// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over `tvwin`.
//!
//! Every function returns a [`TvwStatus`]. On failure a description is kept
//! per thread and can be copied out with [`tvw_last_error_message`]. Output
//! buffers are written only on success. Timestamps may be passed as NULL, in
//! which case samples are taken one time unit apart.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use tvwin::monitor::{mad_sigma, window_residual_sigma};
use tvwin::{
    compute_merge_path, select_lambda, solution_at_lambda, CuttingPolicy, SelectorConfig,
    StreamConfig, StreamState, TvError, WindowSamples,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RejectedSample = 3,
    CorruptedState = 4,
    UndefinedRve = 5,
    Panic = 6,
}

/// How a stream picks the cutting point before each slide.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvwCutting {
    /// The lambda chosen by the last restore; `value` is ignored.
    PreviousSelection = 0,
    /// `value` is the cutting point.
    Fixed = 1,
    /// `value` in `[0, 1]` is a quantile of the current merge values.
    Quantile = 2,
}

/// Opaque sliding-window state.
pub struct TvwStream {
    state: StreamState,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &TvError) -> TvwStatus {
    match err {
        TvError::Contract(_) | TvError::InvalidConfig(_) => TvwStatus::InvalidArgument,
        TvError::RejectedSample(_) => TvwStatus::RejectedSample,
        TvError::CorruptedState(_) => TvwStatus::CorruptedState,
        TvError::UndefinedRve => TvwStatus::UndefinedRve,
    }
}

struct Failure(TvwStatus, String);

impl From<TvError> for Failure {
    fn from(e: TvError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TvwStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TvwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TvwStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            TvwStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be NULL or point to `n` readable values.
unsafe fn input<'a>(ptr: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, n))
}

/// # Safety
/// `ptr` must be NULL or point to `n` writable values.
unsafe fn output<'a, T>(ptr: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, n))
}

/// # Safety
/// As for [`input`]; `t` may be NULL.
unsafe fn window(y: *const f64, t: *const f64, n: usize) -> Result<WindowSamples, Failure> {
    let y = input(y, n, "y")?.to_vec();
    if t.is_null() {
        Ok(WindowSamples::uniform(y, 1.0)?)
    } else {
        Ok(WindowSamples::new(y, input(t, n, "t")?.to_vec())?)
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn tvw_status_str(status: TvwStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TvwStatus::Ok => c"ok",
        TvwStatus::NullPointer => c"null pointer",
        TvwStatus::InvalidArgument => c"invalid argument",
        TvwStatus::RejectedSample => c"rejected sample",
        TvwStatus::CorruptedState => c"corrupted state",
        TvwStatus::UndefinedRve => c"undefined RVE",
        TvwStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length without the terminator.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tvw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            let out = slice::from_raw_parts_mut(buf.cast::<u8>(), len);
            out[..n].copy_from_slice(&e[..n]);
            out[n] = 0;
        }
        e.len()
    })
}

/// Restores `n` samples at a fixed `lambda` into `u_out`.
///
/// # Safety
/// `y` and `u_out` hold `n` values; `t` is NULL or holds `n` values.
#[no_mangle]
pub unsafe extern "C" fn tvw_denoise(
    y: *const f64,
    t: *const f64,
    n: usize,
    lambda: f64,
    u_out: *mut f64,
) -> TvwStatus {
    guard(|| {
        let w = window(y, t, n)?;
        let path = compute_merge_path(&w)?;
        let u = solution_at_lambda(&w, &path, lambda)?.to_signal();
        output(u_out, n, "u_out")?.copy_from_slice(&u);
        Ok(())
    })
}

/// Restores at an automatically selected lambda; `lambda_out` may be NULL.
///
/// # Safety
/// As for [`tvw_denoise`]; `lambda_out` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tvw_denoise_auto(
    y: *const f64,
    t: *const f64,
    n: usize,
    q: usize,
    u_out: *mut f64,
    lambda_out: *mut f64,
) -> TvwStatus {
    guard(|| {
        let w = window(y, t, n)?;
        let path = compute_merge_path(&w)?;
        let lambda = select_lambda(&path, &w, &SelectorConfig::plateau(q))?;
        let u = solution_at_lambda(&w, &path, lambda)?.to_signal();
        output(u_out, n, "u_out")?.copy_from_slice(&u);
        if !lambda_out.is_null() {
            *lambda_out = lambda;
        }
        Ok(())
    })
}

/// Writes the merge value of each of the `n - 1` boundaries to
/// `lambdas_out` and, if `drops_out` is not NULL, the extremum-count drop of
/// each merge.
///
/// # Safety
/// `lambdas_out` (and `drops_out` when given) hold `n - 1` values.
#[no_mangle]
pub unsafe extern "C" fn tvw_merge_path(
    y: *const f64,
    t: *const f64,
    n: usize,
    lambdas_out: *mut f64,
    drops_out: *mut u8,
) -> TvwStatus {
    guard(|| {
        let w = window(y, t, n)?;
        let path = compute_merge_path(&w)?;
        output(lambdas_out, n - 1, "lambdas_out")?.copy_from_slice(path.lambdas());
        if !drops_out.is_null() {
            output(drops_out, n - 1, "drops_out")?.copy_from_slice(path.g_drops());
        }
        Ok(())
    })
}

/// Robust noise scale from scaled first differences.
///
/// # Safety
/// `y` holds `n` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tvw_mad_sigma(y: *const f64, n: usize, out: *mut f64) -> TvwStatus {
    guard(|| {
        let s = mad_sigma(input(y, n, "y")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s;
        Ok(())
    })
}

/// Creates a stream over an initial window of `m >= 4` samples.
///
/// # Safety
/// `y` holds `m` values, `t` is NULL or holds `m` values, `out` is writable.
/// The handle must be released with [`tvw_stream_free`].
#[no_mangle]
pub unsafe extern "C" fn tvw_stream_new(
    y: *const f64,
    t: *const f64,
    m: usize,
    cutting: TvwCutting,
    value: f64,
    out: *mut *mut TvwStream,
) -> TvwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cutting = match cutting {
            TvwCutting::PreviousSelection => CuttingPolicy::PreviousSelection,
            TvwCutting::Fixed => CuttingPolicy::Fixed(value),
            TvwCutting::Quantile => CuttingPolicy::Quantile(value),
        };
        let cfg = StreamConfig {
            cutting,
            epsilon_lambda: None,
        };
        let state = StreamState::new(window(y, t, m)?, cfg)?;
        *out = Box::into_raw(Box::new(TvwStream { state }));
        Ok(())
    })
}

/// Releases a stream; NULL is ignored.
///
/// # Safety
/// `stream` is NULL or a live handle from [`tvw_stream_new`].
#[no_mangle]
pub unsafe extern "C" fn tvw_stream_free(stream: *mut TvwStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Window length of a stream, 0 for NULL.
///
/// # Safety
/// `stream` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvw_stream_len(stream: *const TvwStream) -> usize {
    stream.as_ref().map_or(0, |s| s.state.window().len())
}

/// Drops the oldest sample and appends `(y, t)`. A rejected sample leaves
/// the stream unchanged.
///
/// # Safety
/// `stream` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvw_stream_slide(stream: *mut TvwStream, y: f64, t: f64) -> TvwStatus {
    guard(|| {
        let s = stream.as_mut().ok_or_else(|| null("stream"))?;
        s.state.slide(y, t)?;
        Ok(())
    })
}

/// Selects lambda on the current window and restores it. Each output may be
/// NULL; `u_out` holds the window length when given.
///
/// # Safety
/// `stream` is a live handle; outputs are NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tvw_stream_restore(
    stream: *mut TvwStream,
    q: usize,
    u_out: *mut f64,
    lambda_out: *mut f64,
    sigma_out: *mut f64,
) -> TvwStatus {
    guard(|| {
        let s = stream.as_mut().ok_or_else(|| null("stream"))?;
        let (lambda, seg) = s.state.restore_current(&SelectorConfig::plateau(q))?;
        let u = seg.to_signal();
        let sigma = window_residual_sigma(s.state.window(), &u)?;
        if !u_out.is_null() {
            output(u_out, u.len(), "u_out")?.copy_from_slice(&u);
        }
        if !lambda_out.is_null() {
            *lambda_out = lambda;
        }
        if !sigma_out.is_null() {
            *sigma_out = sigma;
        }
        Ok(())
    })
}
