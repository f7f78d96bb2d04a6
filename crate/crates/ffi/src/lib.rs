//! C ABI for the `mncc` crate.
//!
//! Every fallible function returns an [`MnccStatus`]; on failure a message
//! is available from [`mncc_last_error_message`] on the same thread.
//! Objects are opaque handles created by `*_new`/`*_load_csv`/`mncc_run_test`
//! and released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mncc::bootstrap::BootstrapRule;
use mncc::cli::{run_test, TestOptions};
use mncc::io::{load_csv, report_to_json, Transform};
use mncc::teststat::{Method, TestReport};
use mncc::{MnccError, Sample};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnccStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    DegenerateWeights = 3,
    SingularMoments = 4,
    EmptyGrid = 5,
    CalibrationFailed = 6,
    Numerical = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&MnccError> for MnccStatus {
    fn from(e: &MnccError) -> Self {
        match e.root() {
            MnccError::Domain(_) => MnccStatus::Domain,
            MnccError::InvalidArgument(_) => MnccStatus::InvalidArgument,
            MnccError::DegenerateWeights { .. } => MnccStatus::DegenerateWeights,
            MnccError::SingularMoments { .. } => MnccStatus::SingularMoments,
            MnccError::EmptyGrid { .. } => MnccStatus::EmptyGrid,
            MnccError::CalibrationFailed { .. } => MnccStatus::CalibrationFailed,
            MnccError::Numerical(_) => MnccStatus::Numerical,
            MnccError::Parse { .. } => MnccStatus::Parse,
            MnccError::Io(_) => MnccStatus::Io,
            MnccError::AtPoint { .. } => MnccStatus::Numerical,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnccMethod {
    Asymptotic = 0,
    Normal = 1,
    Bootstrap = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnccTransform {
    None = 0,
    NormalCdf = 1,
    Rank = 2,
}

/// Test options. `h` or `h0` ≤ 0 selects the default for the sample size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MnccTestOptions {
    pub h: f64,
    pub h0: f64,
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub seed: u64,
    pub method: MnccMethod,
    /// Monte-Carlo draws of the null law.
    pub mc: usize,
    /// Bootstrap resamples.
    pub resamples: usize,
}

/// Opaque sample handle.
pub struct MnccSample(Sample);

/// Opaque report handle.
pub struct MnccReport(TestReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), MnccStatus>) -> MnccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MnccStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            MnccStatus::Panic
        }
    }
}

fn fail(e: MnccError) -> MnccStatus {
    let status = MnccStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null_pointer(what: &str) -> MnccStatus {
    set_error(format!("{what} is null"));
    MnccStatus::NullPointer
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mncc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Options with the library defaults.
#[no_mangle]
pub extern "C" fn mncc_test_options_default() -> MnccTestOptions {
    let d = TestOptions::default();
    MnccTestOptions {
        h: 0.0,
        h0: 0.0,
        p: d.p,
        q: d.q,
        alpha: d.alpha,
        seed: d.seed,
        method: MnccMethod::Asymptotic,
        mc: d.mc,
        resamples: d.resamples,
    }
}

/// Build a sample from row-major buffers of `n*dx`, `n*dy` and `n*dz` values.
///
/// # Safety
/// The buffers must hold the stated number of values and `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mncc_sample_new(
    n: usize,
    dx: usize,
    dy: usize,
    dz: usize,
    x: *const f64,
    y: *const f64,
    z: *const f64,
    out: *mut *mut MnccSample,
) -> MnccStatus {
    guard(|| {
        if x.is_null() || y.is_null() || z.is_null() {
            return Err(null_pointer("data buffer"));
        }
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let copy = |p: *const f64, d: usize| std::slice::from_raw_parts(p, n * d).to_vec();
        let s = Sample::new(dx, dy, dz, copy(x, dx), copy(y, dy), copy(z, dz)).map_err(fail)?;
        *out = Box::into_raw(Box::new(MnccSample(s)));
        Ok(())
    })
}

/// Load a sample from a CSV file with header columns `x1.., y1.., z1..`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mncc_sample_load_csv(
    path: *const c_char,
    dx: usize,
    dy: usize,
    dz: usize,
    transform: MnccTransform,
    out: *mut *mut MnccSample,
) -> MnccStatus {
    guard(|| {
        if path.is_null() {
            return Err(null_pointer("path"));
        }
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(MnccError::InvalidArgument("path is not UTF-8".into())))?;
        let t = match transform {
            MnccTransform::None => Transform::None,
            MnccTransform::NormalCdf => Transform::NormalCdf,
            MnccTransform::Rank => Transform::Rank,
        };
        let s = load_csv(path, dx, dy, dz, t).map_err(fail)?;
        *out = Box::into_raw(Box::new(MnccSample(s)));
        Ok(())
    })
}

/// Number of rows, or 0 for NULL.
///
/// # Safety
/// `sample` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_sample_n(sample: *const MnccSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.n())
}

/// # Safety
/// `sample` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mncc_sample_free(sample: *mut MnccSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Run the test.
///
/// # Safety
/// `sample` must be a live handle, `options` NULL (defaults) or valid, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mncc_run_test(
    sample: *const MnccSample,
    options: *const MnccTestOptions,
    out: *mut *mut MnccReport,
) -> MnccStatus {
    guard(|| {
        let sample = sample.as_ref().ok_or_else(|| null_pointer("sample"))?;
        if out.is_null() {
            return Err(null_pointer("out"));
        }
        let o = options.as_ref().copied().unwrap_or_else(|| mncc_test_options_default());
        let opts = TestOptions {
            p: o.p,
            q: o.q,
            alpha: o.alpha,
            method: match o.method {
                MnccMethod::Asymptotic => Method::Asymptotic,
                MnccMethod::Normal => Method::Normal,
                MnccMethod::Bootstrap => Method::Bootstrap,
            },
            h: (o.h > 0.0).then_some(o.h),
            h0: (o.h0 > 0.0).then_some(o.h0),
            seed: o.seed,
            mc: o.mc,
            resamples: o.resamples,
            rule: BootstrapRule::Quantile,
            ..TestOptions::default()
        };
        if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
            return Err(fail(MnccError::InvalidArgument(format!(
                "alpha {} outside (0, 1)",
                opts.alpha
            ))));
        }
        let report = run_test(&sample.0, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(MnccReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_free(report: *mut MnccReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Test statistic, NaN for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_statistic(report: *const MnccReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.statistic)
}

/// p-value, NaN for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_p_value(report: *const MnccReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.p_value)
}

/// Critical value, NaN when absent.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_critical_value(report: *const MnccReport) -> f64 {
    report.as_ref().and_then(|r| r.0.critical_value).unwrap_or(f64::NAN)
}

/// 1 if rejected, 0 if not, -1 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_reject(report: *const MnccReport) -> c_int {
    report.as_ref().map_or(-1, |r| r.0.reject as c_int)
}

/// Number of evaluation points, 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_n_points(report: *const MnccReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.per_point.len())
}

/// Density estimate and `ρ̂` at evaluation point `k`.
///
/// # Safety
/// `report` must be a live handle; the output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_point(
    report: *const MnccReport,
    k: usize,
    fz_hat: *mut f64,
    rho: *mut f64,
) -> MnccStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null_pointer("report"))?;
        let p =
            r.0.per_point
                .get(k)
                .ok_or_else(|| fail(MnccError::InvalidArgument(format!("point {k} out of range"))))?;
        if let Some(f) = fz_hat.as_mut() {
            *f = p.fz_hat;
        }
        if let Some(v) = rho.as_mut() {
            *v = p.rho;
        }
        Ok(())
    })
}

/// The full report as JSON; release with [`mncc_string_free`]. NULL on error.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mncc_report_to_json(report: *const MnccReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        null_pointer("report");
        return ptr::null_mut();
    };
    match report_to_json(&r.0) {
        Ok(s) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn mncc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Bandwidth for sample size `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mncc_select_bandwidth(n: usize, out: *mut f64) -> MnccStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_pointer("out"))?;
        *out = mncc::tuning::select_bandwidth(n).map_err(fail)?;
        Ok(())
    })
}

/// Kernel constant `c_K(d) = (2√π)^d`.
#[no_mangle]
pub extern "C" fn mncc_c_k(d: usize) -> f64 {
    mncc::kernel::c_k(d)
}

/// Monte-Carlo `level`-quantile of the null law for `n_z` grid points.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mncc_null_quantile(
    n_z: usize,
    p: usize,
    q: usize,
    level: f64,
    mc: usize,
    seed: u64,
    out: *mut f64,
) -> MnccStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_pointer("out"))?;
        *out = mncc::nulldist::null_quantile(n_z, p, q, level, mc, seed).map_err(fail)?;
        Ok(())
    })
}
