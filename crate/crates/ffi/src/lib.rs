//! C ABI for the `qpt` library.
//!
//! Process matrices and experiments are opaque handles owned by the caller
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`QptStatus`]; on failure a message is available from
//! [`qpt_last_error`] on the same thread. Panics never cross the boundary.
//!
//! Matrices are passed as row-major arrays of `(re, im)` pairs: 32 doubles
//! for χ (rows and columns ordered I, X, Y, Z) and 8 doubles for a 2×2
//! operator.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use qpt::experiment::reconstruct_raw;
use qpt::io::{ChiFile, ExperimentFile, Provenance};
use qpt::{
    apply_channel, constraint_report, fit_physical, kraus_from_chi, run_pipeline_with,
    simulate_experiment, Channel, ChiStatus, ConstraintReport, DensityMatrix, ExperimentRecord,
    FitConfig, FitMode, FitResult, Mat2, Mat4, NoiseSpec, ProcessMatrix, QptError,
};

/// Result of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QptStatus {
    Ok = 0,
    InvalidArgument = 1,
    NotHermitian = 2,
    Validation = 3,
    NotPhysical = 4,
    /// The probe set or β matrix is singular.
    Singular = 5,
    /// The fit did not reach feasibility; the best iterate is still returned.
    FitFailed = 6,
    Format = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QptFitMode {
    General = 0,
    TracePreserving = 1,
}

impl From<QptFitMode> for FitMode {
    fn from(m: QptFitMode) -> Self {
        match m {
            QptFitMode::General => FitMode::General,
            QptFitMode::TracePreserving => FitMode::TracePreserving,
        }
    }
}

/// Opaque process matrix.
pub struct QptProcess(ProcessMatrix);

/// Opaque experiment record.
pub struct QptExperiment(ExperimentRecord);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QptConstraintReport {
    pub trace_chi: f64,
    pub p_eig_plus: f64,
    pub p_eig_minus: f64,
    pub radical: f64,
    pub tp_residuals: [f64; 3],
    pub trace_identity_residual: f64,
    pub min_chi_eigenvalue: f64,
    pub eq10_satisfied: bool,
    pub tp_consistent: bool,
}

impl From<ConstraintReport> for QptConstraintReport {
    fn from(r: ConstraintReport) -> Self {
        QptConstraintReport {
            trace_chi: r.trace_chi,
            p_eig_plus: r.p_eig_plus,
            p_eig_minus: r.p_eig_minus,
            radical: r.radical,
            tp_residuals: r.tp_residuals,
            trace_identity_residual: r.trace_identity_residual,
            min_chi_eigenvalue: r.min_chi_eigenvalue,
            eq10_satisfied: r.eq10_satisfied,
            tp_consistent: r.tp_consistent,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QptFitDiagnostics {
    pub objective: f64,
    pub iterations: usize,
    pub constraint_violation: f64,
    pub converged: bool,
    pub restarted: bool,
}

impl From<&FitResult> for QptFitDiagnostics {
    fn from(f: &FitResult) -> Self {
        QptFitDiagnostics {
            objective: f.objective,
            iterations: f.iterations,
            constraint_violation: f.constraint_violation,
            converged: f.converged,
            restarted: f.restarted,
        }
    }
}

/// Preparation and detection imperfections for a simulated experiment.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QptNoise {
    pub shot_noise: bool,
    /// Radians, one per probe in H, V, D, R order.
    pub preparation_rotation: [f64; 4],
    /// Fraction in [0, 1], one per probe.
    pub preparation_depolarization: [f64; 4],
}

impl From<&QptNoise> for NoiseSpec {
    fn from(n: &QptNoise) -> Self {
        NoiseSpec {
            shot_noise: n.shot_noise,
            preparation_rotation: n.preparation_rotation,
            preparation_depolarization: n.preparation_depolarization,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Lib(QptError),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<QptError> for Failure {
    fn from(e: QptError) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &QptError) -> QptStatus {
    match e {
        QptError::InvalidArgument(_) => QptStatus::InvalidArgument,
        QptError::NotHermitian { .. } => QptStatus::NotHermitian,
        QptError::Validation(_) => QptStatus::Validation,
        QptError::NotPhysical { .. } => QptStatus::NotPhysical,
        QptError::TomographicallyIncomplete { .. } => QptStatus::Singular,
        QptError::FitFailed { .. } => QptStatus::FitFailed,
        QptError::Format(_) => QptStatus::Format,
        QptError::Io(_) => QptStatus::Io,
    }
}

fn set_last_error(message: Option<String>) {
    let message = message.map(|m| CString::new(m.replace('\0', " ")).expect("no interior NUL"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QptStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => (QptStatus::Ok, None),
        Ok(Err(Failure::Lib(e))) => (status_of(&e), Some(e.to_string())),
        Ok(Err(Failure::Null(what))) => (QptStatus::NullPointer, Some(format!("{what} is NULL"))),
        Ok(Err(Failure::Utf8(what))) => (
            QptStatus::InvalidArgument,
            Some(format!("{what} is not valid UTF-8")),
        ),
        Err(_) => (QptStatus::Panic, Some("internal panic".to_string())),
    };
    set_last_error(message);
    status
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn read_doubles<'a>(
    p: *const f64,
    n: usize,
    what: &'static str,
) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn write_doubles<'a>(
    p: *mut f64,
    n: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

fn mat4_from(v: &[f64]) -> Mat4 {
    Mat4::from_fn(|r, c| {
        let k = 2 * (4 * r + c);
        Complex64::new(v[k], v[k + 1])
    })
}

fn mat2_from(v: &[f64]) -> Mat2 {
    Mat2::from_fn(|r, c| {
        let k = 2 * (2 * r + c);
        Complex64::new(v[k], v[k + 1])
    })
}

fn store4(m: &Mat4, out: &mut [f64]) {
    for r in 0..4 {
        for c in 0..4 {
            let k = 2 * (4 * r + c);
            out[k] = m[(r, c)].re;
            out[k + 1] = m[(r, c)].im;
        }
    }
}

fn store2(m: &Mat2, out: &mut [f64]) {
    for r in 0..2 {
        for c in 0..2 {
            let k = 2 * (2 * r + c);
            out[k] = m[(r, c)].re;
            out[k + 1] = m[(r, c)].im;
        }
    }
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Lib(QptError::Format("string contains NUL".into())))
}

/// Message describing the most recent failed call on this thread, or NULL
/// if the most recent call succeeded. Valid until the next call into the
/// library on this thread; do not free.
#[no_mangle]
pub extern "C" fn qpt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a process matrix from 32 doubles. With `require_physical` the
/// matrix must be Hermitian, positive semidefinite and satisfy the P bound.
///
/// # Safety
/// `chi` must point to 32 readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_from_array(
    chi: *const f64,
    require_physical: bool,
    out: *mut *mut QptProcess,
) -> QptStatus {
    guard(|| {
        let m = mat4_from(read_doubles(chi, 32, "chi")?);
        let out = out_ptr(out, "out")?;
        let p = if require_physical {
            ProcessMatrix::physical(m)?
        } else {
            ProcessMatrix::raw(m)?
        };
        *out = into_handle(QptProcess(p));
        Ok(())
    })
}

/// Copies χ into 32 doubles.
///
/// # Safety
/// `process` must be a live handle and `chi_out` must point to 32 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_to_array(
    process: *const QptProcess,
    chi_out: *mut f64,
) -> QptStatus {
    guard(|| {
        let p = deref(process, "process")?;
        store4(p.0.matrix(), write_doubles(chi_out, 32, "chi_out")?);
        Ok(())
    })
}

/// Whether the handle carries a validated physical χ.
///
/// # Safety
/// `process` must be a live handle or NULL (which yields false).
#[no_mangle]
pub unsafe extern "C" fn qpt_process_is_physical(process: *const QptProcess) -> bool {
    process
        .as_ref()
        .is_some_and(|p| p.0.status() == ChiStatus::Physical)
}

/// Analytic χ of a named channel, e.g. `"hadamard"`, `"polarizer-z"`,
/// `"rotation-x:0.3"`, `"amplitude-damping:0.36"`, `"depolarizing:0.2"` or
/// `"attenuator:0.7"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_canonical(
    name: *const c_char,
    out: *mut *mut QptProcess,
) -> QptStatus {
    guard(|| {
        let channel: Channel = c_str(name, "name")?.parse()?;
        let out = out_ptr(out, "out")?;
        *out = into_handle(QptProcess(channel.chi()?));
        Ok(())
    })
}

/// Constraint diagnostics of χ at the given tolerance.
///
/// # Safety
/// `process` must be a live handle and `report` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_report(
    process: *const QptProcess,
    tolerance: f64,
    report: *mut QptConstraintReport,
) -> QptStatus {
    guard(|| {
        let p = deref(process, "process")?;
        let report = out_ptr(report, "report")?;
        *report = constraint_report(&p.0, tolerance)?.into();
        Ok(())
    })
}

/// Fits the nearest physical χ. On `QPT_STATUS_FIT_FAILED` the best iterate
/// is still stored in `out` and `diagnostics`. `diagnostics` may be NULL.
///
/// # Safety
/// `raw` must be a live handle, `out` a writable handle slot and
/// `diagnostics` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_fit(
    raw: *const QptProcess,
    mode: QptFitMode,
    out: *mut *mut QptProcess,
    diagnostics: *mut QptFitDiagnostics,
) -> QptStatus {
    guard(|| {
        let raw = deref(raw, "raw")?;
        let out = out_ptr(out, "out")?;
        let config = FitConfig {
            mode: mode.into(),
            ..FitConfig::default()
        };
        let (result, failure) = match fit_physical(&raw.0, &config) {
            Ok(r) => (r, None),
            Err(QptError::FitFailed { best }) => {
                let r = (*best).clone();
                (r, Some(QptError::FitFailed { best }))
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(d) = diagnostics.as_mut() {
            *d = (&result).into();
        }
        *out = into_handle(QptProcess(result.chi));
        failure.map_or(Ok(()), |e| Err(e.into()))
    })
}

/// Operation elements of χ, ordered by decreasing weight. Writes up to four
/// operators (8 doubles each) and their weights.
///
/// # Safety
/// `process` must be a live handle, `operators_out` must point to 32
/// writable doubles, `weights_out` to 4 and `count_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_kraus(
    process: *const QptProcess,
    operators_out: *mut f64,
    weights_out: *mut f64,
    count_out: *mut usize,
) -> QptStatus {
    guard(|| {
        let p = deref(process, "process")?;
        let ops = write_doubles(operators_out, 32, "operators_out")?;
        let weights = write_doubles(weights_out, 4, "weights_out")?;
        let count = out_ptr(count_out, "count_out")?;
        let set = kraus_from_chi(&p.0)?;
        for (i, (e, w)) in set.operators().iter().zip(set.weights()).enumerate() {
            store2(e, &mut ops[8 * i..8 * i + 8]);
            weights[i] = *w;
        }
        *count = set.len();
        Ok(())
    })
}

/// Applies the channel to a density matrix (8 doubles in, 8 doubles out).
///
/// # Safety
/// `process` must be a live handle, `rho` must point to 8 readable doubles
/// and `rho_out` to 8 writable ones.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_apply(
    process: *const QptProcess,
    rho: *const f64,
    rho_out: *mut f64,
) -> QptStatus {
    guard(|| {
        let p = deref(process, "process")?;
        let rho = DensityMatrix::new(mat2_from(read_doubles(rho, 8, "rho")?), "")?;
        let out = write_doubles(rho_out, 8, "rho_out")?;
        store2(apply_channel(&p.0, &rho)?.matrix(), out);
        Ok(())
    })
}

/// Parses a χ file document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_from_json(
    json: *const c_char,
    out: *mut *mut QptProcess,
) -> QptStatus {
    guard(|| {
        let file = ChiFile::from_json(c_str(json, "json")?)?;
        let out = out_ptr(out, "out")?;
        *out = into_handle(QptProcess(file.to_process()?));
        Ok(())
    })
}

/// Serializes χ as a χ file document. Free the result with [`qpt_string_free`].
///
/// # Safety
/// `process` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_to_json(
    process: *const QptProcess,
    out: *mut *mut c_char,
) -> QptStatus {
    guard(|| {
        let p = deref(process, "process")?;
        let out = out_ptr(out, "out")?;
        *out = into_c_string(ChiFile::from_process(&p.0, Provenance::new()).to_json())?;
        Ok(())
    })
}

/// # Safety
/// `process` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpt_process_free(process: *mut QptProcess) {
    if !process.is_null() {
        drop(Box::from_raw(process));
    }
}

/// Parses a noise specification such as `"shot,rotation=0.05"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_noise_parse(spec: *const c_char, out: *mut QptNoise) -> QptStatus {
    guard(|| {
        let n: NoiseSpec = c_str(spec, "spec")?.parse()?;
        let out = out_ptr(out, "out")?;
        *out = QptNoise {
            shot_noise: n.shot_noise,
            preparation_rotation: n.preparation_rotation,
            preparation_depolarization: n.preparation_depolarization,
        };
        Ok(())
    })
}

/// Simulates the four-probe experiment on a physical channel. `noise` may
/// be NULL for a noiseless run.
///
/// # Safety
/// `channel` must be a live handle, `noise` NULL or readable and `out` a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_simulate(
    channel: *const QptProcess,
    noise: *const QptNoise,
    n_in: u64,
    seed: u64,
    out: *mut *mut QptExperiment,
) -> QptStatus {
    guard(|| {
        let channel = deref(channel, "channel")?;
        let noise = noise.as_ref().map(NoiseSpec::from).unwrap_or_default();
        let out = out_ptr(out, "out")?;
        *out = into_handle(QptExperiment(simulate_experiment(
            &channel.0, &noise, n_in, seed,
        )?));
        Ok(())
    })
}

/// Parses an experiment document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_from_json(
    json: *const c_char,
    out: *mut *mut QptExperiment,
) -> QptStatus {
    guard(|| {
        let record = ExperimentFile::from_json(c_str(json, "json")?)?.to_record()?;
        let out = out_ptr(out, "out")?;
        *out = into_handle(QptExperiment(record));
        Ok(())
    })
}

/// Serializes an experiment. Free the result with [`qpt_string_free`].
///
/// # Safety
/// `experiment` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_to_json(
    experiment: *const QptExperiment,
    out: *mut *mut c_char,
) -> QptStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let out = out_ptr(out, "out")?;
        *out = into_c_string(ExperimentFile::from_record(&e.0, Provenance::new()).to_json())?;
        Ok(())
    })
}

/// Linear inversion to a raw χ. `beta_condition_out` may be NULL.
///
/// # Safety
/// `experiment` must be a live handle, `out` a writable handle slot and
/// `beta_condition_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_reconstruct(
    experiment: *const QptExperiment,
    assume_ideal_inputs: bool,
    out: *mut *mut QptProcess,
    beta_condition_out: *mut f64,
) -> QptStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let out = out_ptr(out, "out")?;
        let (raw, beta) = reconstruct_raw(&e.0, assume_ideal_inputs)?;
        if let Some(c) = beta_condition_out.as_mut() {
            *c = beta.condition_number();
        }
        *out = into_handle(QptProcess(raw));
        Ok(())
    })
}

/// Reconstruction followed by a physical fit. `diagnostics` and `report`
/// may be NULL.
///
/// # Safety
/// `experiment` must be a live handle, `out` a writable handle slot and the
/// optional pointers NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_run_pipeline(
    experiment: *const QptExperiment,
    assume_ideal_inputs: bool,
    mode: QptFitMode,
    out: *mut *mut QptProcess,
    diagnostics: *mut QptFitDiagnostics,
    report: *mut QptConstraintReport,
) -> QptStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let out = out_ptr(out, "out")?;
        let config = FitConfig {
            mode: mode.into(),
            ..FitConfig::default()
        };
        let result = run_pipeline_with(&e.0, assume_ideal_inputs, &config)?;
        if let Some(d) = diagnostics.as_mut() {
            *d = (&result.fit).into();
        }
        if let Some(r) = report.as_mut() {
            *r = result.report.into();
        }
        *out = into_handle(QptProcess(result.fit.chi));
        Ok(())
    })
}

/// # Safety
/// `experiment` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpt_experiment_free(experiment: *mut QptExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qpt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
