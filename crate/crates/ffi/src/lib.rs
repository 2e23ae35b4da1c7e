//! C ABI over `mpes-core`.
//!
//! Every fallible call returns an [`MpesStatus`]; on failure the message is
//! kept per thread and read with [`mpes_last_error`]. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mpes_core::config::ExperimentConfig;
use mpes_core::device::{self, MemristorState, NoiseSpec, PowerLawParams, PulseOutcome};
use mpes_core::metrics;
use mpes_core::model::{run, RunResult};
use mpes_core::signals;
use mpes_core::synapse::{ArrayInit, Polarity, SynapseArray};
use mpes_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpesStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DimensionMismatch = 4,
    Numeric = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Power-law device parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpesDeviceParams {
    pub r_zero: f64,
    pub r_one: f64,
    pub a: f64,
    pub b: f64,
}

impl From<MpesDeviceParams> for PowerLawParams {
    fn from(p: MpesDeviceParams) -> Self {
        PowerLawParams {
            r_zero: p.r_zero,
            r_one: p.r_one,
            a: p.a,
            b: p.b,
        }
    }
}

impl From<PowerLawParams> for MpesDeviceParams {
    fn from(p: PowerLawParams) -> Self {
        MpesDeviceParams {
            r_zero: p.r_zero,
            r_one: p.r_one,
            a: p.a,
            b: p.b,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpesMetrics {
    pub mse: f64,
    pub spearman_rho: f64,
    pub ratio: f64,
}

/// One device with its own random stream.
pub struct MpesMemristor {
    state: MemristorState,
    rng: ChaCha8Rng,
}

/// Differential-pair synapse array with its own random stream.
pub struct MpesSynapseArray {
    array: SynapseArray,
    rng: ChaCha8Rng,
}

pub struct MpesConfig {
    cfg: ExperimentConfig,
}

pub struct MpesRunResult {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MpesStatus {
    match err {
        Error::InvalidArgument(_) => MpesStatus::InvalidArgument,
        Error::Domain(_) => MpesStatus::Domain,
        Error::DimensionMismatch { .. } => MpesStatus::DimensionMismatch,
        Error::Singular(_) | Error::Numeric(_) => MpesStatus::Numeric,
        Error::Config(_) => MpesStatus::Config,
        Error::Io(_) => MpesStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> MpesStatus
where
    F: FnOnce() -> Result<(), (MpesStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpesStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mpes".into());
            MpesStatus::Panic
        }
    }
}

fn core<T>(r: mpes_core::Result<T>) -> Result<T, (MpesStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MpesStatus, String) {
    (MpesStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MpesStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (MpesStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out<T>(p: *mut T, value: T, what: &str) -> Result<(), (MpesStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MpesStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MpesStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (MpesStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpes_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn mpes_device_params_default() -> MpesDeviceParams {
    PowerLawParams::default().into()
}

/// `R(n, v)`.
///
/// # Safety
/// `out_r` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn mpes_resistance_after_pulses(
    params: MpesDeviceParams,
    n: f64,
    v: f64,
    out_r: *mut f64,
) -> MpesStatus {
    guard(|| {
        let r = core(device::resistance_after_pulses(n, v, &params.into()))?;
        out(out_r, r, "out_r")
    })
}

/// Pulse count that yields resistance `r` at voltage `v`.
///
/// # Safety
/// `out_n` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn mpes_pulse_count_from_resistance(
    params: MpesDeviceParams,
    r: f64,
    v: f64,
    out_n: *mut f64,
) -> MpesStatus {
    guard(|| {
        let n = core(device::pulse_count_from_resistance(r, v, &params.into()))?;
        out(out_n, n, "out_n")
    })
}

/// # Safety
/// `out_device` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mpes_memristor_new(
    params: MpesDeviceParams,
    resistance: f64,
    seed: u64,
    out_device: *mut *mut MpesMemristor,
) -> MpesStatus {
    guard(|| {
        let state = core(MemristorState::new(resistance, params.into()))?;
        let handle = Box::new(MpesMemristor {
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
        });
        out(out_device, Box::into_raw(handle), "out_device")
    })
}

/// Applies one SET pulse. `*out_applied` is 1 when the pulse changed the
/// state and 0 when a degenerate noise draw skipped it.
///
/// # Safety
/// `device` must come from [`mpes_memristor_new`]; `out_applied` may be null.
#[no_mangle]
pub unsafe extern "C" fn mpes_memristor_pulse(
    device: *mut MpesMemristor,
    v: f64,
    noise_fraction: f64,
    out_applied: *mut i32,
) -> MpesStatus {
    guard(|| {
        let d = deref_mut(device, "device")?;
        let noise = if noise_fraction > 0.0 {
            core(NoiseSpec::new(noise_fraction))?
        } else {
            NoiseSpec::disabled()
        };
        let outcome = d.state.apply_set_pulse(v, &noise, &mut d.rng);
        if !out_applied.is_null() {
            out_applied.write((outcome == PulseOutcome::Applied) as i32);
        }
        Ok(())
    })
}

/// # Safety
/// `device` must come from [`mpes_memristor_new`].
#[no_mangle]
pub unsafe extern "C" fn mpes_memristor_resistance(
    device: *const MpesMemristor,
    out_r: *mut f64,
) -> MpesStatus {
    guard(|| {
        let d = deref(device, "device")?;
        out(out_r, d.state.resistance, "out_r")
    })
}

/// # Safety
/// `device` must come from [`mpes_memristor_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpes_memristor_free(device: *mut MpesMemristor) {
    if !device.is_null() {
        drop(Box::from_raw(device));
    }
}

/// Array of `n_post x n_pre` pairs initialised around `base_resistance`.
///
/// # Safety
/// `out_array` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mpes_synapse_array_new(
    n_pre: usize,
    n_post: usize,
    gain: f64,
    params: MpesDeviceParams,
    base_resistance: f64,
    spread: f64,
    seed: u64,
    out_array: *mut *mut MpesSynapseArray,
) -> MpesStatus {
    guard(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = ArrayInit {
            base_resistance,
            spread,
            params: params.into(),
        };
        let array = core(SynapseArray::init(n_pre, n_post, gain, &init, &mut rng))?;
        out(
            out_array,
            Box::into_raw(Box::new(MpesSynapseArray { array, rng })),
            "out_array",
        )
    })
}

/// Pulses `M+` of pair `(post, pre)` when `positive` is nonzero, else `M-`.
///
/// # Safety
/// `array` must come from [`mpes_synapse_array_new`].
#[no_mangle]
pub unsafe extern "C" fn mpes_synapse_array_pulse(
    array: *mut MpesSynapseArray,
    post: usize,
    pre: usize,
    positive: i32,
    v: f64,
    noise_fraction: f64,
) -> MpesStatus {
    guard(|| {
        let a = deref_mut(array, "array")?;
        if post >= a.array.n_post() || pre >= a.array.n_pre() {
            return Err((
                MpesStatus::InvalidArgument,
                format!("pair ({post}, {pre}) out of range"),
            ));
        }
        let noise = if noise_fraction > 0.0 {
            core(NoiseSpec::new(noise_fraction))?
        } else {
            NoiseSpec::disabled()
        };
        let polarity = if positive != 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        a.array.pulse(post, pre, polarity, v, &noise, &mut a.rng);
        Ok(())
    })
}

/// Copies the row-major `n_post x n_pre` weights into `out_weights`.
///
/// # Safety
/// `array` must come from [`mpes_synapse_array_new`]; `out_weights` must hold
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpes_synapse_array_weights(
    array: *const MpesSynapseArray,
    out_weights: *mut f64,
    len: usize,
) -> MpesStatus {
    guard(|| {
        let a = deref(array, "array")?;
        let w = a.array.weights();
        if len != w.len() {
            return Err((
                MpesStatus::DimensionMismatch,
                format!("expected {} weights, buffer holds {len}", w.len()),
            ));
        }
        if out_weights.is_null() {
            return Err(null("out_weights"));
        }
        std::slice::from_raw_parts_mut(out_weights, len).copy_from_slice(w);
        Ok(())
    })
}

/// # Safety
/// `array` must come from [`mpes_synapse_array_new`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpes_synapse_array_free(array: *mut MpesSynapseArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Config holding the default experiment.
#[no_mangle]
pub extern "C" fn mpes_config_new() -> *mut MpesConfig {
    Box::into_raw(Box::new(MpesConfig {
        cfg: ExperimentConfig::default(),
    }))
}

/// Applies one setting using the same keys as the config file.
///
/// # Safety
/// `config` must come from [`mpes_config_new`]; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mpes_config_set(
    config: *mut MpesConfig,
    key: *const c_char,
    value: *const c_char,
) -> MpesStatus {
    guard(|| {
        let c = deref_mut(config, "config")?;
        let key = c_str(key, "key")?;
        let value = c_str(value, "value")?;
        core(c.cfg.set(key, value))
    })
}

/// # Safety
/// `config` must come from [`mpes_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpes_config_free(config: *mut MpesConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a full simulation.
///
/// # Safety
/// `config` must come from [`mpes_config_new`]; `out_result` must be null or
/// point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mpes_run(
    config: *const MpesConfig,
    out_result: *mut *mut MpesRunResult,
) -> MpesStatus {
    guard(|| {
        let c = deref(config, "config")?;
        let result = core(run(&c.cfg))?;
        out(
            out_result,
            Box::into_raw(Box::new(MpesRunResult { result })),
            "out_result",
        )
    })
}

/// # Safety
/// `result` must come from [`mpes_run`].
#[no_mangle]
pub unsafe extern "C" fn mpes_run_metrics(
    result: *const MpesRunResult,
    out_metrics: *mut MpesMetrics,
) -> MpesStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let m = r.result.metrics;
        out(
            out_metrics,
            MpesMetrics {
                mse: m.mse,
                spearman_rho: m.spearman_rho,
                ratio: m.ratio,
            },
            "out_metrics",
        )
    })
}

/// Number of applied SET pulses in the run.
///
/// # Safety
/// `result` must come from [`mpes_run`].
#[no_mangle]
pub unsafe extern "C" fn mpes_run_pulse_count(
    result: *const MpesRunResult,
    out_count: *mut u64,
) -> MpesStatus {
    guard(|| {
        let r = deref(result, "result")?;
        out(out_count, r.result.counters.pulses_applied, "out_count")
    })
}

/// # Safety
/// `result` must come from [`mpes_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpes_run_result_free(result: *mut MpesRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// MSE and Spearman rho of two row-major `len / dim x dim` series.
///
/// # Safety
/// `reference` and `estimate` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpes_metrics(
    reference: *const f64,
    estimate: *const f64,
    len: usize,
    dim: usize,
    out_metrics: *mut MpesMetrics,
) -> MpesStatus {
    guard(|| {
        let r = slice(reference, len, "reference")?;
        let e = slice(estimate, len, "estimate")?;
        let m = core(metrics::report(r, e, dim))?;
        out(
            out_metrics,
            MpesMetrics {
                mse: m.mse,
                spearman_rho: m.spearman_rho,
                ratio: m.ratio,
            },
            "out_metrics",
        )
    })
}

/// Writes the `dim`-dimensional sine input at time `t` into `out_values`.
///
/// # Safety
/// `out_values` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn mpes_sine_signal(t: f64, dim: usize, out_values: *mut f64) -> MpesStatus {
    guard(|| {
        if dim == 0 {
            return Err((MpesStatus::InvalidArgument, "dim must be >= 1".into()));
        }
        if out_values.is_null() {
            return Err(null("out_values"));
        }
        let v = signals::sine_signal(t, dim);
        std::slice::from_raw_parts_mut(out_values, dim).copy_from_slice(&v);
        Ok(())
    })
}
