//! C interface to `aircomp-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` (or an
//! operation) and released by the matching `*_free`. Every fallible call
//! returns an [`AcStatus`]; on failure a description is available from
//! [`ac_last_error`] on the same thread until the next failing call.
//! Strings returned through `char **` are owned by the caller and must be
//! released with [`ac_string_free`].
//!
//! Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use aircomp_core::aircomp::TransceiverDesign;
use aircomp_core::channel_sim::{ChannelRealization, DeviceProfile, NoiseModel};
use aircomp_core::feature_model::FeatureStatistics;
use aircomp_core::harness::{run_sweep, write_csv, ExperimentConfig};
use aircomp_core::optimizer::{baseline_mmse_centroid, baseline_random, sca_optimize, AirCompProblem, ScaOptions};
use aircomp_core::rng::{substream, Domain};
use aircomp_core::Error;
use nalgebra::DVector;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Degenerate = 4,
    Solver = 5,
    Config = 6,
    Io = 7,
    Internal = 8,
    Panic = 9,
}

fn status_of(e: &Error) -> AcStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } => AcStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::NotEnoughSamples { .. } | Error::RankDeficient { .. } | Error::ZeroDistance { .. } => {
            AcStatus::InvalidArgument
        }
        Error::DegenerateDesign
        | Error::BeamformerNullsDevice { .. }
        | Error::ZeroChannels
        | Error::DegenerateReference { .. } => AcStatus::Degenerate,
        Error::Solver(_) => AcStatus::Solver,
        Error::Config(_) | Error::Json(_) => AcStatus::Config,
        Error::Io(_) | Error::Csv(_) => AcStatus::Io,
        Error::Internal(_) => AcStatus::Internal,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(AcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: AcStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> AcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside aircomp");
            AcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(AcStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(AcStatus::NullPointer, format!("{what} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(AcStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(AcStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(AcStatus::Internal, "string contains NUL".into()))
}

/// Class statistics: centroids and per-dimension variances.
pub struct AcStats(FeatureStatistics);

/// Channel vectors of all devices.
pub struct AcChannels(ChannelRealization);

/// One design problem: a transmitted feature pair, channels and devices.
pub struct AcProblem(AirCompProblem);

/// A transceiver: beamformer half, steering powers and ZF precoders.
pub struct AcDesign(TransceiverDesign);

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `centroids` is `classes x dims`, `variances` has `dims` entries.
///
/// # Safety
/// Buffers must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_stats_new(
    classes: usize,
    dims: usize,
    centroids: *const f64,
    variances: *const f64,
    out: *mut *mut AcStats,
) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = input(centroids, classes * dims, "centroids")?;
        let v = input(variances, dims, "variances")?;
        let rows = c.chunks(dims.max(1)).map(<[f64]>::to_vec).collect();
        *out = boxed(AcStats(FeatureStatistics::new(rows, v.to_vec())?));
        Ok(())
    })
}

/// Parses `{"L":..,"M":..,"centroids":[[..]],"variances":[..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_stats_from_json(json: *const c_char, out: *mut *mut AcStats) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let stats: FeatureStatistics = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        *out = boxed(AcStats(stats));
        Ok(())
    })
}

/// Discriminant gain of the listed (zero-based) dimensions.
///
/// # Safety
/// `stats` must be a live handle; `dims` must hold `count` entries.
#[no_mangle]
pub unsafe extern "C" fn ac_stats_total_gain(
    stats: *const AcStats,
    dims: *const usize,
    count: usize,
    out: *mut f64,
) -> AcStatus {
    guard(|| {
        let s = deref(stats, "stats")?;
        let d = input(dims, count, "dims")?;
        *out_ptr(out, "out")? = s.0.total_gain(d)?;
        Ok(())
    })
}

/// # Safety
/// `stats` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ac_stats_free(stats: *mut AcStats) {
    release(stats);
}

/// `re` and `im` are `devices x antennas`.
///
/// # Safety
/// Buffers must hold `devices * antennas` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_channels_new(
    devices: usize,
    antennas: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut AcChannels,
) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if devices == 0 || antennas == 0 {
            return fail(AcStatus::InvalidArgument, "need at least one device and one antenna");
        }
        let re = input(re, devices * antennas, "re")?;
        let im = input(im, devices * antennas, "im")?;
        let h = (0..devices)
            .map(|k| DVector::from_fn(antennas, |i, _| Complex64::new(re[k * antennas + i], im[k * antennas + i])))
            .collect();
        *out = boxed(AcChannels(ChannelRealization::from_vectors(h)?));
        Ok(())
    })
}

/// # Safety
/// `channels` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ac_channels_free(channels: *mut AcChannels) {
    release(channels);
}

/// Builds a problem for the feature pair `dims` (one or two entries).
/// `sensing_noise` holds `eps_k^2` and `transmit_power` watts, one per device.
///
/// # Safety
/// Handles must be live; arrays must hold the stated counts; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_problem_new(
    stats: *const AcStats,
    dims: *const usize,
    dim_count: usize,
    channels: *const AcChannels,
    sensing_noise: *const f64,
    transmit_power: *const f64,
    noise_power: f64,
    out: *mut *mut AcProblem,
) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let stats = deref(stats, "stats")?;
        let channels = deref(channels, "channels")?;
        let k = channels.0.num_devices();
        let dims = input(dims, dim_count, "dims")?;
        let eps = input(sensing_noise, k, "sensing_noise")?;
        let power = input(transmit_power, k, "transmit_power")?;
        // positions only matter for sampling channels, which are given here
        let profiles = eps
            .iter()
            .zip(power)
            .map(|(&e, &p)| DeviceProfile::new(e, p, [1.0, 0.0]))
            .collect::<Result<Vec<_>, _>>()?;
        let noise = NoiseModel::new(noise_power)?;
        *out = boxed(AcProblem(AirCompProblem::new(&stats.0, dims, &channels.0, &profiles, &noise)?));
        Ok(())
    })
}

/// # Safety
/// `problem` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ac_problem_free(problem: *mut AcProblem) {
    release(problem);
}

/// Runs the SCA design. `max_iter == 0` or `rel_tol <= 0` keep the defaults
/// (100 and 1e-5). `iterations` may be NULL.
///
/// # Safety
/// `problem` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_optimize(
    problem: *const AcProblem,
    max_iter: usize,
    rel_tol: f64,
    out: *mut *mut AcDesign,
    iterations: *mut usize,
) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = deref(problem, "problem")?;
        let mut options = ScaOptions::default();
        if max_iter > 0 {
            options.max_iter = max_iter;
        }
        if rel_tol > 0.0 {
            options.rel_tol = rel_tol;
        }
        let outcome = sca_optimize(&p.0, &options)?;
        if let Some(it) = iterations.as_mut() {
            *it = outcome.state.iteration;
        }
        *out = boxed(AcDesign(outcome.design));
        Ok(())
    })
}

/// Channel-equalizing baseline.
///
/// # Safety
/// `problem` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_baseline_mmse_centroid(problem: *const AcProblem, out: *mut *mut AcDesign) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = deref(problem, "problem")?;
        *out = boxed(AcDesign(baseline_mmse_centroid(&p.0)?));
        Ok(())
    })
}

/// Random-beamformer baseline, reproducible for a given `seed`.
///
/// # Safety
/// `problem` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_baseline_random(problem: *const AcProblem, seed: u64, out: *mut *mut AcDesign) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = deref(problem, "problem")?;
        let mut rng = substream(seed, Domain::RandomBeamformer, 0);
        *out = boxed(AcDesign(baseline_random(&p.0, &mut rng)?));
        Ok(())
    })
}

/// Achieved discriminant gain of `design` on `problem`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_received_gain(problem: *const AcProblem, design: *const AcDesign, out: *mut f64) -> AcStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let d = deref(design, "design")?;
        if d.0.num_devices() != p.0.num_devices() || d.0.f_hat().len() != p.0.num_antennas() {
            return fail(AcStatus::DimensionMismatch, "design does not match the problem");
        }
        *out_ptr(out, "out")? = aircomp_core::feature_model::received_gain_from_parts(
            p.0.stats(),
            d.0.steering(),
            d.0.f_hat(),
            p.0.sensing_noise(),
            p.0.noise_power(),
            p.0.dims(),
        )?;
        Ok(())
    })
}

/// Number of devices in `design`, or 0 for NULL.
///
/// # Safety
/// `design` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn ac_design_devices(design: *const AcDesign) -> usize {
    design.as_ref().map_or(0, |d| d.0.num_devices())
}

/// Number of receive antennas in `design`, or 0 for NULL.
///
/// # Safety
/// `design` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn ac_design_antennas(design: *const AcDesign) -> usize {
    design.as_ref().map_or(0, |d| d.0.f_hat().len())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize, what: &str) -> Result<(), Failure> {
    if len != src.len() {
        return fail(
            AcStatus::DimensionMismatch,
            format!("{what} buffer has {len} entries, need {}", src.len()),
        );
    }
    if dst.is_null() {
        return fail(AcStatus::NullPointer, format!("{what} is null"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    Ok(())
}

/// Copies the real beamformer half `f_hat` (`len` = antennas).
///
/// # Safety
/// `design` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ac_design_f_hat(design: *const AcDesign, buf: *mut f64, len: usize) -> AcStatus {
    guard(|| copy_out(deref(design, "design")?.0.f_hat().as_slice(), buf, len, "f_hat"))
}

/// Copies the steering powers (`len` = devices).
///
/// # Safety
/// `design` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ac_design_steering(design: *const AcDesign, buf: *mut f64, len: usize) -> AcStatus {
    guard(|| copy_out(deref(design, "design")?.0.steering(), buf, len, "steering"))
}

/// Copies the ZF precoders as separate real and imaginary parts (`len` = devices).
///
/// # Safety
/// `design` must be live; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ac_design_precoders(design: *const AcDesign, re: *mut f64, im: *mut f64, len: usize) -> AcStatus {
    guard(|| {
        let b = deref(design, "design")?.0.precoders();
        let r: Vec<f64> = b.iter().map(|z| z.re).collect();
        let i: Vec<f64> = b.iter().map(|z| z.im).collect();
        copy_out(&r, re, len, "re")?;
        copy_out(&i, im, len, "im")
    })
}

/// `{"f_hat":[..],"c":[..],"b_re":[..],"b_im":[..]}`.
///
/// # Safety
/// `design` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_design_to_json(design: *const AcDesign, out: *mut *mut c_char) -> AcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let d = deref(design, "design")?;
        *out = c_string(serde_json::to_string(&d.0).map_err(Error::from)?)?;
        Ok(())
    })
}

/// # Safety
/// `design` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ac_design_free(design: *mut AcDesign) {
    release(design);
}

/// Runs the experiment described by a JSON config and returns its CSV report.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `csv_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ac_run_experiment(config_json: *const c_char, csv_out: *mut *mut c_char) -> AcStatus {
    guard(|| {
        let out = out_ptr(csv_out, "csv_out")?;
        let config = ExperimentConfig::from_json(text(config_json, "config_json")?)?;
        let report = run_sweep(&config)?;
        let mut buf = Vec::new();
        write_csv(&report, &mut buf)?;
        *out = c_string(String::from_utf8(buf).map_err(|_| Failure(AcStatus::Internal, "CSV is not UTF-8".into()))?)?;
        Ok(())
    })
}
