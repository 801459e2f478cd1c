//! C ABI over the fallsense core.
//!
//! Every fallible call returns an [`FsStatus`]; on failure the message is
//! available from [`fs_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Strings returned to
//! the caller are released with [`fs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fallsense::alertnet::{encode_payload, AlertPayload, WIRE_VERSION};
use fallsense::classify::TrainedModel;
use fallsense::data::{ActivityLabel, FallKind, Sample};
use fallsense::falldetect::{dtw_distance, DetectorId, ThreePhaseMonitor, ThreePhaseParams};
use fallsense::priorfall::{identify_prior_activity, SnapshotBuffer, SNAPSHOT_LEN};
use fallsense::signal::{features_of, gforce};
use fallsense::Error;

/// Number of activity labels; label indices run from 0 to this minus one.
pub const FS_ACTIVITY_COUNT: usize = 11;
/// Samples in a prior-fall snapshot.
pub const FS_SNAPSHOT_LEN: usize = 200;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Model = 5,
    /// The snapshot buffer has not filled yet.
    NotReady = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// One six-axis sample: time (s), acceleration (m/s²), angular rate (°/s).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

impl From<FsSample> for Sample {
    fn from(s: FsSample) -> Self {
        Sample::new(s.t, [s.ax, s.ay, s.az], [s.gx, s.gy, s.gz])
    }
}

impl From<Sample> for FsSample {
    fn from(s: Sample) -> Self {
        FsSample {
            t: s.t,
            ax: s.ax,
            ay: s.ay,
            az: s.az,
            gx: s.gx,
            gy: s.gy,
            gz: s.gz,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsThreePhaseParams {
    pub t1: f64,
    pub t2: f64,
    pub settle_low: f64,
    pub settle_high: f64,
    pub gap12: usize,
    pub gap23: usize,
    pub settle_len: usize,
}

impl From<FsThreePhaseParams> for ThreePhaseParams {
    fn from(p: FsThreePhaseParams) -> Self {
        ThreePhaseParams {
            t1: p.t1,
            t2: p.t2,
            settle_low: p.settle_low,
            settle_high: p.settle_high,
            gap12: p.gap12,
            gap23: p.gap23,
            settle_len: p.settle_len,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FsDetection {
    /// Impact peak, counted in pushed samples from 0.
    pub index: usize,
    /// Sample at which the event was confirmed.
    pub confirmed_at: usize,
}

/// A trained activity classifier.
pub struct FsModel {
    inner: TrainedModel,
}

/// Streaming three-phase fall detector.
pub struct FsMonitor {
    inner: ThreePhaseMonitor,
}

/// The 200-sample prior-fall ring buffer.
pub struct FsSnapshot {
    inner: SnapshotBuffer,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: FsStatus, msg: &str) -> FsStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> FsStatus {
    match e {
        Error::Io { .. } => FsStatus::Io,
        Error::Parse { .. } | Error::Schema(_) | Error::Wire(_) => FsStatus::Parse,
        Error::Model(_) | Error::FeatureMismatch { .. } => FsStatus::Model,
        Error::Network(_) => FsStatus::Internal,
        _ => FsStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), FsStatus>) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(FsStatus::Internal, "internal panic"),
    }
}

fn core<T>(r: fallsense::Result<T>) -> Result<T, FsStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), FsStatus> {
    if p.is_null() {
        Err(fail(FsStatus::NullPointer, &format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FsStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FsStatus::InvalidArgument, &format!("{what} is not UTF-8")))
}

unsafe fn samples_arg(p: *const FsSample, n: usize) -> Result<Vec<Sample>, FsStatus> {
    if n == 0 {
        return Ok(Vec::new());
    }
    non_null(p, "samples")?;
    Ok(std::slice::from_raw_parts(p, n)
        .iter()
        .map(|s| Sample::from(*s))
        .collect())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static name of activity label `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn fs_activity_label_name(index: usize) -> *const c_char {
    const NAMES: [&str; FS_ACTIVITY_COUNT] = [
        "WALK\0",
        "WALK_UP\0",
        "WALK_DOWN\0",
        "JUMPING_JACK\0",
        "JUMP\0",
        "RUN\0",
        "SIT\0",
        "SIT_UP\0",
        "STAND\0",
        "UP\0",
        "DOWN\0",
    ];
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr().cast())
}

/// G-force of one sample.
///
/// # Safety
/// `sample` must point to a valid sample.
#[no_mangle]
pub unsafe extern "C" fn fs_gforce(sample: *const FsSample, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null(sample, "sample")?;
        non_null(out, "out")?;
        *out = gforce(&Sample::from(*sample));
        Ok(())
    })
}

/// Absolute-cost DTW distance between two sequences.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_dtw_distance(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut f64,
) -> FsStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        let (a, b) = (std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb));
        *out = core(dtw_distance(a, b))?;
        Ok(())
    })
}

/// Loads a model saved by the `train` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_model_load(path: *const c_char, out: *mut *mut FsModel) -> FsStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = core(TrainedModel::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(FsModel { inner }));
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_model_from_json(json: *const c_char, out: *mut *mut FsModel) -> FsStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = core(TrainedModel::from_json(str_arg(json, "json")?))?;
        *out = Box::into_raw(Box::new(FsModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fs_model_free(model: *mut FsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classifies one window of samples; writes the label index.
///
/// # Safety
/// `samples` must point to `n` samples; `label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_model_predict(
    model: *const FsModel,
    samples: *const FsSample,
    n: usize,
    label: *mut usize,
) -> FsStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(label, "label")?;
        if n < 2 {
            return Err(fail(FsStatus::InvalidArgument, "a window needs at least 2 samples"));
        }
        let m = &(*model).inner;
        let fv = features_of(&samples_arg(samples, n)?, m.feature_config.system);
        let p = core(m.predict(&fv))?;
        *label = p.label.index();
        Ok(())
    })
}

/// Identifies the prior-fall activity of a 200-sample snapshot. `votes`
/// receives one count per label index and may be null.
///
/// # Safety
/// `snapshot` must point to `n` samples; `label` must be writable; `votes`
/// is null or points to `FS_ACTIVITY_COUNT` writable counts.
#[no_mangle]
pub unsafe extern "C" fn fs_identify_prior_activity(
    model: *const FsModel,
    snapshot: *const FsSample,
    n: usize,
    label: *mut usize,
    votes: *mut u32,
) -> FsStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(label, "label")?;
        let report = core(identify_prior_activity(&(*model).inner, &samples_arg(snapshot, n)?))?;
        *label = report.winner.index();
        if !votes.is_null() {
            let out = std::slice::from_raw_parts_mut(votes, FS_ACTIVITY_COUNT);
            for &a in ActivityLabel::ALL {
                out[a.index()] = report.vote_counts.get(&a).copied().unwrap_or(0) as u32;
            }
        }
        Ok(())
    })
}

/// Writes the default three-phase parameters.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_three_phase_default(out: *mut FsThreePhaseParams) -> FsStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = ThreePhaseParams::default();
        *out = FsThreePhaseParams {
            t1: p.t1,
            t2: p.t2,
            settle_low: p.settle_low,
            settle_high: p.settle_high,
            gap12: p.gap12,
            gap23: p.gap23,
            settle_len: p.settle_len,
        };
        Ok(())
    })
}

/// # Safety
/// `params` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_monitor_new(params: *const FsThreePhaseParams, out: *mut *mut FsMonitor) -> FsStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let inner = core(ThreePhaseMonitor::new((*params).into()))?;
        *out = Box::into_raw(Box::new(FsMonitor { inner }));
        Ok(())
    })
}

/// Feeds one G-force value. Up to `cap` confirmed events are written to
/// `events`; `count` receives the number confirmed. When that exceeds
/// `cap` the call returns `BufferTooSmall` and the excess is lost.
///
/// # Safety
/// `monitor` must be a live handle; `events` must hold `cap` entries (may
/// be null when `cap` is 0); `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_monitor_push(
    monitor: *mut FsMonitor,
    g: f64,
    events: *mut FsDetection,
    cap: usize,
    count: *mut usize,
) -> FsStatus {
    guard(|| {
        non_null(monitor, "monitor")?;
        non_null(count, "count")?;
        let found = (*monitor).inner.push(g);
        *count = found.len();
        if !found.is_empty() && cap > 0 {
            non_null(events, "events")?;
            let out = std::slice::from_raw_parts_mut(events, cap);
            for (slot, d) in out.iter_mut().zip(&found) {
                *slot = FsDetection {
                    index: d.index,
                    confirmed_at: d.confirmed_at,
                };
            }
        }
        if found.len() > cap {
            return Err(fail(
                FsStatus::BufferTooSmall,
                &format!("{} events confirmed, room for {cap}", found.len()),
            ));
        }
        Ok(())
    })
}

/// # Safety
/// `monitor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_monitor_reset(monitor: *mut FsMonitor) -> FsStatus {
    guard(|| {
        non_null(monitor, "monitor")?;
        (*monitor).inner.reset();
        Ok(())
    })
}

/// # Safety
/// `monitor` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fs_monitor_free(monitor: *mut FsMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_snapshot_new(out: *mut *mut FsSnapshot) -> FsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(FsSnapshot {
            inner: SnapshotBuffer::default(),
        }));
        Ok(())
    })
}

/// # Safety
/// `snapshot` must be a live handle; `sample` must be readable.
#[no_mangle]
pub unsafe extern "C" fn fs_snapshot_push(snapshot: *mut FsSnapshot, sample: *const FsSample) -> FsStatus {
    guard(|| {
        non_null(snapshot, "snapshot")?;
        non_null(sample, "sample")?;
        (*snapshot).inner.push((*sample).into());
        Ok(())
    })
}

/// Number of buffered samples, or 0 for a null handle.
///
/// # Safety
/// `snapshot` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_snapshot_len(snapshot: *const FsSnapshot) -> usize {
    if snapshot.is_null() {
        0
    } else {
        (*snapshot).inner.len()
    }
}

/// Copies the buffered samples, oldest first, once the buffer is full.
///
/// # Safety
/// `out` must hold `cap` writable samples.
#[no_mangle]
pub unsafe extern "C" fn fs_snapshot_copy(snapshot: *const FsSnapshot, out: *mut FsSample, cap: usize) -> FsStatus {
    guard(|| {
        non_null(snapshot, "snapshot")?;
        non_null(out, "out")?;
        let Some(snap) = (*snapshot).inner.snapshot() else {
            return Err(fail(FsStatus::NotReady, "snapshot buffer not yet full"));
        };
        if cap < snap.len() {
            return Err(fail(
                FsStatus::BufferTooSmall,
                &format!("need room for {} samples, got {cap}", snap.len()),
            ));
        }
        for (slot, s) in std::slice::from_raw_parts_mut(out, cap).iter_mut().zip(snap) {
            *slot = s.into();
        }
        Ok(())
    })
}

/// # Safety
/// `snapshot` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fs_snapshot_free(snapshot: *mut FsSnapshot) {
    if !snapshot.is_null() {
        drop(Box::from_raw(snapshot));
    }
}

/// Encodes an alert payload line (newline included). `fall_kind` is 0 for
/// a fall and 1 for a fall to the knees first. Free the result with
/// [`fs_string_free`].
///
/// # Safety
/// `device_id` must be a NUL-terminated string; `samples` must point to `n`
/// samples; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_encode_payload(
    device_id: *const c_char,
    detected_at_ms: u64,
    fall_kind: u32,
    sample_rate_hz: f64,
    samples: *const FsSample,
    n: usize,
    out: *mut *mut c_char,
) -> FsStatus {
    guard(|| {
        non_null(out, "out")?;
        let kind = *FallKind::ALL
            .get(fall_kind as usize)
            .ok_or_else(|| fail(FsStatus::InvalidArgument, &format!("unknown fall kind {fall_kind}")))?;
        let payload = AlertPayload {
            version: WIRE_VERSION,
            device_id: str_arg(device_id, "device_id")?.to_string(),
            detected_at: detected_at_ms,
            fall_kind: kind,
            detector: DetectorId::ThreePhase,
            sample_rate_hz,
            samples: samples_arg(samples, n)?.iter().map(Sample::channels).collect(),
        };
        let bytes = encode_payload(&payload).map_err(|e| fail(FsStatus::InvalidArgument, &e.to_string()))?;
        let c = CString::new(bytes).map_err(|_| fail(FsStatus::Internal, "payload contains NUL"))?;
        *out = c.into_raw();
        Ok(())
    })
}

const _: () = assert!(FS_SNAPSHOT_LEN == SNAPSHOT_LEN);
