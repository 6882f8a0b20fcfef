//! C interface to the simulator.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`NcStatus`]; on failure, [`nc_last_error`] describes the most recent error
//! on the calling thread. Strings returned by the library are released with
//! [`nc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nullcollapse::config::ConfigFile;
use nullcollapse::dynamics::{self, RunConfig, RunRecord};
use nullcollapse::lattice::NaturalLabeling;
use nullcollapse::oracle::{enumerate_distribution, HistoryDistribution};
use nullcollapse::quantum::{self, JumpSpec, StateVector};
use nullcollapse::verify::configured_instance;
use nullcollapse::{record, Error};
use num_complex::Complex64;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Guardrail = 4,
    Precondition = 5,
    Record = 6,
    Numeric = 7,
    OutOfRange = 8,
    Io = 9,
    Panic = 10,
}

/// A validated run configuration.
pub struct NcConfig(RunConfig);

/// The record of one run.
pub struct NcRecord(RunRecord);

/// An exact outcome distribution over a set of vertices.
pub struct NcDistribution(HistoryDistribution);

/// One event of a record. Fields that do not apply are zero, with the
/// `realized` and `has_norms` flags telling which ones are meaningful.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NcEvent {
    pub ordinal: usize,
    pub slot_first: usize,
    pub slot_second: usize,
    pub pair_ordinal: u32,
    pub realized: bool,
    pub alpha_l: u8,
    pub alpha_r: u8,
    pub has_norms: bool,
    pub norm_l: f64,
    pub norm_r: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NcStatus {
    match e {
        Error::Config(_) | Error::InvalidGeometry(_) | Error::InvalidState(_) | Error::InvalidJump(_) => NcStatus::Config,
        Error::Guardrail { .. } => NcStatus::Guardrail,
        Error::Record(_) => NcStatus::Record,
        Error::Io(_) => NcStatus::Io,
        Error::NotUnitary(_) | Error::NormDrift(_) | Error::NullCondition => NcStatus::Numeric,
        _ => NcStatus::Precondition,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (NcStatus, String)>) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NcStatus::Panic
        }
    }
}

fn lib<T>(r: nullcollapse::Result<T>) -> Result<T, (NcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (NcStatus, String) {
    (NcStatus::NullPointer, "null pointer argument".into())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, (NcStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, (NcStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NcStatus::InvalidUtf8, "string is not UTF-8".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), (NcStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Copies the calling thread's last error message into `buffer` (at most
/// `capacity` bytes including the terminator) and returns the full message
/// length plus one. Returns 0 when no error has been recorded.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn nc_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buffer.is_null() && capacity > 0 {
                let n = bytes.len().min(capacity);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buffer, n);
                *buffer.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Parses a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_config_from_toml(toml: *const c_char, out: *mut *mut NcConfig) -> NcStatus {
    guard(|| {
        let t = text(toml)?;
        let config = lib(ConfigFile::parse(t).and_then(|f| f.to_run_config()))?;
        put(out, boxed(NcConfig(config)))
    })
}

/// Replaces the seed of a configuration.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_config_set_seed(config: *mut NcConfig, seed: u64) -> NcStatus {
    guard(|| {
        let c = config.as_mut().ok_or_else(null)?;
        c.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_config_free(config: *mut NcConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured dynamics.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_run(config: *const NcConfig, out: *mut *mut NcRecord) -> NcStatus {
    guard(|| {
        let c = borrow(config)?;
        let r = lib(dynamics::run(&c.0))?;
        put(out, boxed(NcRecord(r)))
    })
}

/// # Safety
/// `record` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_record_event_count(record: *const NcRecord, out: *mut usize) -> NcStatus {
    guard(|| put(out, borrow(record)?.0.events.len()))
}

/// # Safety
/// `record` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_record_event(record: *const NcRecord, index: usize, out: *mut NcEvent) -> NcStatus {
    guard(|| {
        let r = borrow(record)?;
        let e = r
            .0
            .events
            .get(index)
            .ok_or_else(|| (NcStatus::OutOfRange, format!("event {index} of {}", r.0.events.len())))?;
        let mut event = NcEvent {
            ordinal: e.ordinal,
            slot_first: e.slot_pair.0,
            slot_second: e.slot_pair.1,
            pair_ordinal: e.pair_ordinal,
            ..NcEvent::default()
        };
        if let Some(o) = e.outcome {
            event.realized = true;
            event.alpha_l = o.alpha_l;
            event.alpha_r = o.alpha_r;
        }
        if let Some(n) = e.norms {
            event.has_norms = true;
            event.norm_l = n.left;
            event.norm_r = n.right;
        }
        put(out, event)
    })
}

/// Serializes a record to its text form.
///
/// # Safety
/// `record` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_record_to_string(record: *const NcRecord, out: *mut *mut c_char) -> NcStatus {
    guard(|| {
        let s = lib(record::serialize(&borrow(record)?.0))?;
        let c = CString::new(s).map_err(|e| (NcStatus::Record, e.to_string()))?;
        put(out, c.into_raw())
    })
}

/// Parses and validates a record in text form.
///
/// # Safety
/// `text_form` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_record_from_string(text_form: *const c_char, out: *mut *mut NcRecord) -> NcStatus {
    guard(|| {
        let r = lib(record::parse(text(text_form)?))?;
        put(out, boxed(NcRecord(r)))
    })
}

/// Re-runs a record's configuration and checks that it is reproduced.
///
/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_record_replay(record: *const NcRecord) -> NcStatus {
    guard(|| lib(dynamics::replay(&borrow(record)?.0)))
}

/// # Safety
/// `record` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_record_free(record: *mut NcRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact distribution of every vertex swept by the configuration.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_oracle_distribution(config: *const NcConfig, out: *mut *mut NcDistribution) -> NcStatus {
    guard(|| {
        let c = borrow(config)?;
        let instance = lib(configured_instance(&c.0, usize::MAX))?;
        let stem = instance.stem();
        let labeling = NaturalLabeling::creation_order(&stem);
        let d = lib(enumerate_distribution(&instance, &stem, &labeling))?;
        put(out, boxed(NcDistribution(d)))
    })
}

/// Number of atoms, `4^vertices`.
///
/// # Safety
/// `dist` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_distribution_len(dist: *const NcDistribution, out: *mut usize) -> NcStatus {
    guard(|| put(out, borrow(dist)?.0.len()))
}

/// Probability of atom `index`. Atoms are numbered in base 4 with the
/// lowest vertex ordinal as the most significant digit and each digit
/// equal to `2·α_L + α_R`.
///
/// # Safety
/// `dist` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_distribution_probability(dist: *const NcDistribution, index: usize, out: *mut f64) -> NcStatus {
    guard(|| {
        let d = borrow(dist)?;
        let p = d
            .0
            .probabilities()
            .get(index)
            .copied()
            .ok_or_else(|| (NcStatus::OutOfRange, format!("atom {index} of {}", d.0.len())))?;
        put(out, p)
    })
}

/// # Safety
/// `dist` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_distribution_free(dist: *mut NcDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Jump factor for link value `alpha` and realized value `alpha_hat`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nc_jump_factor(x: f64, alpha: u8, alpha_hat: u8, out: *mut f64) -> NcStatus {
    guard(|| {
        if alpha > 1 || alpha_hat > 1 {
            return Err((NcStatus::Precondition, "link values are 0 or 1".into()));
        }
        let spec = lib(JumpSpec::new(x))?;
        put(out, quantum::jump_factor(spec, alpha, alpha_hat))
    })
}

/// Probabilities of the four outcomes of a vertex event on the pair
/// `(first_slot, first_slot + 1 mod slots)`, written to `out[0..4]`.
/// `amplitudes` holds `2^slots` complex numbers as interleaved `(re, im)`.
///
/// # Safety
/// `amplitudes` must be valid for `2 · 2^slots` reads and `out` for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn nc_vertex_jump_distribution(
    slots: usize,
    amplitudes: *const f64,
    first_slot: usize,
    x: f64,
    out: *mut f64,
) -> NcStatus {
    guard(|| {
        if amplitudes.is_null() || out.is_null() {
            return Err(null());
        }
        if slots == 0 || slots > 30 || first_slot >= slots {
            return Err((NcStatus::Precondition, format!("slot {first_slot} of {slots}")));
        }
        let raw = std::slice::from_raw_parts(amplitudes, 2usize << slots);
        let amps = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let psi = lib(StateVector::from_amplitudes(slots, amps))?;
        let p = lib(quantum::vertex_jump_distribution(&psi, (first_slot, (first_slot + 1) % slots), lib(JumpSpec::new(x))?))?;
        std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&p);
        Ok(())
    })
}
