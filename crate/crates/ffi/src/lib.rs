//! C ABI over `pqgi-core`.
//!
//! Every fallible call returns a [`PqgiStatus`]. On failure a message is
//! stored per thread and can be read with [`pqgi_last_error`]. Handles are
//! opaque and must be released with their matching `*_free` function.
//! Strings returned through `char **` are owned by the caller and released
//! with [`pqgi_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pqgi_core::counting::CountingMode;
use pqgi_core::geometry::{rasterize, Scene};
use pqgi_core::protocol::{
    comm_cost, detection_probability, run_protocol, AdversaryStrategy, ProtocolTranscript,
    RunOptions, Verdict,
};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqgiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidScene = 3,
    InvalidArgument = 4,
    ProtocolFailure = 5,
    BufferTooSmall = 6,
    NoEstimate = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqgiVerdict {
    Intersect = 0,
    Disjoint = 1,
    Abort = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqgiMode {
    Exact = 0,
    Sample = 1,
}

/// Options for [`pqgi_run`]. `counting_bits == 0` selects the default width.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PqgiRunOptions {
    pub counting_bits: u32,
    pub mode: PqgiMode,
    pub seed: u64,
    pub record_amplitudes: bool,
}

/// Communication cost. Classical baselines saturate at `UINT64_MAX`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PqgiCost {
    pub alice_to_bob_qubits: u64,
    pub bob_to_alice_qubits: u64,
    pub total_qubits: u64,
    pub paper_formula_qubits: u64,
    pub atallah_bits: u64,
    pub qin_bits: u64,
}

/// Opaque scene handle.
pub struct PqgiScene(Scene);

/// Opaque transcript handle.
pub struct PqgiTranscript(ProtocolTranscript);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

type Fallible = Result<(), (PqgiStatus, String)>;

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Fallible) -> PqgiStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PqgiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PqgiStatus::Panic
        }
    }
}

fn fail<T>(status: PqgiStatus, msg: impl Into<String>) -> Result<T, (PqgiStatus, String)> {
    Err((status, msg.into()))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (PqgiStatus, String)> {
    match p.as_ref() {
        Some(v) => Ok(v),
        None => fail(PqgiStatus::NullPointer, format!("{name} is null")),
    }
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (PqgiStatus, String)> {
    match p.as_mut() {
        Some(v) => Ok(v),
        None => fail(PqgiStatus::NullPointer, format!("{name} is null")),
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (PqgiStatus, String)> {
    if p.is_null() {
        return fail(PqgiStatus::NullPointer, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PqgiStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// Null means honest.
unsafe fn read_adversary(p: *const c_char) -> Result<AdversaryStrategy, (PqgiStatus, String)> {
    if p.is_null() {
        return Ok(AdversaryStrategy::Honest);
    }
    read_str(p, "adversary")?
        .parse()
        .or_else(|e| fail(PqgiStatus::InvalidArgument, format!("adversary: {e}")))
}

fn clamp_u64<T: TryInto<u64>>(v: T) -> u64 {
    v.try_into().unwrap_or(u64::MAX)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `pqgi_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pqgi_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn pqgi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scene from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_scene_from_json(json: *const c_char, out: *mut *mut PqgiScene) -> PqgiStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let scene = Scene::from_json(text).or_else(|e| fail(PqgiStatus::InvalidScene, e.to_string()))?;
        scene
            .validate()
            .or_else(|e| fail(PqgiStatus::InvalidScene, e.to_string()))?;
        *out = Box::into_raw(Box::new(PqgiScene(scene)));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from [`pqgi_scene_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pqgi_scene_free(scene: *mut PqgiScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Writes the scene's sorted cell serials into `buf`. `*len` always receives
/// the cell count; if it exceeds `cap` nothing is written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must hold `cap` elements (it may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn pqgi_scene_rasterize(
    scene: *const PqgiScene,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PqgiStatus {
    guard(|| {
        let scene = deref(scene, "scene")?;
        let len = deref_mut(len, "len")?;
        let set = rasterize(&scene.0).or_else(|e| fail(PqgiStatus::InvalidScene, e.to_string()))?;
        let serials = set.serials();
        *len = serials.len();
        if serials.len() > cap {
            return fail(
                PqgiStatus::BufferTooSmall,
                format!("need {} entries, buffer holds {cap}", serials.len()),
            );
        }
        if buf.is_null() && !serials.is_empty() {
            return fail(PqgiStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(serials.as_ptr(), buf, serials.len());
        Ok(())
    })
}

/// Runs the protocol between two scenes. `options` may be null for the
/// defaults (exact mode, seed 0); `adversary` may be null for honest play
/// and otherwise uses the CLI spelling, e.g. `"bob-tamper:3"`.
///
/// # Safety
/// Pointers must be valid or null where allowed; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_run(
    alice: *const PqgiScene,
    bob: *const PqgiScene,
    options: *const PqgiRunOptions,
    adversary: *const c_char,
    out: *mut *mut PqgiTranscript,
) -> PqgiStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let alice = deref(alice, "alice")?;
        let bob = deref(bob, "bob")?;
        let adversary = read_adversary(adversary)?;
        let mut opts = RunOptions::default();
        if let Some(o) = options.as_ref() {
            opts.counting_bits = (o.counting_bits > 0).then_some(o.counting_bits as usize);
            opts.seed = o.seed;
            opts.record_amplitudes = o.record_amplitudes;
            opts.mode = match o.mode {
                PqgiMode::Exact => CountingMode::Exact,
                PqgiMode::Sample => CountingMode::Sample { seed: o.seed },
            };
        }
        let transcript = run_protocol(&alice.0, &bob.0, &opts, adversary)
            .or_else(|e| fail(PqgiStatus::ProtocolFailure, e.to_string()))?;
        *out = Box::into_raw(Box::new(PqgiTranscript(transcript)));
        Ok(())
    })
}

/// # Safety
/// `transcript` must come from [`pqgi_run`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pqgi_transcript_free(transcript: *mut PqgiTranscript) {
    if !transcript.is_null() {
        drop(Box::from_raw(transcript));
    }
}

/// # Safety
/// `transcript` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_transcript_verdict(
    transcript: *const PqgiTranscript,
    out: *mut PqgiVerdict,
) -> PqgiStatus {
    guard(|| {
        let t = deref(transcript, "transcript")?;
        *deref_mut(out, "out")? = match t.0.verdict {
            Verdict::Intersect => PqgiVerdict::Intersect,
            Verdict::Disjoint => PqgiVerdict::Disjoint,
            Verdict::Abort => PqgiVerdict::Abort,
        };
        Ok(())
    })
}

/// Decoded intersection size and the probability of the reported outcome.
/// Returns `NoEstimate` for aborted runs.
///
/// # Safety
/// `transcript` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_transcript_count(
    transcript: *const PqgiTranscript,
    count: *mut usize,
    outcome_probability: *mut f64,
) -> PqgiStatus {
    guard(|| {
        let t = deref(transcript, "transcript")?;
        let count = deref_mut(count, "count")?;
        let prob = deref_mut(outcome_probability, "outcome_probability")?;
        match &t.0.count_estimate {
            Some(est) => {
                *count = est.t_rounded;
                *prob = est.outcome_probability;
                Ok(())
            }
            None => fail(PqgiStatus::NoEstimate, "run aborted before counting"),
        }
    })
}

/// Serializes the transcript as pretty-printed JSON.
///
/// # Safety
/// `transcript` must be a live handle; `out` must be writable. Release the
/// result with [`pqgi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pqgi_transcript_to_json(
    transcript: *const PqgiTranscript,
    out: *mut *mut c_char,
) -> PqgiStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let t = deref(transcript, "transcript")?;
        let c = CString::new(t.0.to_json()).or_else(|e| fail(PqgiStatus::Panic, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pqgi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Communication cost for `m` and `n` records on a grid of `cells` cells.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_comm_cost(m: usize, n: usize, cells: usize, out: *mut PqgiCost) -> PqgiStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if m == 0 || n == 0 || cells == 0 {
            return fail(PqgiStatus::InvalidArgument, "counts must be positive");
        }
        let c = comm_cost(m, n, cells);
        *out = PqgiCost {
            alice_to_bob_qubits: clamp_u64(c.alice_to_bob_qubits),
            bob_to_alice_qubits: clamp_u64(c.bob_to_alice_qubits),
            total_qubits: clamp_u64(c.total_qubits),
            paper_formula_qubits: clamp_u64(c.paper_formula_qubits),
            atallah_bits: clamp_u64(c.classical_baselines.atallah_bits),
            qin_bits: clamp_u64(c.classical_baselines.qin_bits),
        };
        Ok(())
    })
}

/// Exact probability that the cheat check fails under `adversary`.
///
/// # Safety
/// Scene handles must be live; `adversary` may be null; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pqgi_detection_probability(
    alice: *const PqgiScene,
    bob: *const PqgiScene,
    adversary: *const c_char,
    out: *mut f64,
) -> PqgiStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let alice = deref(alice, "alice")?;
        let bob = deref(bob, "bob")?;
        let adversary = read_adversary(adversary)?;
        *out = detection_probability(&alice.0, &bob.0, adversary)
            .or_else(|e| fail(PqgiStatus::ProtocolFailure, e.to_string()))?;
        Ok(())
    })
}
