//! C ABI over `idforge`.
//!
//! Conventions:
//! - every fallible call returns an [`IdfStatus`]; details of the most recent
//!   failure on the calling thread are available from
//!   [`idf_last_error_message`];
//! - strings returned through `char **` out-parameters are heap-allocated and
//!   must be released with [`idf_string_free`];
//! - handles ([`IdfLayout`], [`IdfScores`]) are opaque and released with
//!   their matching `*_free` function;
//! - panics never cross the boundary; they surface as `IDF_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use idforge::embedstats::{self, EmbedError, FeatureSet};
use idforge::layout::{self, LayoutError, LayoutSpec};
use idforge::padmetrics::{self, ApcerMode, PadError, ScoreRecord, TrueClass};
use idforge::persona::{self, PersonaError, Profile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Input parsed but breaks a documented invariant.
    Invalid = 3,
    /// Malformed input text.
    Syntax = 4,
    Range = 5,
    EmptyClass = 6,
    NotPsd = 7,
    Dimension = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfProfile {
    Citizen = 0,
    Extranjero = 1,
}

fn profile_arg(p: u32) -> Result<Profile, Failure> {
    match p {
        x if x == IdfProfile::Citizen as u32 => Ok(Profile::Citizen),
        x if x == IdfProfile::Extranjero as u32 => Ok(Profile::Extranjero),
        other => Err(Failure(IdfStatus::Range, format!("unknown profile {other}"))),
    }
}

/// Parsed, validated card layout.
pub struct IdfLayout {
    spec: LayoutSpec,
}

/// Accumulator of labelled PAD scores.
pub struct IdfScores {
    records: Vec<ScoreRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

struct Failure(IdfStatus, String);

impl From<PersonaError> for Failure {
    fn from(e: PersonaError) -> Self {
        let status = match e {
            PersonaError::Range(_) => IdfStatus::Range,
            _ => IdfStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

impl From<LayoutError> for Failure {
    fn from(e: LayoutError) -> Self {
        let status = match e {
            LayoutError::Invariant(_) => IdfStatus::Invalid,
            _ => IdfStatus::Syntax,
        };
        Failure(status, e.to_string())
    }
}

impl From<PadError> for Failure {
    fn from(e: PadError) -> Self {
        let status = match e {
            PadError::EmptyClass(_) => IdfStatus::EmptyClass,
            PadError::Range(_) => IdfStatus::Range,
            _ => IdfStatus::Syntax,
        };
        Failure(status, e.to_string())
    }
}

impl From<EmbedError> for Failure {
    fn from(e: EmbedError) -> Self {
        let status = match e {
            EmbedError::NotPsd { .. } => IdfStatus::NotPsd,
            EmbedError::Dimension(..) => IdfStatus::Dimension,
            _ => IdfStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IdfStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure(IdfStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IdfStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
            status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(IdfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(IdfStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = v;
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String, what: &str) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(IdfStatus::Invalid, e.to_string()))?;
    put(out, c.into_raw(), what)
}

fn ascii_out(ch: char) -> c_char {
    ch as u8 as c_char
}

/// Message of the last failed call on this thread, or NULL. Free with
/// [`idf_string_free`].
#[no_mangle]
pub extern "C" fn idf_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .and_then(|m| CString::new(m.replace('\0', " ")).ok())
            .map_or(std::ptr::null_mut(), CString::into_raw)
    })
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn idf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn idf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// RUN check character ('0'-'9' or 'K') for `number` in 1..=99999999.
#[no_mangle]
pub unsafe extern "C" fn idf_run_check_digit(number: u32, out: *mut c_char) -> IdfStatus {
    guard(|| {
        let d = persona::run_check_digit(number)?;
        put(out, ascii_out(d), "out")
    })
}

/// Formatted RUN such as "12.345.678-5"; fails when `check` does not match.
#[no_mangle]
pub unsafe extern "C" fn idf_format_run(number: u32, check: c_char, out: *mut *mut c_char) -> IdfStatus {
    guard(|| {
        let s = persona::format_run(number, check as u8 as char)?;
        put_string(out, s, "out")
    })
}

/// ICAO 9303 check digit of an MRZ field ('0'-'9').
#[no_mangle]
pub unsafe extern "C" fn idf_mrz_check_digit(field: *const c_char, out: *mut c_char) -> IdfStatus {
    guard(|| {
        let d = persona::mrz_check_digit(str_arg(field, "field")?)?;
        put(out, ascii_out(d), "out")
    })
}

/// Seeded persona as JSON, including display strings and the three MRZ lines.
/// `profile` is an [`IdfProfile`] value.
#[no_mangle]
pub unsafe extern "C" fn idf_persona_json(seed: u64, profile: u32, out: *mut *mut c_char) -> IdfStatus {
    guard(|| {
        let p = persona::generate_persona(seed, profile_arg(profile)?);
        let v = p.sidecar()?;
        put_string(out, v.to_string(), "out")
    })
}

/// Positive and negative portrait prompts for seeded face attributes.
#[no_mangle]
pub unsafe extern "C" fn idf_face_prompt(
    seed: u64,
    out_positive: *mut *mut c_char,
    out_negative: *mut *mut c_char,
) -> IdfStatus {
    guard(|| {
        if out_positive.is_null() || out_negative.is_null() {
            return Err(null("out"));
        }
        let (pos, neg) = persona::build_face_prompt(&persona::generate_face_attributes(seed));
        put_string(out_positive, pos, "out_positive")?;
        put_string(out_negative, neg, "out_negative")
    })
}

/// Card-generation prompt for a seeded persona.
#[no_mangle]
pub unsafe extern "C" fn idf_card_prompt(seed: u64, profile: u32, out: *mut *mut c_char) -> IdfStatus {
    guard(|| {
        let p = persona::generate_persona(seed, profile_arg(profile)?);
        put_string(out, persona::build_card_prompt(&p), "out")
    })
}

/// Parses and validates a layout document. On success `*out` owns a handle
/// to release with [`idf_layout_free`].
#[no_mangle]
pub unsafe extern "C" fn idf_layout_parse(json: *const c_char, out: *mut *mut IdfLayout) -> IdfStatus {
    guard(|| {
        let spec = layout::parse_layout(str_arg(json, "json")?.as_bytes())?;
        put(out, Box::into_raw(Box::new(IdfLayout { spec })), "out")
    })
}

/// Bundled layout by template id ("citizen" or "extranjero").
#[no_mangle]
pub unsafe extern "C" fn idf_layout_builtin(template_id: *const c_char, out: *mut *mut IdfLayout) -> IdfStatus {
    guard(|| {
        let id = str_arg(template_id, "template_id")?;
        let spec = layout::builtin_template(id)
            .ok_or_else(|| Failure(IdfStatus::Invalid, format!("no builtin layout {id:?}")))?;
        put(out, Box::into_raw(Box::new(IdfLayout { spec })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn idf_layout_free(layout: *mut IdfLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// Number of components, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn idf_layout_component_count(layout: *const IdfLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.spec.components.len())
}

/// Canvas size in pixels.
#[no_mangle]
pub unsafe extern "C" fn idf_layout_canvas(
    layout: *const IdfLayout,
    out_width: *mut u32,
    out_height: *mut u32,
) -> IdfStatus {
    guard(|| {
        let l = layout.as_ref().ok_or_else(|| null("layout"))?;
        put(out_width, l.spec.canvas.width, "out_width")?;
        put(out_height, l.spec.canvas.height, "out_height")
    })
}

/// Canonical JSON serialization of a layout.
#[no_mangle]
pub unsafe extern "C" fn idf_layout_to_json(layout: *const IdfLayout, out: *mut *mut c_char) -> IdfStatus {
    guard(|| {
        let l = layout.as_ref().ok_or_else(|| null("layout"))?;
        put_string(out, layout::serialize_layout(&l.spec), "out")
    })
}

#[no_mangle]
pub extern "C" fn idf_scores_new() -> *mut IdfScores {
    Box::into_raw(Box::new(IdfScores { records: Vec::new() }))
}

#[no_mangle]
pub unsafe extern "C" fn idf_scores_free(scores: *mut IdfScores) {
    if !scores.is_null() {
        drop(Box::from_raw(scores));
    }
}

/// Adds one record. `true_class` is "bonafide" or an attack species label;
/// higher scores mean "more likely attack".
#[no_mangle]
pub unsafe extern "C" fn idf_scores_push(scores: *mut IdfScores, true_class: *const c_char, score: f64) -> IdfStatus {
    guard(|| {
        let s = scores.as_mut().ok_or_else(|| null("scores"))?;
        let class = str_arg(true_class, "true_class")?;
        if class.is_empty() {
            return Err(Failure(IdfStatus::Invalid, "empty true_class".into()));
        }
        if !score.is_finite() {
            return Err(Failure(IdfStatus::Range, format!("score {score} is not finite")));
        }
        let id = s.records.len().to_string();
        s.records.push(ScoreRecord::new(id, TrueClass::parse(class), score));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn idf_scores_len(scores: *const IdfScores) -> usize {
    scores.as_ref().map_or(0, |s| s.records.len())
}

fn apcer_mode(pooled: bool) -> ApcerMode {
    if pooled {
        ApcerMode::Pooled
    } else {
        ApcerMode::Worst
    }
}

/// Equal error rate and its threshold (may be +/-infinity).
#[no_mangle]
pub unsafe extern "C" fn idf_scores_eer(
    scores: *const IdfScores,
    pooled: bool,
    out_rate: *mut f64,
    out_threshold: *mut f64,
) -> IdfStatus {
    guard(|| {
        let s = scores.as_ref().ok_or_else(|| null("scores"))?;
        let e = padmetrics::eer_with(&s.records, apcer_mode(pooled))?;
        put(out_rate, e.rate, "out_rate")?;
        put(out_threshold, e.threshold, "out_threshold")
    })
}

/// Lowest BPCER whose worst-case APCER is at most `alpha` (0 < alpha <= 1).
#[no_mangle]
pub unsafe extern "C" fn idf_scores_bpcer_at_apcer(
    scores: *const IdfScores,
    alpha: f64,
    out_bpcer: *mut f64,
    out_threshold: *mut f64,
) -> IdfStatus {
    guard(|| {
        let s = scores.as_ref().ok_or_else(|| null("scores"))?;
        let op = padmetrics::bpcer_at_apcer(&s.records, alpha)?;
        put(out_bpcer, op.bpcer, "out_bpcer")?;
        put(out_threshold, op.threshold, "out_threshold")
    })
}

/// Full report as JSON. A NaN `threshold` selects the EER threshold.
#[no_mangle]
pub unsafe extern "C" fn idf_scores_report_json(
    scores: *const IdfScores,
    threshold: f64,
    pooled: bool,
    out: *mut *mut c_char,
) -> IdfStatus {
    guard(|| {
        let s = scores.as_ref().ok_or_else(|| null("scores"))?;
        let t = if threshold.is_nan() { None } else { Some(threshold) };
        let report = padmetrics::pad_report(&s.records, t, apcer_mode(pooled))?;
        put_string(out, report.to_json(), "out")
    })
}

unsafe fn feature_set(values: *const f32, n: usize, d: usize, what: &str) -> Result<FeatureSet, Failure> {
    if values.is_null() {
        return Err(null(what));
    }
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Failure(IdfStatus::Range, "n * d overflows".into()))?;
    let slice = std::slice::from_raw_parts(values, len);
    Ok(FeatureSet::new(n, d, slice.to_vec())?)
}

/// Fréchet distance between two row-major `n x d` float32 feature arrays.
#[no_mangle]
pub unsafe extern "C" fn idf_fid(
    a: *const f32,
    n_a: usize,
    b: *const f32,
    n_b: usize,
    d: usize,
    out: *mut f64,
) -> IdfStatus {
    guard(|| {
        let fa = feature_set(a, n_a, d, "a")?;
        let fb = feature_set(b, n_b, d, "b")?;
        let v = embedstats::fid(&embedstats::stats(&fa), &embedstats::stats(&fb))?;
        put(out, v, "out")
    })
}
