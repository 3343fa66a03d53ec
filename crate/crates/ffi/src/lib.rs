//! C ABI for the MFQ toolkit.
//!
//! Questionnaires are opaque handles; everything else moves across the
//! boundary as plain arrays and status codes. Ratings arrive as one byte
//! per item in index order (`answers[0]` is item 1). Functions returning
//! [`MfqStatus`] set a thread-local message retrievable via
//! [`mfq_last_error_message`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use mfq_toolkit::administration::majority_vote;
use mfq_toolkit::analysis::sae;
use mfq_toolkit::donation::expected_donation;
use mfq_toolkit::questionnaire::{
    score, validate_catch, AnswerMap, FoundationScores, Questionnaire, ScaleKind,
};
use mfq_toolkit::respondent::{parse_rating, ParsedRating};
use mfq_toolkit::tsne::{embed, PointSet, TsneParams};

/// Status codes returned by the fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
}

/// Opaque questionnaire handle.
pub struct MfqQuestionnaire {
    inner: Questionnaire,
}

/// t-SNE hyperparameters for [`mfq_tsne_embed`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MfqTsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: MfqStatus, message: &str) -> MfqStatus {
    set_error(message);
    status
}

/// Message for the most recent failure on this thread.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mfq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn answers_from_raw(answers: *const u8) -> Option<AnswerMap> {
    if answers.is_null() {
        return None;
    }
    let slice = unsafe { std::slice::from_raw_parts(answers, 32) };
    Some((1u8..=32).zip(slice.iter().copied()).collect())
}

/// Load and validate a questionnaire file; the handle must be released
/// with [`mfq_questionnaire_free`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfq_questionnaire_load(
    path: *const c_char,
    out: *mut *mut MfqQuestionnaire,
) -> MfqStatus {
    if path.is_null() || out.is_null() {
        return fail(MfqStatus::NullPointer, "path and out must be non-null");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => p,
        Err(_) => return fail(MfqStatus::InvalidUtf8, "path is not valid UTF-8"),
    };
    match Questionnaire::load_path(Path::new(path)) {
        Ok(q) => {
            unsafe { *out = Box::into_raw(Box::new(MfqQuestionnaire { inner: q })) };
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::ParseError, &e.to_string()),
    }
}

/// The questionnaire bundled with the toolkit.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mfq_questionnaire_bundled(out: *mut *mut MfqQuestionnaire) -> MfqStatus {
    if out.is_null() {
        return fail(MfqStatus::NullPointer, "out must be non-null");
    }
    unsafe {
        *out = Box::into_raw(Box::new(MfqQuestionnaire {
            inner: Questionnaire::bundled(),
        }))
    };
    MfqStatus::Ok
}

/// Release a questionnaire handle. Null is a no-op.
///
/// # Safety
/// `handle` must have come from a load call and not been freed already.
#[no_mangle]
pub unsafe extern "C" fn mfq_questionnaire_free(handle: *mut MfqQuestionnaire) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of items in the questionnaire behind the handle.
///
/// # Safety
/// `handle` must be a live questionnaire handle.
#[no_mangle]
pub unsafe extern "C" fn mfq_questionnaire_item_count(handle: *const MfqQuestionnaire) -> usize {
    if handle.is_null() {
        return 0;
    }
    unsafe { &*handle }.inner.items.len()
}

/// Score a complete answer vector.
///
/// `answers` holds 32 ratings in item-index order; `out_scores` receives
/// harm, fairness, ingroup, authority, purity.
///
/// # Safety
/// `handle` must be live; `answers` must point at 32 readable bytes;
/// `out_scores` at 5 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfq_score(
    handle: *const MfqQuestionnaire,
    answers: *const u8,
    out_scores: *mut f64,
) -> MfqStatus {
    if handle.is_null() || out_scores.is_null() {
        return fail(
            MfqStatus::NullPointer,
            "handle and out_scores must be non-null",
        );
    }
    let Some(answers) = (unsafe { answers_from_raw(answers) }) else {
        return fail(MfqStatus::NullPointer, "answers must be non-null");
    };
    let q = unsafe { &*handle };
    match score(&answers, &q.inner.key) {
        Ok(scores) => {
            let array = scores.as_array();
            unsafe { ptr::copy_nonoverlapping(array.as_ptr(), out_scores, 5) };
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::InvalidArgument, &e.to_string()),
    }
}

/// Evaluate the catch items from a 32-rating answer vector.
///
/// # Safety
/// `answers` must point at 32 readable bytes; `out_passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfq_validate_catch(
    answers: *const u8,
    out_passed: *mut bool,
) -> MfqStatus {
    if out_passed.is_null() {
        return fail(MfqStatus::NullPointer, "out_passed must be non-null");
    }
    let Some(answers) = (unsafe { answers_from_raw(answers) }) else {
        return fail(MfqStatus::NullPointer, "answers must be non-null");
    };
    match validate_catch(&answers) {
        Ok(report) => {
            unsafe { *out_passed = report.passed };
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::InvalidArgument, &e.to_string()),
    }
}

/// Extract a rating from a completion. `scale` is 0 for relevance, 1 for
/// agreement. `out_rating` receives 0..=5, or -1 when nothing parses
/// (still `Ok`: unparseable is a value, not an error).
///
/// # Safety
/// `completion` must be a valid NUL-terminated string; `out_rating` writable.
#[no_mangle]
pub unsafe extern "C" fn mfq_parse_rating(
    completion: *const c_char,
    scale: i32,
    out_rating: *mut i8,
) -> MfqStatus {
    if completion.is_null() || out_rating.is_null() {
        return fail(
            MfqStatus::NullPointer,
            "completion and out_rating must be non-null",
        );
    }
    let text = match unsafe { CStr::from_ptr(completion) }.to_str() {
        Ok(t) => t,
        Err(_) => return fail(MfqStatus::InvalidUtf8, "completion is not valid UTF-8"),
    };
    let scale = match scale {
        0 => ScaleKind::Relevance,
        1 => ScaleKind::Agreement,
        other => {
            return fail(
                MfqStatus::InvalidArgument,
                &format!("scale must be 0 (relevance) or 1 (agreement), got {other}"),
            )
        }
    };
    let value = match parse_rating(text, scale) {
        ParsedRating::Rating { rating, .. } => rating as i8,
        ParsedRating::Unparseable => -1,
    };
    unsafe { *out_rating = value };
    MfqStatus::Ok
}

/// Majority-vote a sample multiset with the toolkit's tie rule.
///
/// # Safety
/// `samples` must point at `len` readable bytes; `out_rating` writable.
#[no_mangle]
pub unsafe extern "C" fn mfq_majority_vote(
    samples: *const u8,
    len: usize,
    out_rating: *mut u8,
) -> MfqStatus {
    if samples.is_null() || out_rating.is_null() {
        return fail(
            MfqStatus::NullPointer,
            "samples and out_rating must be non-null",
        );
    }
    let slice = unsafe { std::slice::from_raw_parts(samples, len) };
    if slice.iter().any(|&r| r > 5) {
        return fail(MfqStatus::InvalidArgument, "samples must be ratings 0..=5");
    }
    match majority_vote(slice) {
        Ok(rating) => {
            unsafe { *out_rating = rating };
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::InvalidArgument, &e.to_string()),
    }
}

/// Sum of absolute errors between two 5-component score vectors.
///
/// # Safety
/// Both pointers must reference 5 readable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfq_sae(a: *const f64, b: *const f64) -> f64 {
    if a.is_null() || b.is_null() {
        return f64::NAN;
    }
    let av = unsafe { std::slice::from_raw_parts(a, 5) };
    let bv = unsafe { std::slice::from_raw_parts(b, 5) };
    sae(
        &FoundationScores::from_array([av[0], av[1], av[2], av[3], av[4]]),
        &FoundationScores::from_array([bv[0], bv[1], bv[2], bv[3], bv[4]]),
    )
}

/// Probability-weighted donation over {declined, $10, $20, $50, $100, $250}.
///
/// # Safety
/// `probabilities` must reference 6 readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfq_expected_donation(
    probabilities: *const f64,
    out: *mut f64,
) -> MfqStatus {
    if probabilities.is_null() || out.is_null() {
        return fail(
            MfqStatus::NullPointer,
            "probabilities and out must be non-null",
        );
    }
    let p = unsafe { std::slice::from_raw_parts(probabilities, 6) };
    match expected_donation(&[p[0], p[1], p[2], p[3], p[4], p[5]]) {
        Ok(value) => {
            unsafe { *out = value };
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::InvalidArgument, &e.to_string()),
    }
}

/// Embed `k` points of dimension `dim` into 2-D.
///
/// `coords` is row-major `k * dim`; `out_xy` receives row-major `k * 2`.
/// Deterministic for a given seed.
///
/// # Safety
/// `coords` must reference `k * dim` readable doubles, `params` a valid
/// struct, and `out_xy` `k * 2` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfq_tsne_embed(
    coords: *const f64,
    k: usize,
    dim: usize,
    params: *const MfqTsneParams,
    out_xy: *mut f64,
) -> MfqStatus {
    if coords.is_null() || params.is_null() || out_xy.is_null() {
        return fail(
            MfqStatus::NullPointer,
            "coords, params and out_xy must be non-null",
        );
    }
    if k < 2 || dim == 0 {
        return fail(
            MfqStatus::InvalidArgument,
            "need k >= 2 points of dimension >= 1",
        );
    }
    let raw = unsafe { std::slice::from_raw_parts(coords, k * dim) };
    let rows: Vec<Vec<f64>> = raw.chunks(dim).map(|c| c.to_vec()).collect();
    let labels = (0..k).map(|i| i.to_string()).collect();
    let set = match PointSet::new(labels, rows) {
        Ok(s) => s,
        Err(e) => return fail(MfqStatus::InvalidArgument, &e.to_string()),
    };
    let p = unsafe { &*params };
    let params = TsneParams {
        perplexity: p.perplexity,
        iterations: p.iterations,
        learning_rate: p.learning_rate,
        seed: p.seed,
        ..Default::default()
    };
    match embed(&set, &params) {
        Ok(embedding) => {
            for (i, point) in embedding.coords.iter().enumerate() {
                unsafe {
                    *out_xy.add(i * 2) = point[0];
                    *out_xy.add(i * 2 + 1) = point[1];
                }
            }
            MfqStatus::Ok
        }
        Err(e) => fail(MfqStatus::InvalidArgument, &e.to_string()),
    }
}
