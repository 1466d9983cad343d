//! C ABI over [`lexqa::Engine`].
//!
//! Every fallible function returns a [`LexqaStatus`]; on failure the message
//! is available from [`lexqa_last_error`] on the same thread. Strings handed
//! out by the library must be released with [`lexqa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lexqa::corpus::load_pairs;
use lexqa::{
    ArticleId, BoostModel, Corpus, EmbeddingTable, Engine, Error, Label, RankerParams, TermDictionary, TextPipeline, NUM_FEATURES,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexqaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidParams = 5,
    UnknownArticle = 6,
    NoClassifier = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

/// Ranker parameters. `i_art` is derived as `1 - i_q`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexqaParams {
    pub k: u32,
    pub i_q: f64,
    pub confidence_thresh: f64,
    pub reference_thresh: f64,
}

impl From<RankerParams> for LexqaParams {
    fn from(p: RankerParams) -> Self {
        LexqaParams { k: p.k as u32, i_q: p.i_q, confidence_thresh: p.confidence_thresh, reference_thresh: p.reference_thresh }
    }
}

impl From<LexqaParams> for RankerParams {
    fn from(p: LexqaParams) -> Self {
        let mut out = RankerParams::default().with_i_q(p.i_q);
        out.k = p.k as usize;
        out.confidence_thresh = p.confidence_thresh;
        out.reference_thresh = p.reference_thresh;
        out
    }
}

/// Opaque engine handle.
pub struct LexqaEngine {
    inner: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> LexqaStatus {
    match e {
        Error::Io { .. } => LexqaStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::ModelVersion { .. } => LexqaStatus::Parse,
        Error::UnknownArticle(_) => LexqaStatus::UnknownArticle,
        Error::EmptyModel => LexqaStatus::NoClassifier,
        _ => LexqaStatus::InvalidParams,
    }
}

type Outcome = Result<(), LexqaStatus>;

fn fail(status: LexqaStatus, msg: &str) -> LexqaStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Outcome) -> LexqaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LexqaStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(LexqaStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: lexqa::Result<T>) -> Result<T, LexqaStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, LexqaStatus> {
    if p.is_null() {
        return Err(fail(LexqaStatus::NullArgument, &format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(LexqaStatus::InvalidUtf8, &format!("{name} is not UTF-8")))
}

unsafe fn engine_ref<'a>(e: *const LexqaEngine) -> Result<&'a LexqaEngine, LexqaStatus> {
    e.as_ref().ok_or_else(|| fail(LexqaStatus::NullArgument, "engine is null"))
}

unsafe fn engine_mut<'a>(e: *mut LexqaEngine) -> Result<&'a mut LexqaEngine, LexqaStatus> {
    e.as_mut().ok_or_else(|| fail(LexqaStatus::NullArgument, "engine is null"))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Outcome {
    if out.is_null() {
        return Err(fail(LexqaStatus::NullArgument, "output pointer is null"));
    }
    let c = CString::new(s).map_err(|_| fail(LexqaStatus::Internal, "output contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

/// Writes the built-in parameter values to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `LexqaParams`.
#[no_mangle]
pub unsafe extern "C" fn lexqa_params_default(out: *mut LexqaParams) -> LexqaStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| fail(LexqaStatus::NullArgument, "out is null"))?;
        *out = RankerParams::default().into();
        Ok(())
    })
}

/// Loads a statute file, builds the model and returns a handle in `out`.
///
/// `pairs_path` (JSONL training pairs) and `params` may be null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `params` must be null or
/// valid; `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_new(
    statutes_path: *const c_char,
    pairs_path: *const c_char,
    params: *const LexqaParams,
    out: *mut *mut LexqaEngine,
) -> LexqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(LexqaStatus::NullArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let statutes = str_arg(statutes_path, "statutes_path")?;
        let corpus = lift(Corpus::load(statutes))?;
        let pairs =
            if pairs_path.is_null() { Vec::new() } else { lift(load_pairs(Path::new(str_arg(pairs_path, "pairs_path")?), Some(&corpus)))? };
        let params = params.as_ref().map_or_else(RankerParams::default, |p| (*p).into());
        let inner = lift(Engine::build(corpus, &pairs, params, TextPipeline::default()))?;
        *out = Box::into_raw(Box::new(LexqaEngine { inner }));
        Ok(())
    })
}

/// Loads word vectors used by the distributional feature.
///
/// # Safety
/// `engine` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_load_vectors(engine: *mut LexqaEngine, path: *const c_char) -> LexqaStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        e.inner.embeddings = lift(EmbeddingTable::load(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Loads a trained entailment classifier.
///
/// # Safety
/// `engine` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_load_boost(engine: *mut LexqaEngine, path: *const c_char) -> LexqaStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        e.inner.boost = Some(lift(BoostModel::load(str_arg(path, "path")?))?);
        Ok(())
    })
}

/// Loads a question-side term dictionary.
///
/// # Safety
/// `engine` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_load_dict(engine: *mut LexqaEngine, path: *const c_char) -> LexqaStatus {
    guard(|| {
        let e = engine_mut(engine)?;
        let d = lift(TermDictionary::load(str_arg(path, "path")?, &e.inner.pipeline))?;
        e.inner.dictionary = d;
        Ok(())
    })
}

/// Ranks articles for `question`. `out_json` receives
/// `{"ranked":[{"id":..,"score":..}],"answer":[..]}`.
///
/// # Safety
/// `engine` must be a live handle; `question` NUL-terminated; `out_json`
/// writable. Free the result with `lexqa_string_free`.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_retrieve(
    engine: *const LexqaEngine,
    question: *const c_char,
    out_json: *mut *mut c_char,
) -> LexqaStatus {
    guard(|| {
        let e = engine_ref(engine)?;
        let r = e.inner.retrieve(str_arg(question, "question")?);
        put_string(out_json, lift(serde_json::to_string(&r).map_err(Error::from))?)
    })
}

/// Retrieves and classifies. `out_label` receives 1 for YES and 0 for NO;
/// `out_margin` the normalized vote margin. Either may be null.
///
/// # Safety
/// `engine` must be a live handle; `question` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_answer(
    engine: *const LexqaEngine,
    question: *const c_char,
    out_label: *mut i32,
    out_margin: *mut f64,
) -> LexqaStatus {
    guard(|| {
        let e = engine_ref(engine)?;
        let a = lift(e.inner.answer(str_arg(question, "question")?))?;
        if let Some(l) = out_label.as_mut() {
            *l = i32::from(a.label == Label::Yes);
        }
        if let Some(m) = out_margin.as_mut() {
            *m = a.margin;
        }
        Ok(())
    })
}

/// Writes the feature vector of `question` against the comma-separated
/// `article_ids` (joined into one evidence text) into `out`, which must hold
/// `lexqa_feature_count()` values.
///
/// # Safety
/// `engine` must be a live handle; strings NUL-terminated; `out` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_features(
    engine: *const LexqaEngine,
    question: *const c_char,
    article_ids: *const c_char,
    out: *mut f64,
    len: usize,
) -> LexqaStatus {
    guard(|| {
        let e = engine_ref(engine)?;
        if out.is_null() {
            return Err(fail(LexqaStatus::NullArgument, "out is null"));
        }
        if len < NUM_FEATURES {
            return Err(fail(LexqaStatus::BufferTooSmall, &format!("need {NUM_FEATURES} values, got {len}")));
        }
        let ids: Vec<ArticleId> =
            str_arg(article_ids, "article_ids")?.split(',').map(str::trim).filter(|s| !s.is_empty()).map(ArticleId::new).collect();
        let q = str_arg(question, "question")?;
        let vs = lift(e.inner.features(q, &ids))?;
        let v = vs.first().ok_or_else(|| fail(LexqaStatus::Internal, "no feature vector"))?;
        std::slice::from_raw_parts_mut(out, NUM_FEATURES).copy_from_slice(&v.values);
        Ok(())
    })
}

/// Number of entailment features.
#[no_mangle]
pub extern "C" fn lexqa_feature_count() -> usize {
    NUM_FEATURES
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must be null or a handle from `lexqa_engine_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexqa_engine_free(engine: *mut LexqaEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lexqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread; empty after a success. Valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lexqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn lexqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
