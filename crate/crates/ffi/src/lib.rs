//! C ABI over `pgpo-core`.
//!
//! Every function returns a [`PgpoStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`pgpo_last_error`]. Tables and queries are opaque handles created from
//! JSON (or generated from a seed) and released with their `_free`
//! function. Strings returned to the caller are released with
//! [`pgpo_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pgpo_core::optimizer::{normalize_advantages, select_active_set, Band};
use pgpo_core::reward::{self, RewardConfig};
use pgpo_core::table_env::{generate_episode, EnvSpec, Query, Table};
use pgpo_core::vcot::{canonical_chain, serialize};
use pgpo_core::verifier::{verify_text, Path};
use pgpo_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgpoStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument or config value (the CLI's validation class).
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    /// Malformed JSON or a table/query that fails its invariants.
    InvalidInput = 4,
    Runtime = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgpoPath {
    Rigorous = 0,
    Hallucination = 1,
    Shortcut = 2,
    FaithfulWrong = 3,
}

impl From<Path> for PgpoPath {
    fn from(p: Path) -> Self {
        match p {
            Path::Rigorous => PgpoPath::Rigorous,
            Path::Hallucination => PgpoPath::Hallucination,
            Path::Shortcut => PgpoPath::Shortcut,
            Path::FaithfulWrong => PgpoPath::FaithfulWrong,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgpoRewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub tau_high: f64,
    pub tau_low: f64,
}

impl From<PgpoRewardConfig> for RewardConfig {
    fn from(c: PgpoRewardConfig) -> Self {
        RewardConfig {
            alpha: c.alpha,
            beta: c.beta,
            tau_high: c.tau_high,
            tau_low: c.tau_low,
        }
    }
}

/// Percentile band `(lo, hi]`, in percent.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgpoBand {
    pub lo: f64,
    pub hi: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgpoBreakdown {
    pub r_fmt: f64,
    pub r_acc: f64,
    pub r_proc: f64,
    pub r_base: f64,
    pub composite: f64,
    pub path: PgpoPath,
    pub n_steps: usize,
    pub well_formed: bool,
}

/// Opaque table handle.
pub struct PgpoTable(Table);

/// Opaque query handle.
pub struct PgpoQuery(Query);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(PgpoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            e if e.is_validation() => PgpoStatus::InvalidArgument,
            Error::InvalidTable(_) | Error::Json { .. } | Error::CellOutOfBounds { .. } => PgpoStatus::InvalidInput,
            _ => PgpoStatus::Runtime,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PgpoStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PgpoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PgpoStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PgpoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(PgpoStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(null(what)),
        (false, _) => Ok(std::slice::from_raw_parts(p, n)),
    }
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes replaced")
        .into_raw()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pgpo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn pgpo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn pgpo_reward_config_default() -> PgpoRewardConfig {
    let d = RewardConfig::default();
    PgpoRewardConfig {
        alpha: d.alpha,
        beta: d.beta,
        tau_high: d.tau_high,
        tau_low: d.tau_low,
    }
}

/// Critic-gated composite reward for the given component scores.
///
/// # Safety
/// `cfg` may be null (defaults); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pgpo_composite_reward(
    cfg: *const PgpoRewardConfig,
    r_fmt: f64,
    r_acc: f64,
    r_proc: f64,
    out: *mut f64,
) -> PgpoStatus {
    guard(|| {
        let cfg: RewardConfig = cfg.as_ref().map_or_else(RewardConfig::default, |c| (*c).into());
        cfg.validate()?;
        write_out(out, reward::composite(r_fmt, r_acc, r_proc, &cfg), "out")
    })
}

/// Group-standardized advantages. `out` must hold `n` doubles.
///
/// # Safety
/// `rewards` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pgpo_normalize_advantages(
    rewards: *const f64,
    n: usize,
    std_floor: f64,
    out: *mut f64,
) -> PgpoStatus {
    guard(|| {
        let r = slice_arg(rewards, n, "rewards")?;
        let adv = normalize_advantages(r, std_floor)?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(adv.as_ptr(), out, adv.len());
        Ok(())
    })
}

/// Length-percentile active set. Writes the kept indices into `out` (which
/// must hold `n` entries), their count into `out_len` and whether the
/// whole-group fallback fired into `out_fallback`.
///
/// # Safety
/// `lengths` must point to `n` values, `bands` to `n_bands` bands and
/// `out` to `n` writable entries.
#[no_mangle]
pub unsafe extern "C" fn pgpo_select_active_set(
    lengths: *const usize,
    n: usize,
    bands: *const PgpoBand,
    n_bands: usize,
    out: *mut usize,
    out_len: *mut usize,
    out_fallback: *mut bool,
) -> PgpoStatus {
    guard(|| {
        let lens = slice_arg(lengths, n, "lengths")?;
        let bands: Vec<Band> = slice_arg(bands, n_bands, "bands")?
            .iter()
            .map(|b| Band::new(b.lo, b.hi))
            .collect();
        Band::validate_all(&bands)?;
        let set = select_active_set(lens, &bands)?;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(set.indices.as_ptr(), out, set.indices.len());
        write_out(out_len, set.indices.len(), "out_len")?;
        write_out(out_fallback, set.fallback, "out_fallback")
    })
}

/// Generate a seeded table and query with the default environment.
///
/// # Safety
/// Both out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pgpo_episode_generate(
    seed: u64,
    out_table: *mut *mut PgpoTable,
    out_query: *mut *mut PgpoQuery,
) -> PgpoStatus {
    guard(|| {
        if out_table.is_null() || out_query.is_null() {
            return Err(null("out_table/out_query"));
        }
        let ep = generate_episode(seed, &EnvSpec::default())?;
        out_table.write(Box::into_raw(Box::new(PgpoTable(ep.table))));
        out_query.write(Box::into_raw(Box::new(PgpoQuery(ep.query))));
        Ok(())
    })
}

/// Parse and validate a table from its JSON form (one `tables.jsonl` line).
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pgpo_table_from_json(json: *const c_char, out: *mut *mut PgpoTable) -> PgpoStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let t: Table = serde_json::from_str(text).map_err(|e| Fail(PgpoStatus::InvalidInput, e.to_string()))?;
        t.validate()?;
        write_out(out, Box::into_raw(Box::new(PgpoTable(t))), "out")
    })
}

/// Parse a query (one `queries.jsonl` line) and check it against `table`.
///
/// # Safety
/// `table` must be a live handle, `json` a nul-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pgpo_query_from_json(
    table: *const PgpoTable,
    json: *const c_char,
    out: *mut *mut PgpoQuery,
) -> PgpoStatus {
    guard(|| {
        let table = table.as_ref().ok_or_else(|| null("table"))?;
        let text = str_arg(json, "json")?;
        let q: Query = serde_json::from_str(text).map_err(|e| Fail(PgpoStatus::InvalidInput, e.to_string()))?;
        q.check(&table.0)?;
        write_out(out, Box::into_raw(Box::new(PgpoQuery(q))), "out")
    })
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pgpo_table_free(table: *mut PgpoTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `query` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pgpo_query_free(query: *mut PgpoQuery) {
    if !query.is_null() {
        drop(Box::from_raw(query));
    }
}

/// Question text of `query` as a new string (free with `pgpo_string_free`).
///
/// # Safety
/// `query` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pgpo_query_question(query: *const PgpoQuery, out: *mut *mut c_char) -> PgpoStatus {
    guard(|| {
        let q = query.as_ref().ok_or_else(|| null("query"))?;
        write_out(out, owned_string(q.0.question.clone()), "out")
    })
}

/// Serialized gold reasoning chain for `query` (free with `pgpo_string_free`).
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pgpo_gold_chain(
    table: *const PgpoTable,
    query: *const PgpoQuery,
    out: *mut *mut c_char,
) -> PgpoStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let q = query.as_ref().ok_or_else(|| null("query"))?;
        let chain = canonical_chain(&t.0, &q.0.gold_program)?;
        write_out(out, owned_string(serialize(&chain)), "out")
    })
}

/// Score trajectory text against a table and query. `cfg` may be null for
/// the default reward config.
///
/// # Safety
/// Handles must be live, `text` nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pgpo_verify(
    table: *const PgpoTable,
    query: *const PgpoQuery,
    text: *const c_char,
    cfg: *const PgpoRewardConfig,
    out: *mut PgpoBreakdown,
) -> PgpoStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let q = query.as_ref().ok_or_else(|| null("query"))?;
        let text = str_arg(text, "text")?;
        let cfg: RewardConfig = cfg.as_ref().map_or_else(RewardConfig::default, |c| (*c).into());
        cfg.validate()?;
        let b = reward::apply(verify_text(text, &t.0, &q.0), &cfg);
        write_out(
            out,
            PgpoBreakdown {
                r_fmt: b.r_fmt,
                r_acc: b.r_acc,
                r_proc: b.r_proc,
                r_base: b.r_base,
                composite: b.composite,
                path: b.path.into(),
                n_steps: b.per_step_verdicts.len(),
                well_formed: b.well_formed,
            },
            "out",
        )
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pgpo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
