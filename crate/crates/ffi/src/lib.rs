//! C ABI over the stakemarket engine and matchers.
//!
//! Handles are opaque and owned by the caller once created; release them with
//! the matching `*_free` function. Every fallible call returns an [`SmStatus`]
//! and, on failure, stores a message retrievable with [`sm_last_error_message`]
//! on the same thread. Money crosses the boundary as integer ticks of 0.1.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stakemarket::config::ScenarioConfig;
use stakemarket::engine::{advance_period, MarketParams, MarketState, PeriodReport};
use stakemarket::matching::{new_matcher, Algorithm, GsmFallback, MatchOutcome, Matcher, PoolEntry};
use stakemarket::Money;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Engine = 4,
    Finished = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmAlgorithm {
    Gcm = 0,
    GsmReject = 1,
    GsmLongest = 2,
    Cfm = 3,
    CfmReject = 4,
}

impl From<SmAlgorithm> for Algorithm {
    fn from(a: SmAlgorithm) -> Self {
        match a {
            SmAlgorithm::Gcm => Algorithm::Gcm,
            SmAlgorithm::GsmReject => Algorithm::Gsm(GsmFallback::Reject),
            SmAlgorithm::GsmLongest => Algorithm::Gsm(GsmFallback::Longest),
            SmAlgorithm::Cfm => Algorithm::Cfm,
            SmAlgorithm::CfmReject => Algorithm::CfmReject,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmPeriod {
    pub period: u32,
    pub price_ticks: u64,
    pub floor_ticks: u64,
    pub next_floor_ticks: u64,
    pub clamped: bool,
    pub floor_supply: u64,
    pub demand: u64,
    pub submitted: u64,
    pub matched: u64,
    pub infeasible: u64,
    pub treasury_delta_ticks: i64,
}

impl From<&PeriodReport> for SmPeriod {
    fn from(r: &PeriodReport) -> Self {
        SmPeriod {
            period: r.period,
            price_ticks: r.price.ticks(),
            floor_ticks: r.floor.ticks(),
            next_floor_ticks: r.next_floor.ticks(),
            clamped: r.clamped,
            floor_supply: r.floor_supply,
            demand: r.demand,
            submitted: r.submitted as u64,
            matched: r.matched() as u64,
            infeasible: r.infeasible() as u64,
            treasury_delta_ticks: r.treasury_delta,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmPoolEntry {
    pub id: u32,
    pub tau: u32,
    pub cost_ticks: u64,
}

impl From<SmPoolEntry> for PoolEntry {
    fn from(e: SmPoolEntry) -> Self {
        PoolEntry::new(e.id, e.tau, Money::from_ticks(e.cost_ticks))
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmMatchKind {
    Matched = 0,
    Rejected = 1,
    Empty = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmMatch {
    pub kind: SmMatchKind,
    /// Valid only when `kind` is matched.
    pub provider: SmPoolEntry,
    pub feasible: bool,
}

/// A market loaded from a scenario, advanced one period at a time.
pub struct SmEngine {
    state: MarketState,
    params: MarketParams,
    algo: Algorithm,
}

pub struct SmMatcher {
    inner: Box<dyn Matcher>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: SmStatus, msg: impl Into<String>) -> SmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SmStatus) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SmStatus::Panic, "internal panic"),
    }
}

/// Length in bytes of the last error message on this thread, without the NUL.
#[no_mangle]
pub extern "C" fn sm_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` as a NUL-terminated string,
/// truncating to `len - 1` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses and validates a TOML scenario and stores a new engine in `out`.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_new(toml: *const c_char, out: *mut *mut SmEngine) -> SmStatus {
    guard(|| {
        if toml.is_null() || out.is_null() {
            return fail(SmStatus::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(toml).to_str() else {
            return fail(SmStatus::InvalidUtf8, "scenario text is not UTF-8");
        };
        let scenario = match ScenarioConfig::parse(text).and_then(|c| c.validate()) {
            Ok(s) => s,
            Err(e) => return fail(SmStatus::Config, e.to_string()),
        };
        let state = match MarketState::new(&scenario.params, scenario.providers, scenario.jobs) {
            Ok(s) => s,
            Err(e) => return fail(SmStatus::Config, e.to_string()),
        };
        let engine = SmEngine { state, params: scenario.params, algo: scenario.algo };
        *out = Box::into_raw(Box::new(engine));
        SmStatus::Ok
    })
}

/// # Safety
/// `engine` must be null or a handle from [`sm_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_free(engine: *mut SmEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Overrides the matching rule for the remaining periods.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_set_algorithm(engine: *mut SmEngine, algo: SmAlgorithm) -> SmStatus {
    let Some(e) = engine.as_mut() else {
        return fail(SmStatus::NullPointer, "null engine");
    };
    e.algo = algo.into();
    SmStatus::Ok
}

/// Advances one period. Returns `Finished` once the horizon is reached.
/// `out` may be null.
///
/// # Safety
/// `engine` must be a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_step(engine: *mut SmEngine, out: *mut SmPeriod) -> SmStatus {
    guard(|| {
        let Some(e) = engine.as_mut() else {
            return fail(SmStatus::NullPointer, "null engine");
        };
        if e.state.period >= e.params.horizon {
            return fail(SmStatus::Finished, "horizon reached");
        }
        match advance_period(&mut e.state, &e.params, e.algo) {
            Ok(report) => {
                if let Some(out) = out.as_mut() {
                    *out = SmPeriod::from(&report);
                }
                SmStatus::Ok
            }
            Err(err) => fail(SmStatus::Engine, err.to_string()),
        }
    })
}

/// Runs every remaining period.
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_run(engine: *mut SmEngine) -> SmStatus {
    loop {
        match sm_engine_step(engine, ptr::null_mut()) {
            SmStatus::Ok => {}
            SmStatus::Finished => return SmStatus::Ok,
            other => return other,
        }
    }
}

/// Next period to run, or 0 for a null handle.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_period(engine: *const SmEngine) -> u32 {
    engine.as_ref().map_or(0, |e| e.state.period)
}

/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_horizon(engine: *const SmEngine) -> u32 {
    engine.as_ref().map_or(0, |e| e.params.horizon)
}

/// Most recently posted price in ticks.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_price(engine: *const SmEngine) -> u64 {
    engine.as_ref().map_or(0, |e| e.state.posted_price.ticks())
}

/// Number of periods already run.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_history_len(engine: *const SmEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.state.history.len())
}

/// # Safety
/// `engine` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_engine_history_get(engine: *const SmEngine, index: usize, out: *mut SmPeriod) -> SmStatus {
    let (Some(e), Some(out)) = (engine.as_ref(), out.as_mut()) else {
        return fail(SmStatus::NullPointer, "null argument");
    };
    match e.state.history.get(index) {
        Some(r) => {
            *out = SmPeriod::from(r);
            SmStatus::Ok
        }
        None => fail(SmStatus::OutOfRange, format!("period index {index} not yet run")),
    }
}

/// Builds a matcher over `len` entries. `price_ticks` sizes the GCM buckets
/// and is ignored by the other rules.
///
/// # Safety
/// `entries` must point to `len` entries (or be null with `len == 0`);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_new(
    algo: SmAlgorithm,
    entries: *const SmPoolEntry,
    len: usize,
    price_ticks: u64,
    out: *mut *mut SmMatcher,
) -> SmStatus {
    guard(|| {
        if out.is_null() || (entries.is_null() && len > 0) {
            return fail(SmStatus::NullPointer, "null argument");
        }
        let pool: Vec<PoolEntry> = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(entries, len).iter().map(|&e| e.into()).collect()
        };
        let inner = new_matcher(algo.into(), &pool, Money::from_ticks(price_ticks));
        *out = Box::into_raw(Box::new(SmMatcher { inner }));
        SmStatus::Ok
    })
}

/// # Safety
/// `matcher` must be null or a handle from [`sm_matcher_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_free(matcher: *mut SmMatcher) {
    if !matcher.is_null() {
        drop(Box::from_raw(matcher));
    }
}

/// # Safety
/// `matcher` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_insert(matcher: *mut SmMatcher, entry: SmPoolEntry) -> SmStatus {
    guard(|| {
        let Some(m) = matcher.as_mut() else {
            return fail(SmStatus::NullPointer, "null matcher");
        };
        m.inner.insert(entry.into());
        SmStatus::Ok
    })
}

/// Serves one job of `hours` hours.
///
/// # Safety
/// `matcher` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_match(matcher: *mut SmMatcher, hours: u32, out: *mut SmMatch) -> SmStatus {
    guard(|| {
        let (Some(m), Some(out)) = (matcher.as_mut(), out.as_mut()) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        if hours == 0 {
            return fail(SmStatus::OutOfRange, "job length must be at least one hour");
        }
        *out = match m.inner.match_job(hours) {
            MatchOutcome::Matched { provider, feasible } => SmMatch {
                kind: SmMatchKind::Matched,
                provider: SmPoolEntry { id: provider.id, tau: provider.tau, cost_ticks: provider.cost.ticks() },
                feasible,
            },
            MatchOutcome::Rejected => {
                SmMatch { kind: SmMatchKind::Rejected, provider: SmPoolEntry::default(), feasible: false }
            }
            MatchOutcome::Empty => {
                SmMatch { kind: SmMatchKind::Empty, provider: SmPoolEntry::default(), feasible: false }
            }
        };
        SmStatus::Ok
    })
}

/// # Safety
/// `matcher` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_len(matcher: *const SmMatcher) -> usize {
    matcher.as_ref().map_or(0, |m| m.inner.len())
}

/// Basic operations performed so far.
///
/// # Safety
/// `matcher` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_matcher_ops(matcher: *const SmMatcher) -> u64 {
    matcher.as_ref().map_or(0, |m| m.inner.ops())
}
