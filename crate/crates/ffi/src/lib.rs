//! C interface to `acn-bounds`.
//!
//! Every call returns an [`AcnStatus`]; results come back through out-parameters.
//! On failure [`acn_last_error`] describes the problem. Strings handed to the
//! caller must be released with [`acn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acn_bounds::adversaries::AttackKind;
use acn_bounds::bounds::{
    counting_bound, impossibility_region, trilemma_advantage, trilemma_compromising, BoundKind,
    RegionPoint, TrilemmaSetting, Verdict,
};
use acn_bounds::game::{estimate_advantage, EstimateOptions, Game, ResultRecord};
use acn_bounds::model::{AdversaryCapability, ProtocolParams};
use acn_bounds::notions::{generate_pair, Notion};
use acn_bounds::protocols::{Protocol, ProtocolKind};
use acn_bounds::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcnStatus {
    Ok = 0,
    InvalidInput = 1,
    Config = 2,
    CapabilityViolation = 3,
    ResourceLimit = 4,
    NotFound = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcnSetting {
    Sync = 0,
    UnsyncImproved = 1,
    UnsyncOriginal = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcnBound {
    Counting = 0,
    Trilemma = 1,
    Dropping = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcnVerdict {
    Impossible = 0,
    Possible = 1,
    NotApplicable = 2,
}

/// Opaque protocol parameters.
pub struct AcnParams {
    inner: ProtocolParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: Error) -> AcnStatus {
    set_error(&e.to_string());
    match e {
        Error::InvalidInput(_) => AcnStatus::InvalidInput,
        Error::Config(_) => AcnStatus::Config,
        Error::CapabilityViolation(_) => AcnStatus::CapabilityViolation,
        Error::ResourceLimit(_) => AcnStatus::ResourceLimit,
        Error::NotFound(_) => AcnStatus::NotFound,
    }
}

fn null(what: &str) -> AcnStatus {
    set_error(&format!("null pointer: {what}"));
    AcnStatus::NullPointer
}

fn guard(f: impl FnOnce() -> AcnStatus) -> AcnStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        AcnStatus::Panic
    })
}

impl From<AcnSetting> for TrilemmaSetting {
    fn from(s: AcnSetting) -> Self {
        match s {
            AcnSetting::Sync => TrilemmaSetting::Sync,
            AcnSetting::UnsyncImproved => TrilemmaSetting::UnsyncImproved,
            AcnSetting::UnsyncOriginal => TrilemmaSetting::UnsyncOriginal,
        }
    }
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// New parameters for `n` users and latency `l_max`, with no extra traffic.
/// Release with [`acn_params_free`].
#[no_mangle]
pub extern "C" fn acn_params_new(n: u32, l_max: u32) -> *mut AcnParams {
    Box::into_raw(Box::new(AcnParams { inner: ProtocolParams::new(n, l_max) }))
}

/// # Safety
/// `params` must be null or come from [`acn_params_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn acn_params_free(params: *mut AcnParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn with_params(params: *mut AcnParams, f: impl FnOnce(&mut ProtocolParams)) -> AcnStatus {
    match params.as_mut() {
        Some(p) => {
            f(&mut p.inner);
            AcnStatus::Ok
        }
        None => null("params"),
    }
}

/// Dummy rate; keeps the total sending probability as set.
///
/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_beta(params: *mut AcnParams, beta: f64) -> AcnStatus {
    with_params(params, |p| {
        let total = p.p();
        p.beta = beta;
        p.p_real = total - beta;
    })
}

/// Total sending probability, real plus dummy.
///
/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_p(params: *mut AcnParams, p: f64) -> AcnStatus {
    with_params(params, |x| x.p_real = p - x.beta)
}

/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_l_exp(params: *mut AcnParams, l_exp: f64) -> AcnStatus {
    with_params(params, |p| p.l_exp = l_exp)
}

/// Number of relays.
///
/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_k(params: *mut AcnParams, k: u32) -> AcnStatus {
    with_params(params, |p| p.k = k)
}

/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_threshold(params: *mut AcnParams, threshold: u32) -> AcnStatus {
    with_params(params, |p| p.threshold = threshold)
}

/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_copies(params: *mut AcnParams, copies: u32) -> AcnStatus {
    with_params(params, |p| p.copies = copies)
}

/// # Safety
/// `params` must be a live handle from [`acn_params_new`].
#[no_mangle]
pub unsafe extern "C" fn acn_params_set_rounds(params: *mut AcnParams, rounds: u32) -> AcnStatus {
    with_params(params, |p| p.rounds = rounds)
}

/// Timing-attack lower bound without compromised relays.
///
/// # Safety
/// `out_delta` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn acn_trilemma_advantage(
    setting: AcnSetting,
    l_max: u32,
    beta: f64,
    p: f64,
    n: u32,
    out_delta: *mut f64,
) -> AcnStatus {
    guard(|| {
        if out_delta.is_null() {
            return null("out_delta");
        }
        match trilemma_advantage(setting.into(), l_max, beta, p, n) {
            Ok(r) => {
                *out_delta = r.delta;
                AcnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Lower bound with `c_p` of `k` relays compromised; `x` is `beta` for the
/// synchronized setting and `p` otherwise.
///
/// # Safety
/// `out_delta` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn acn_trilemma_compromising(
    setting: AcnSetting,
    l_max: u32,
    x: f64,
    n: u32,
    c_p: u32,
    k: u32,
    out_delta: *mut f64,
) -> AcnStatus {
    guard(|| {
        if out_delta.is_null() {
            return null("out_delta");
        }
        match trilemma_compromising(setting.into(), l_max, x, n, c_p, k) {
            Ok(r) => {
                *out_delta = r.delta;
                AcnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Minimum number of packets for `out_r` deliveries among `h` honest senders.
///
/// # Safety
/// `out_min_com` must be null or point to writable memory for one `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn acn_counting_min_com(out_r: u64, h: u64, out_min_com: *mut u64) -> AcnStatus {
    guard(|| {
        if out_min_com.is_null() {
            return null("out_min_com");
        }
        match counting_bound(out_r, h, None) {
            Ok(b) => {
                *out_min_com = b.min_com;
                AcnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Classifies a parameter point against one bound. `out_threshold` receives
/// NaN when the bound has no threshold at this point. Dropping uses log base 2.
///
/// # Safety
/// Both out-pointers must be null or writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn acn_region(
    bound: AcnBound,
    l_max: u32,
    beta: f64,
    p: f64,
    n: u32,
    c_p: u32,
    lambda: f64,
    poly: f64,
    out_verdict: *mut AcnVerdict,
    out_threshold: *mut f64,
) -> AcnStatus {
    guard(|| {
        if out_verdict.is_null() || out_threshold.is_null() {
            return null("out_verdict or out_threshold");
        }
        let kind = match bound {
            AcnBound::Counting => BoundKind::Counting,
            AcnBound::Trilemma => BoundKind::Trilemma,
            AcnBound::Dropping => BoundKind::Dropping,
        };
        let mut point = RegionPoint::new(l_max, beta, n);
        point.p = p;
        point.c_p = c_p;
        point.lambda = lambda;
        match impossibility_region(kind, &point, poly) {
            Ok(v) => {
                *out_verdict = match v.verdict {
                    Verdict::Impossible => AcnVerdict::Impossible,
                    Verdict::Possible => AcnVerdict::Possible,
                    Verdict::NotApplicable => AcnVerdict::NotApplicable,
                };
                *out_threshold = v.threshold.unwrap_or(f64::NAN);
                AcnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, AcnStatus> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s)
        .to_str()
        .map(Some)
        .map_err(|_| fail(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    params: &ProtocolParams,
    protocol: &str,
    attack: &str,
    notion: &str,
    c_p: u32,
    c_a: u32,
    trials: u64,
    seed: u64,
) -> acn_bounds::Result<String> {
    let kind: ProtocolKind = protocol.parse()?;
    let attack: AttackKind = attack.parse()?;
    let notion: Notion = notion.parse()?;
    let proto = Protocol::new(kind, params.clone())?;
    let pair = generate_pair(&notion, params, seed)?;
    let dropping = attack == AttackKind::Dropping;
    let cap = AdversaryCapability {
        observed_senders: (0..params.n).collect(),
        receiver_corrupted: true,
        c_p,
        c_a,
        active_drop: dropping,
        knows_expected_reception: dropping,
        knows_total_real: false,
    };
    let game = Game::new(proto, attack, cap, pair)?;
    let est = estimate_advantage(&game, trials, seed, EstimateOptions::default())?;
    serde_json::to_string(&ResultRecord::new(&game, &est, seed))
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Runs a simulated game and returns its result record as JSON in `*out_json`.
/// `notion` may be null for `SO`. The adversary observes every sender link
/// and the receiver; dropping attacks also get active control.
///
/// # Safety
/// `params` must be a live handle; string arguments must be null or
/// NUL-terminated; `out_json` must be writable. Free the result with
/// [`acn_string_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn acn_simulate_json(
    params: *const AcnParams,
    protocol: *const c_char,
    attack: *const c_char,
    notion: *const c_char,
    c_p: u32,
    c_a: u32,
    trials: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> AcnStatus {
    guard(|| {
        if out_json.is_null() {
            return null("out_json");
        }
        *out_json = ptr::null_mut();
        let Some(params) = params.as_ref() else { return null("params") };
        let args = (|| {
            let protocol = text(protocol, "protocol")?.ok_or_else(|| null("protocol"))?;
            let attack = text(attack, "attack")?.ok_or_else(|| null("attack"))?;
            let notion = text(notion, "notion")?.unwrap_or("SO");
            Ok((protocol, attack, notion))
        })();
        let (protocol, attack, notion) = match args {
            Ok(a) => a,
            Err(status) => return status,
        };
        match simulate(&params.inner, protocol, attack, notion, c_p, c_a, trials, seed) {
            Ok(json) => {
                *out_json = CString::new(json).unwrap_or_default().into_raw();
                AcnStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn acn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
