//! C interface to the `abcs` crate.
//!
//! Instances and policies are opaque handles created and freed through this
//! interface. Every fallible call returns an [`AbcsStatus`]; on failure the
//! message is available from [`abcs_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use abcs::oracle::{self, OracleOptions};
use abcs::policy::PolicyError;
use abcs::{Instance, Mode, OracleError, Policy, PolicyConfig, PolicyKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInstance = 3,
    Unsupported = 4,
    BufferTooSmall = 5,
    WrongMode = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcsMode {
    Active = 0,
    Proportional = 1,
    Agnostic = 2,
    Oblivious = 3,
}

impl From<AbcsMode> for Mode {
    fn from(m: AbcsMode) -> Mode {
        match m {
            AbcsMode::Active => Mode::Active,
            AbcsMode::Proportional => Mode::Proportional,
            AbcsMode::Agnostic => Mode::Agnostic,
            AbcsMode::Oblivious => Mode::Oblivious,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcsPolicyKind {
    TrackAndStop = 0,
    BestChallenger = 1,
    Uniform = 2,
}

impl From<AbcsPolicyKind> for PolicyKind {
    fn from(k: AbcsPolicyKind) -> PolicyKind {
        match k {
            AbcsPolicyKind::TrackAndStop => PolicyKind::Tas,
            AbcsPolicyKind::BestChallenger => PolicyKind::Bc,
            AbcsPolicyKind::Uniform => PolicyKind::Uniform,
        }
    }
}

/// Summary of an oracle solve. `tstar` is infinite when the instance is
/// practically unidentifiable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcsOracleResult {
    pub tstar: f64,
    pub lower_value: f64,
    pub upper_value: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Opaque bandit instance.
pub struct AbcsInstance(Instance);

/// Opaque sequential policy.
pub struct AbcsPolicy(Policy);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (AbcsStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> AbcsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbcsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AbcsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (AbcsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T) {
    if !p.is_null() {
        *p = v;
    }
}

/// Copies `src` into a caller buffer of `cap` elements and stores the
/// length needed in `len`.
unsafe fn fill<T: Copy>(src: &[T], out: *mut T, cap: usize, len: *mut usize) -> Result<(), Failure> {
    write(len, src.len());
    if src.len() > cap {
        return Err((AbcsStatus::BufferTooSmall, format!("buffer holds {cap} values, {} needed", src.len())));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

fn policy_failure(e: PolicyError) -> Failure {
    let status = match e {
        PolicyError::WrongMode { .. } => AbcsStatus::WrongMode,
        PolicyError::Config(_) => AbcsStatus::Unsupported,
        _ => AbcsStatus::InvalidArgument,
    };
    (status, e.to_string())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn abcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an instance from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn abcs_instance_from_json(json: *const c_char, out: *mut *mut AbcsInstance) -> AbcsStatus {
    run(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| (AbcsStatus::InvalidArgument, e.to_string()))?;
        let inst = Instance::from_json_str(s).map_err(|e| (AbcsStatus::InvalidInstance, e.to_string()))?;
        *out = Box::into_raw(Box::new(AbcsInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from [`abcs_instance_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn abcs_instance_free(inst: *mut AbcsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of arms (control included) and of subpopulations.
///
/// # Safety
/// `inst` must be a live handle; the outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn abcs_instance_shape(inst: *const AbcsInstance, arms: *mut usize, subpops: *mut usize) -> AbcsStatus {
    run(|| {
        let inst = &borrow(inst, "instance")?.0;
        write(arms, inst.arms());
        write(subpops, inst.j());
        Ok(())
    })
}

/// Treatment arms whose weighted mean beats the control, in increasing
/// order.
///
/// # Safety
/// `inst` must be a live handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn abcs_instance_answer_set(inst: *const AbcsInstance, out: *mut usize, cap: usize, len: *mut usize) -> AbcsStatus {
    run(|| {
        let inst = &borrow(inst, "instance")?.0;
        fill(&inst.answer_set(), out, cap, len)
    })
}

/// Characteristic time and oracle weights for one mode. `wstar` receives
/// the arms-by-subpopulations weights in row-major order when non-null.
/// A non-positive `tol` or zero `max_iters` selects the default.
///
/// # Safety
/// `inst` must be a live handle, `result` a valid pointer and `wstar`
/// either null or able to hold `wstar_cap` values.
#[no_mangle]
pub unsafe extern "C" fn abcs_oracle_solve(
    inst: *const AbcsInstance,
    mode: AbcsMode,
    tol: f64,
    max_iters: usize,
    result: *mut AbcsOracleResult,
    wstar: *mut f64,
    wstar_cap: usize,
) -> AbcsStatus {
    run(|| {
        let inst = &borrow(inst, "instance")?.0;
        let result = borrow_mut(result, "result")?;
        let mut opts = OracleOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        if max_iters > 0 {
            opts.max_iters = max_iters;
        }
        let r = oracle::solve_preferring_closed_form(inst, mode.into(), &opts).map_err(|e| match e {
            OracleError::Unsupported(_) => (AbcsStatus::Unsupported, e.to_string()),
            OracleError::Model(_) => (AbcsStatus::InvalidInstance, e.to_string()),
        })?;
        *result = AbcsOracleResult {
            tstar: r.tstar,
            lower_value: r.lower_value,
            upper_value: r.upper_value,
            iterations: r.iterations as u64,
            converged: r.converged,
        };
        if !wstar.is_null() {
            let w: Vec<f64> = r.wstar.as_array().iter().copied().collect();
            fill(&w, wstar, wstar_cap, ptr::null_mut())?;
        }
        Ok(())
    })
}

/// Creates a policy for the shape, family and weights of `inst`. Only the
/// metadata is used; the means stay hidden from the policy.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_new(inst: *const AbcsInstance, kind: AbcsPolicyKind, mode: AbcsMode, out: *mut *mut AbcsPolicy) -> AbcsStatus {
    run(|| {
        let inst = &borrow(inst, "instance")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = Policy::new(inst.meta(), PolicyConfig::new(kind.into(), mode.into())).map_err(policy_failure)?;
        *out = Box::into_raw(Box::new(AbcsPolicy(p)));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from [`abcs_policy_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_free(policy: *mut AbcsPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Chooses the next arm. In proportional mode `revealed_subpop` is the
/// subpopulation of the incoming unit; other modes ignore it. `subpop`
/// receives the requested subpopulation in active mode and -1 otherwise.
///
/// # Safety
/// `policy` must be a live handle; the outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_decide(policy: *mut AbcsPolicy, revealed_subpop: i64, arm: *mut usize, subpop: *mut i64) -> AbcsStatus {
    run(|| {
        let p = &mut borrow_mut(policy, "policy")?.0;
        let d = match p.config().mode {
            Mode::Active => p.decide_active(),
            Mode::Proportional => {
                let i = usize::try_from(revealed_subpop).map_err(|_| (AbcsStatus::InvalidArgument, format!("subpopulation {revealed_subpop} out of range")))?;
                p.decide_proportional(i)
            }
            Mode::Agnostic | Mode::Oblivious => p.decide_agnostic(),
        }
        .map_err(policy_failure)?;
        write(arm, d.arm);
        write(subpop, d.subpop.map_or(-1, |i| i as i64));
        Ok(())
    })
}

/// Records an outcome. Pass -1 as `subpop` when it was not observed
/// (oblivious mode).
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_observe(policy: *mut AbcsPolicy, arm: usize, subpop: i64, outcome: f64) -> AbcsStatus {
    run(|| {
        let p = &mut borrow_mut(policy, "policy")?.0;
        let i = (subpop >= 0).then_some(subpop as usize);
        p.observe(arm, i, outcome).map_err(policy_failure)
    })
}

/// Current GLR statistic and risk level; the policy may stop once
/// `delta_hat` is at most the target risk.
///
/// # Safety
/// `policy` must be a live handle; the outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_risk(policy: *const AbcsPolicy, lambda: *mut f64, delta_hat: *mut f64) -> AbcsStatus {
    run(|| {
        let r = borrow(policy, "policy")?.0.risk_report();
        write(lambda, r.lambda);
        write(delta_hat, r.delta_hat);
        Ok(())
    })
}

/// Currently recommended set of arms.
///
/// # Safety
/// `policy` must be a live handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn abcs_policy_recommendation(policy: *const AbcsPolicy, out: *mut usize, cap: usize, len: *mut usize) -> AbcsStatus {
    run(|| {
        let r = borrow(policy, "policy")?.0.risk_report();
        fill(&r.recommended, out, cap, len)
    })
}
