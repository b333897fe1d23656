//! C ABI over the Diner Dash environment, the scripted expert and saved policies.
//!
//! Every fallible function returns a [`DdStatus`]; on failure a message is available from
//! [`dd_last_error`] on the same thread. Handles are opaque and must be released with their
//! `_free` function. Strings returned through `char **` are released with [`dd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dinerdash::expert::expert_action;
use dinerdash::harness::load_policy;
use dinerdash::policy::Policy;
use dinerdash::rng::{Rng, Stream};
use dinerdash::sim::{Env, EnvConfig, NUM_ACTIONS, STATE_DIM};
use dinerdash::Error;

pub const DD_NUM_ACTIONS: u32 = 57;
pub const DD_STATE_DIM: u32 = 40;

const _: () = assert!(NUM_ACTIONS == DD_NUM_ACTIONS as usize && STATE_DIM == DD_STATE_DIM as usize);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    ActionOutOfRange = 4,
    EpisodeDone = 5,
    NotReset = 6,
    Io = 7,
    Parse = 8,
    Data = 9,
    Panic = 10,
}

/// An environment instance.
pub struct DdEnv {
    env: Env,
}

/// A loaded policy with its own action-sampling stream.
pub struct DdPolicy {
    policy: Box<dyn Policy>,
    rng: Rng,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DdStatus {
    match e {
        Error::InvalidConfig { .. } => DdStatus::InvalidConfig,
        Error::ActionOutOfRange(_) => DdStatus::ActionOutOfRange,
        Error::EpisodeDone => DdStatus::EpisodeDone,
        Error::NotReset => DdStatus::NotReset,
        Error::Io { .. } => DdStatus::Io,
        Error::Parse { .. } | Error::MalformedLine { .. } => DdStatus::Parse,
        Error::InvalidArgument(_) => DdStatus::InvalidArgument,
        Error::Dataset(_) | Error::Shape(_) | Error::NonFinite(_) => DdStatus::Data,
    }
}

fn guard<F: FnOnce() -> Result<(), DdStatus>>(f: F) -> DdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DdStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            DdStatus::Panic
        }
    }
}

fn fail(e: Error) -> DdStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> DdStatus {
    set_error(&format!("{what} is null"));
    DdStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, DdStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        DdStatus::InvalidArgument
    })
}

unsafe fn write_state(out: *mut f64, state: &[f64]) {
    if !out.is_null() {
        ptr::copy_nonoverlapping(state.as_ptr(), out, STATE_DIM);
    }
}

/// Last error message on this thread, or an empty string. Valid until the next call into
/// this library from the same thread.
#[no_mangle]
pub extern "C" fn dd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create an environment. `config_toml` is the text of a TOML config or NULL for the
/// default (hard) preset. The environment must be reset before stepping.
///
/// # Safety
/// `config_toml` must be NULL or a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_env_new(config_toml: *const c_char, seed: u64, out: *mut *mut DdEnv) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = if config_toml.is_null() {
            EnvConfig::default()
        } else {
            EnvConfig::from_toml_str(str_arg(config_toml, "config_toml")?).map_err(fail)?
        };
        let env = Env::new(config, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(DdEnv { env }));
        Ok(())
    })
}

/// # Safety
/// `env` must be NULL or a handle from [`dd_env_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dd_env_free(env: *mut DdEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Start a new episode with `seed`, writing the 40 state values to `state_out` (may be NULL).
///
/// # Safety
/// `env` must be a live handle; `state_out` must be NULL or point to 40 doubles.
#[no_mangle]
pub unsafe extern "C" fn dd_env_reset(env: *mut DdEnv, seed: u64, state_out: *mut f64) -> DdStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let s = env.env.reset_with_seed(seed);
        write_state(state_out, &s);
        Ok(())
    })
}

/// Apply action `action` (0..=56). Any output pointer may be NULL.
///
/// # Safety
/// `env` must be a live handle; `state_out` must be NULL or point to 40 doubles; the
/// other outputs must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn dd_env_step(
    env: *mut DdEnv,
    action: i64,
    state_out: *mut f64,
    reward_out: *mut f64,
    done_out: *mut bool,
) -> DdStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        if !(0..NUM_ACTIONS as i64).contains(&action) {
            return Err(fail(Error::ActionOutOfRange(action)));
        }
        let r = env.env.step(action as usize).map_err(fail)?;
        write_state(state_out, &r.state);
        if let Some(p) = reward_out.as_mut() {
            *p = r.reward;
        }
        if let Some(p) = done_out.as_mut() {
            *p = r.done;
        }
        Ok(())
    })
}

/// Current encoded state.
///
/// # Safety
/// `env` must be a live handle; `state_out` must point to 40 doubles.
#[no_mangle]
pub unsafe extern "C" fn dd_env_state(env: *const DdEnv, state_out: *mut f64) -> DdStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        if state_out.is_null() {
            return Err(null("state_out"));
        }
        write_state(state_out, &env.env.encode());
        Ok(())
    })
}

/// Legality mask: `mask_out[k]` is 1 when action k would not be penalized as illegal.
///
/// # Safety
/// `env` must be a live handle; `mask_out` must point to 57 bytes.
#[no_mangle]
pub unsafe extern "C" fn dd_env_legal_actions(env: *const DdEnv, mask_out: *mut u8) -> DdStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        if mask_out.is_null() {
            return Err(null("mask_out"));
        }
        for (k, legal) in env.env.legal_actions().iter().enumerate() {
            *mask_out.add(k) = *legal as u8;
        }
        Ok(())
    })
}

/// Text rendering of the restaurant. Release the string with [`dd_string_free`].
///
/// # Safety
/// `env` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_env_render(env: *const DdEnv, out: *mut *mut c_char) -> DdStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(env.env.render_text()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The scripted expert's action for the current state.
///
/// # Safety
/// `env` must be a live handle; `action_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_expert_action(env: *const DdEnv, action_out: *mut u32) -> DdStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        let out = action_out.as_mut().ok_or_else(|| null("action_out"))?;
        *out = expert_action(env.env.config(), env.env.state()).index() as u32;
        Ok(())
    })
}

/// Load a policy: `"expert"`, `"random"`, or the path of a saved checkpoint. `seed`
/// drives stochastic policies.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_policy_load(spec: *const c_char, seed: u64, out: *mut *mut DdPolicy) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = str_arg(spec, "spec")?;
        if spec != "expert" && spec != "random" && !Path::new(spec).exists() {
            return Err(fail(Error::io(Path::new(spec), std::io::ErrorKind::NotFound.into())));
        }
        let policy = load_policy(spec).map_err(fail)?;
        *out = Box::into_raw(Box::new(DdPolicy { policy, rng: Rng::stream(seed, Stream::Policy) }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be NULL or a handle from [`dd_policy_load`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dd_policy_free(policy: *mut DdPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// The policy's action for the environment's current state.
///
/// # Safety
/// `policy` and `env` must be live handles; `action_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_policy_act(policy: *mut DdPolicy, env: *const DdEnv, action_out: *mut u32) -> DdStatus {
    guard(|| {
        let policy = policy.as_mut().ok_or_else(|| null("policy"))?;
        let env = env.as_ref().ok_or_else(|| null("env"))?;
        let out = action_out.as_mut().ok_or_else(|| null("action_out"))?;
        *out = policy.policy.act(&env.env, &mut policy.rng) as u32;
        Ok(())
    })
}
