//! Evaluation, comparison, policy loading and the environment server.

pub mod compare;
pub mod eval;
pub mod serve;

pub use compare::{compare, Comparison, CSV_HEADER};
pub use eval::{evaluate, mean_std, run_episode, EvalReport, EVAL_EPISODES, EVAL_SEED_BASE};
pub use serve::serve_env;

use std::path::Path;

use crate::baselines::BcPolicy;
use crate::dpgm::{ActMode, DpgmPolicy};
use crate::error::{Error, Result};
use crate::policy::{ExpertPolicy, Policy, RandomPolicy};

/// `"expert"`, `"random"`, or the path of a saved DPGM or BC checkpoint.
pub fn load_policy(spec: &str) -> Result<Box<dyn Policy>> {
    load_policy_with_mode(spec, ActMode::Argmax)
}

/// As [`load_policy`]; DPGM checkpoints act in `mode`.
pub fn load_policy_with_mode(spec: &str, mode: ActMode) -> Result<Box<dyn Policy>> {
    match spec {
        "expert" => Ok(Box::new(ExpertPolicy::default())),
        "random" => Ok(Box::new(RandomPolicy)),
        path => {
            let path = Path::new(path);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let kind = serde_json::from_str::<serde_json::Value>(&text)
                .ok()
                .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned));
            match kind.as_deref() {
                Some("dpgm") => {
                    let mut p = DpgmPolicy::from_json(&text)?;
                    p.mode = mode;
                    Ok(Box::new(p))
                }
                Some("bc") => Ok(Box::new(BcPolicy::from_json(&text)?)),
                _ => Err(Error::Parse {
                    what: format!("policy checkpoint {}", path.display()),
                    reason: "expected a JSON object with \"kind\" of \"dpgm\" or \"bc\"".into(),
                }),
            }
        }
    }
}
