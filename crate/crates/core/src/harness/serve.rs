//! Newline-delimited JSON request loop around one environment.
//!
//! | request                           | reply                                        |
//! |-----------------------------------|----------------------------------------------|
//! | `{"cmd":"reset","seed":n}`        | `{"state":[40 numbers]}`                     |
//! | `{"cmd":"step","action":k}`       | `{"state":[..],"reward":r,"done":b,"info":{..}}` |
//! | `{"cmd":"spec"}`                  | `{"n_actions":57,"state_dim":40}`            |
//! | `{"cmd":"close"}`                 | `{"closed":true}`, then the loop ends        |
//!
//! Any failure is answered with `{"error":"..."}` and the loop keeps going. `seed` is
//! optional on reset; without it the current seed is replayed.

use serde_json::{json, Value};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sim::{Env, EnvConfig, NUM_ACTIONS, STATE_DIM};

fn handle(env: &mut Env, line: &str) -> std::result::Result<(Value, bool), String> {
    let req: Value = serde_json::from_str(line).map_err(|e| format!("malformed request: {e}"))?;
    let cmd = req.get("cmd").and_then(Value::as_str).ok_or("request needs a string field \"cmd\"")?;
    match cmd {
        "reset" => {
            let state = match req.get("seed") {
                None | Some(Value::Null) => env.reset(),
                Some(v) => env.reset_with_seed(v.as_u64().ok_or("seed must be a non-negative integer")?),
            };
            Ok((json!({ "state": state.to_vec() }), false))
        }
        "step" => {
            let action = req.get("action").and_then(Value::as_i64).ok_or("step needs an integer \"action\"")?;
            if action < 0 {
                return Err(Error::ActionOutOfRange(action).to_string());
            }
            let result = env.step(action as usize).map_err(|e| e.to_string())?;
            Ok((serde_json::to_value(result).expect("step result serializes"), false))
        }
        "spec" => Ok((json!({ "n_actions": NUM_ACTIONS, "state_dim": STATE_DIM }), false)),
        "close" => Ok((json!({ "closed": true }), true)),
        other => Err(format!("unknown cmd {other:?}")),
    }
}

/// Serve requests from `input` until `close` or end of input.
pub fn serve_env<R: BufRead, W: Write>(config: &EnvConfig, input: R, mut output: W) -> Result<()> {
    let mut env = Env::new(config.clone(), 0)?;
    let io_err = |e| Error::io(std::path::Path::new("<stdout>"), e);
    for line in input.lines() {
        let line = line.map_err(|e| Error::io(std::path::Path::new("<stdin>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, stop) = match handle(&mut env, &line) {
            Ok(r) => r,
            Err(msg) => (json!({ "error": msg }), false),
        };
        writeln!(output, "{reply}").map_err(io_err)?;
        output.flush().map_err(io_err)?;
        if stop {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(requests: &str) -> Vec<Value> {
        let mut out = Vec::new();
        serve_env(&EnvConfig::default(), requests.as_bytes(), &mut out).unwrap();
        String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    }

    #[test]
    fn spec_reply() {
        assert_eq!(run("{\"cmd\":\"spec\"}\n"), vec![json!({"n_actions": 57, "state_dim": 40})]);
    }

    #[test]
    fn malformed_line_does_not_stop_the_loop() {
        let replies = run("{\n{\"cmd\":\"spec\"}\n");
        assert!(replies[0].get("error").is_some());
        assert_eq!(replies[1]["n_actions"], 57);
    }

    #[test]
    fn step_before_reset_and_bad_action_are_errors() {
        let replies = run("{\"cmd\":\"step\",\"action\":0}\n{\"cmd\":\"reset\",\"seed\":1}\n{\"cmd\":\"step\",\"action\":99}\n{\"cmd\":\"step\",\"action\":-1}\n");
        assert!(replies[0].get("error").is_some());
        assert_eq!(replies[1]["state"].as_array().unwrap().len(), 40);
        assert!(replies[2].get("error").is_some());
        assert!(replies[3].get("error").is_some());
    }

    #[test]
    fn close_ends_the_loop() {
        let replies = run("{\"cmd\":\"close\"}\n{\"cmd\":\"spec\"}\n");
        assert_eq!(replies, vec![json!({"closed": true})]);
    }
}
