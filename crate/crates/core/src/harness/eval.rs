use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::{Rng, Stream};
use crate::sim::{Env, EnvConfig};

/// First seed of the default evaluation block; training demonstrations use seeds below it.
pub const EVAL_SEED_BASE: u64 = 10_000;
pub const EVAL_EPISODES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub n_episodes: usize,
    pub seeds: Vec<u64>,
    pub returns: Vec<f64>,
    pub lengths: Vec<u64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub config_hash: String,
}

impl EvalReport {
    pub fn from_episodes(policy: String, config_hash: String, seeds: Vec<u64>, returns: Vec<f64>, lengths: Vec<u64>) -> Result<Self> {
        let n = returns.len();
        if n == 0 || seeds.len() != n || lengths.len() != n {
            return Err(Error::InvalidArgument("a report needs matching, nonempty episode lists".into()));
        }
        let (mean, std) = mean_std(&returns);
        let min = returns.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = returns.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(EvalReport { policy, n_episodes: n, seeds, returns, lengths, mean, std, min, max, config_hash })
    }

    pub fn mean_length(&self) -> f64 {
        self.lengths.iter().sum::<u64>() as f64 / self.n_episodes as f64
    }

    /// Checks that the summary statistics agree with the per-episode lists.
    pub fn validate(&self) -> Result<()> {
        let again = EvalReport::from_episodes(
            self.policy.clone(),
            self.config_hash.clone(),
            self.seeds.clone(),
            self.returns.clone(),
            self.lengths.clone(),
        )
        .map_err(|e| Error::Dataset(format!("report {}: {e}", self.policy)))?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        if self.n_episodes != again.n_episodes
            || !close(self.mean, again.mean)
            || !close(self.std, again.std)
            || self.min != again.min
            || self.max != again.max
        {
            return Err(Error::Dataset(format!("report {}: statistics do not match per-episode values", self.policy)));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EvalReport> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: EvalReport = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { what: format!("report {}", path.display()), reason: e.to_string() })?;
        r.validate()?;
        Ok(r)
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Undiscounted return and length of one episode.
pub fn run_episode(config: &EnvConfig, policy: &dyn Policy, seed: u64) -> Result<(f64, u64)> {
    let mut env = Env::new(config.clone(), seed)?;
    let mut rng = Rng::stream(seed, Stream::Policy);
    env.reset();
    let mut total = 0.0;
    let mut steps = 0;
    loop {
        let step = env.step(policy.act(&env, &mut rng))?;
        total += step.reward;
        steps += 1;
        if step.done {
            return Ok((total, steps));
        }
    }
}

/// Runs seeds `seed_base .. seed_base + n_episodes` (in parallel, merged in seed order).
pub fn evaluate(config: &EnvConfig, policy: &dyn Policy, n_episodes: usize, seed_base: u64) -> Result<EvalReport> {
    if n_episodes == 0 {
        return Err(Error::InvalidArgument("n_episodes must be >= 1".into()));
    }
    config.validate()?;
    let seeds: Vec<u64> = (0..n_episodes as u64).map(|k| seed_base + k).collect();
    let results: Vec<(f64, u64)> = seeds.par_iter().map(|&s| run_episode(config, policy, s)).collect::<Result<_>>()?;
    let (returns, lengths) = results.into_iter().unzip();
    EvalReport::from_episodes(policy.name(), config.hash(), seeds, returns, lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ExpertPolicy, RandomPolicy};

    #[test]
    fn single_episode_has_zero_spread() {
        let r = evaluate(&EnvConfig::default(), &ExpertPolicy::default(), 1, 5).unwrap();
        assert_eq!(r.mean, r.returns[0]);
        assert_eq!(r.std, 0.0);
        assert_eq!(r.seeds, vec![5]);
        r.validate().unwrap();
    }

    #[test]
    fn zero_episodes_rejected() {
        assert!(evaluate(&EnvConfig::default(), &RandomPolicy, 0, 0).is_err());
    }

    #[test]
    fn reruns_are_identical() {
        let c = EnvConfig::default();
        let a = evaluate(&c, &RandomPolicy, 4, 3).unwrap();
        let b = evaluate(&c, &RandomPolicy, 4, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_statistics_detected() {
        let mut r = evaluate(&EnvConfig::default(), &RandomPolicy, 3, 0).unwrap();
        r.mean += 1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
