//! Demonstration datasets: recording, JSON Lines persistence, and per-action relabeling.
//!
//! File layout: line 1 is a [`DatasetHeader`] object, every following line one
//! [`Transition`] with fields `episode_id`, `t`, `state` (40 numbers), `action`, `reward`,
//! `done`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dpgm::selector::{FeatureView, SubstateSelector, Tuple};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::{Rng, Stream};
use crate::sim::{Env, EnvConfig, NUM_ACTIONS, STATE_DIM};

pub const FORMAT: &str = "dinerdash-trajectories";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub episode_id: u64,
    pub t: u64,
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: EnvConfig,
    pub policy: String,
    pub seed_base: u64,
    pub n_episodes: usize,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n_episodes: usize,
    pub n_pairs: usize,
    pub mean_length: f64,
    /// Mean undiscounted episode return.
    pub mean_return: f64,
}

impl Dataset {
    pub fn summary(&self) -> DatasetSummary {
        let episodes = self.header.n_episodes.max(1) as f64;
        DatasetSummary {
            n_episodes: self.header.n_episodes,
            n_pairs: self.header.n_pairs,
            mean_length: self.header.n_pairs as f64 / episodes,
            mean_return: self.transitions.iter().map(|t| t.reward).sum::<f64>() / episodes,
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.header.config
    }

    /// Transitions grouped by episode, in file order.
    pub fn episodes(&self) -> Vec<&[Transition]> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, tr) in self.transitions.iter().enumerate() {
            if tr.done {
                out.push(&self.transitions[start..=i]);
                start = i + 1;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.format != FORMAT || h.version != VERSION {
            return Err(Error::Dataset(format!("unsupported format {:?} version {}", h.format, h.version)));
        }
        if h.config_hash != h.config.hash() {
            return Err(Error::Dataset("config_hash does not match the embedded config".into()));
        }
        if self.transitions.is_empty() {
            return Err(Error::Dataset("no episodes".into()));
        }
        let mut episodes = 0usize;
        let mut expect_t = 0u64;
        let mut episode_id = self.transitions[0].episode_id;
        for (i, tr) in self.transitions.iter().enumerate() {
            if tr.state.len() != STATE_DIM {
                return Err(Error::Dataset(format!("transition {i}: state has {} entries", tr.state.len())));
            }
            if tr.action >= NUM_ACTIONS {
                return Err(Error::Dataset(format!("transition {i}: action {} out of range", tr.action)));
            }
            if tr.t != expect_t || tr.episode_id != episode_id {
                return Err(Error::Dataset(format!(
                    "transition {i}: expected episode {episode_id} step {expect_t}, found episode {} step {}",
                    tr.episode_id, tr.t
                )));
            }
            if tr.done {
                episodes += 1;
                expect_t = 0;
                episode_id += 1;
            } else {
                expect_t += 1;
            }
        }
        if expect_t != 0 {
            return Err(Error::Dataset("last episode has no terminal transition".into()));
        }
        if episodes != h.n_episodes || self.transitions.len() != h.n_pairs {
            return Err(Error::Dataset(format!(
                "header claims {} episodes / {} pairs, body has {episodes} / {}",
                h.n_episodes,
                h.n_pairs,
                self.transitions.len()
            )));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let io = |e: std::io::Error| Error::Io { path: "<writer>".into(), source: e };
        serde_json::to_writer(&mut w, &self.header).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
        for tr in &self.transitions {
            serde_json::to_writer(&mut w, tr).map_err(|e| io(e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Dataset> {
        let malformed =
            |line: usize, reason: String| Error::MalformedLine { path: path.to_path_buf(), line, reason };
        let mut lines = r.lines().enumerate();
        let header: DatasetHeader = loop {
            match lines.next() {
                None => return Err(Error::Dataset("no episodes".into())),
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line).map_err(|e| malformed(i + 1, format!("bad header: {e}")))?;
                }
            }
        };
        let mut transitions = Vec::with_capacity(header.n_pairs.min(1 << 24));
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let tr: Transition = serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
            if tr.state.len() != STATE_DIM {
                return Err(malformed(i + 1, format!("state has {} entries, expected {STATE_DIM}", tr.state.len())));
            }
            if tr.action >= NUM_ACTIONS {
                return Err(malformed(i + 1, format!("action {} out of range", tr.action)));
            }
            transitions.push(tr);
        }
        let ds = Dataset { header, transitions };
        ds.validate()?;
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_from(BufReader::new(file), path)
    }

    /// Split by whole episodes: the first `n_train` episodes and the rest.
    pub fn split_episodes(&self, n_train: usize) -> (Dataset, Dataset) {
        let eps = self.episodes();
        let n_train = n_train.min(eps.len());
        let build = |eps: &[&[Transition]], first_id: u64| {
            let mut transitions = Vec::new();
            for (k, ep) in eps.iter().enumerate() {
                transitions.extend(ep.iter().map(|tr| Transition { episode_id: first_id + k as u64, ..tr.clone() }));
            }
            Dataset {
                header: DatasetHeader { n_episodes: eps.len(), n_pairs: transitions.len(), ..self.header.clone() },
                transitions,
            }
        };
        (build(&eps[..n_train], 0), build(&eps[n_train..], 0))
    }

    /// Keep only the first `n` episodes.
    pub fn take_episodes(&self, n: usize) -> Dataset {
        self.split_episodes(n).0
    }
}

/// Run `policy` for one episode per seed and collect the transitions.
pub fn record(config: &EnvConfig, policy: &dyn Policy, n_episodes: usize, seed_base: u64) -> Result<Dataset> {
    if n_episodes == 0 {
        return Err(Error::InvalidArgument("n_episodes must be >= 1".into()));
    }
    config.validate()?;
    let episodes: Vec<Vec<Transition>> = (0..n_episodes as u64)
        .into_par_iter()
        .map(|k| {
            let seed = seed_base + k;
            let mut env = Env::new(config.clone(), seed)?;
            let mut rng = Rng::stream(seed, Stream::Policy);
            let mut state = env.reset().to_vec();
            let mut out = Vec::new();
            loop {
                let action = policy.act(&env, &mut rng);
                let step = env.step(action)?;
                out.push(Transition { episode_id: k, t: out.len() as u64, state, action, reward: step.reward, done: step.done });
                if step.done {
                    return Ok(out);
                }
                state = step.state;
            }
        })
        .collect::<Result<_>>()?;
    let transitions: Vec<Transition> = episodes.into_iter().flatten().collect();
    Ok(Dataset {
        header: DatasetHeader {
            format: FORMAT.into(),
            version: VERSION,
            config_hash: config.hash(),
            config: config.clone(),
            policy: policy.name(),
            seed_base,
            n_episodes,
            n_pairs: transitions.len(),
        },
        transitions,
    })
}

/// Record and write to `path`.
pub fn record_episodes(
    config: &EnvConfig,
    policy: &dyn Policy,
    n_episodes: usize,
    seed_base: u64,
    path: &Path,
) -> Result<DatasetSummary> {
    let ds = record(config, policy, n_episodes, seed_base)?;
    ds.save(path)?;
    Ok(ds.summary())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relabeled {
    pub pairs: Vec<(Tuple, bool)>,
    pub positives: usize,
    pub negatives: usize,
}

/// Binary data for one action: each transition's sub-state, labeled 1 iff the demonstrator
/// chose `action`.
pub fn relabel_for_action(dataset: &Dataset, action: usize, selector: &SubstateSelector) -> Result<Relabeled> {
    let cfg = dataset.config();
    let pairs = dataset
        .transitions
        .iter()
        .map(|tr| {
            let view = FeatureView::new(&tr.state, cfg)?;
            Ok((selector.select(&view)?, tr.action == action))
        })
        .collect::<Result<Vec<_>>>()?;
    let positives = pairs.iter().filter(|(_, y)| *y).count();
    Ok(Relabeled { negatives: pairs.len() - positives, positives, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ExpertPolicy, RandomPolicy};

    #[test]
    fn single_expert_episode() {
        let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 1, 0).unwrap();
        assert_eq!(ds.header.n_episodes, 1);
        assert_eq!(ds.header.n_pairs, ds.transitions.len());
        assert!(ds.transitions.last().unwrap().done);
        assert_eq!(ds.transitions.iter().filter(|t| t.done).count(), 1);
        ds.validate().unwrap();
    }

    #[test]
    fn random_policy_runs_out_of_lives() {
        let cfg = EnvConfig::default();
        let ds = record(&cfg, &RandomPolicy, 1, 0).unwrap();
        assert!((ds.transitions.len() as u64) < cfg.max_steps);
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 2, 5).unwrap();
        let mut a = Vec::new();
        ds.write_to(&mut a).unwrap();
        let back = Dataset::read_from(a.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, ds);
        let mut b = Vec::new();
        back.write_to(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn short_state_reports_line_number() {
        let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 1, 0).unwrap();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        let lines: Vec<String> = text.lines().map(String::from).collect();
        let mut tr: Transition = serde_json::from_str(&lines[3]).unwrap();
        tr.state.pop();
        let mut patched = lines.clone();
        patched[3] = serde_json::to_string(&tr).unwrap();
        text = patched.join("\n");
        let err = Dataset::read_from(text.as_bytes(), Path::new("d.jsonl")).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("line 4"));
    }

    #[test]
    fn empty_input_has_no_episodes() {
        let err = Dataset::read_from(&b""[..], Path::new("e.jsonl")).unwrap_err();
        assert!(err.to_string().contains("no episodes"));
    }

    #[test]
    fn header_count_mismatch_detected() {
        let mut ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 1, 0).unwrap();
        ds.header.n_pairs += 1;
        assert!(ds.validate().is_err());
    }

    #[test]
    fn split_renumbers_episodes() {
        let ds = record(&EnvConfig::default(), &ExpertPolicy::default(), 3, 0).unwrap();
        let (a, b) = ds.split_episodes(2);
        a.validate().unwrap();
        b.validate().unwrap();
        assert_eq!(a.header.n_episodes, 2);
        assert_eq!(b.header.n_episodes, 1);
        assert_eq!(a.header.n_pairs + b.header.n_pairs, ds.header.n_pairs);
    }
}
