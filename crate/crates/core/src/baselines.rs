//! Comparison policies: behaviour cloning on the raw state vector, and the uniform random agent.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{softmax_cross_entropy, Algorithm, Batch, DenseNet, OptimizerState};
use crate::policy::{argmax, Policy};
use crate::rng::{Rng, Stream};
use crate::sim::state::dimension_max;
use crate::sim::{Env, NUM_ACTIONS, STATE_DIM};
use crate::trajectory::Dataset;

pub use crate::policy::{random_act, RandomPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcHyper {
    pub hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BcHyper {
    fn default() -> Self {
        BcHyper { hidden: 128, dropout: 0.5, epochs: 20, batch_size: 256, learning_rate: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcTrainReport {
    /// Mean training cross-entropy per epoch (dropout active).
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
}

/// A network from (scaled) state vector to action logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcPolicy {
    /// Each state entry is divided by this before entering the network.
    pub scale: Vec<f64>,
    pub net: DenseNet,
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    kind: &'static str,
    #[serde(flatten)]
    policy: &'a BcPolicy,
}

impl BcPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.scale.len() != STATE_DIM || self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Shape("input scale must have 40 positive entries".into()));
        }
        if self.net.input_width() != STATE_DIM || self.net.output_width() != NUM_ACTIONS {
            return Err(Error::Shape("behaviour-cloning network must map 40 inputs to 57 logits".into()));
        }
        self.net.validate()
    }

    fn scaled(&self, state: &[f64]) -> Vec<f64> {
        state.iter().zip(&self.scale).map(|(x, s)| x / s).collect()
    }

    pub fn logits(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != STATE_DIM {
            return Err(Error::Shape(format!("state has {} entries, expected {STATE_DIM}", state.len())));
        }
        self.net.predict(&self.scaled(state))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CheckpointOut { kind: "bc", policy: self }).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<BcPolicy> {
        let parse = |reason: String| Error::Parse { what: "bc checkpoint".into(), reason };
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
        let obj = value.as_object_mut().ok_or_else(|| parse("not a JSON object".into()))?;
        match obj.remove("kind") {
            Some(serde_json::Value::String(k)) if k == "bc" => {}
            other => return Err(parse(format!("expected kind \"bc\", found {other:?}"))),
        }
        let policy: BcPolicy = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<BcPolicy> {
        BcPolicy::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn bc_act(policy: &BcPolicy, state: &[f64]) -> Result<usize> {
    Ok(argmax(&policy.logits(state)?))
}

impl Policy for BcPolicy {
    fn name(&self) -> String {
        "bc".into()
    }

    fn act(&self, env: &Env, _rng: &mut Rng) -> usize {
        bc_act(self, &env.encode()).unwrap_or(0)
    }
}

pub fn bc_train(dataset: &Dataset, hyper: &BcHyper) -> Result<(BcPolicy, BcTrainReport)> {
    if dataset.transitions.is_empty() {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }
    if hyper.hidden == 0 || hyper.batch_size == 0 || !(hyper.learning_rate.is_finite() && hyper.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("hidden width, batch size and learning rate must be positive".into()));
    }
    let scale: Vec<f64> = dimension_max(dataset.config()).iter().map(|m| m.max(1.0)).collect();
    let net = DenseNet::new(&[STATE_DIM, hyper.hidden, NUM_ACTIONS], &[hyper.dropout], hyper.seed)?;
    let mut policy = BcPolicy { scale, net };
    let inputs: Vec<Vec<f64>> = dataset.transitions.iter().map(|t| policy.scaled(&t.state)).collect();
    let labels: Vec<usize> = dataset.transitions.iter().map(|t| t.action).collect();
    let n = inputs.len();

    let mut opt = OptimizerState::new(Algorithm::adam(), hyper.learning_rate);
    let mut shuffle = Rng::stream(hyper.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(hyper.epochs);
    for _ in 0..hyper.epochs {
        shuffle.shuffle(&mut order);
        let mut sum = 0.0;
        for rows in order.chunks(hyper.batch_size) {
            let x = Batch::from_rows(&rows.iter().map(|&i| &inputs[i]).collect::<Vec<_>>())?;
            let (logits, cache) = policy.net.forward_batch(&x, true)?;
            let mut grad = Batch::zeros(rows.len(), NUM_ACTIONS);
            let inv = 1.0 / rows.len() as f64;
            for (r, &i) in rows.iter().enumerate() {
                let (l, g) = softmax_cross_entropy(logits.row(r), labels[i])?;
                sum += l;
                for (d, s) in grad.row_mut(r).iter_mut().zip(g) {
                    *d = s * inv;
                }
            }
            if !sum.is_finite() {
                return Err(Error::NonFinite("behaviour-cloning loss".into()));
            }
            let (g, _) = policy.net.backward(&cache, &grad)?;
            opt.step(&mut policy.net.params_mut(), &g.slices())?;
        }
        losses.push(sum / n as f64);
    }

    let mut correct = 0;
    for (chunk, ys) in inputs.chunks(4096).zip(labels.chunks(4096)) {
        let logits = policy.net.predict_batch(&Batch::from_rows(chunk)?)?;
        correct += ys.iter().enumerate().filter(|(r, y)| argmax(logits.row(*r)) == **y).count();
    }
    let report = BcTrainReport { losses, train_accuracy: correct as f64 / n as f64 };
    Ok((policy, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ExpertPolicy;
    use crate::sim::EnvConfig;
    use crate::trajectory::record;

    fn small() -> Dataset {
        record(&EnvConfig::default(), &ExpertPolicy::default(), 2, 0).unwrap()
    }

    #[test]
    fn checkpoint_round_trip_is_byte_stable() {
        let (p, _) = bc_train(&small(), &BcHyper { epochs: 1, ..Default::default() }).unwrap();
        let text = p.to_json();
        let back = BcPolicy::from_json(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), text);
        assert!(text.starts_with(r#"{"kind":"bc""#));
    }

    #[test]
    fn wrong_kind_rejected() {
        let (p, _) = bc_train(&small(), &BcHyper { epochs: 1, ..Default::default() }).unwrap();
        let text = p.to_json().replacen(r#""kind":"bc""#, r#""kind":"dpgm""#, 1);
        assert!(BcPolicy::from_json(&text).is_err());
    }
}
