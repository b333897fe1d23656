use serde::{Deserialize, Serialize};
use std::path::Path;

use super::factor::FactorGraphModel;
use super::memo::MemoTable;
use super::selector::{FeatureView, Tuple};
use super::structure::{ModelKind, Structures};
use crate::error::{Error, Result};
use crate::nn::{softmax, DenseNet};
use crate::policy::{argmax, Policy};
use crate::rng::Rng;
use crate::sim::{Env, EnvConfig, NUM_ACTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionModel {
    Graph(FactorGraphModel),
    Memo(MemoTable),
}

impl ActionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ActionModel::Graph(_) => ModelKind::Graph,
            ActionModel::Memo(_) => ModelKind::Memo,
        }
    }

    /// Probability that the demonstrator picks this action in sub-state `tuple`.
    pub fn score(&self, tuple: &[u16]) -> Result<f64> {
        match self {
            ActionModel::Graph(m) => m.infer(tuple),
            ActionModel::Memo(t) => Ok(t.score(tuple)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    #[default]
    Argmax,
    /// Categorical sample from `softmax(logits)`.
    Sample,
}

/// Per-action scorers feeding a reweighting network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpgmPolicy {
    /// Environment config the selectors were built for.
    pub config: EnvConfig,
    pub structures: Structures,
    /// One model per action, in index order.
    pub models: Vec<ActionModel>,
    /// 57 scores in, 57 logits out.
    pub net: DenseNet,
    #[serde(default)]
    pub mode: ActMode,
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    kind: &'static str,
    #[serde(flatten)]
    policy: &'a DpgmPolicy,
}

impl DpgmPolicy {
    pub fn validate(&self) -> Result<()> {
        self.structures.validate()?;
        if self.models.len() != NUM_ACTIONS {
            return Err(Error::Shape(format!("{} action models, expected {NUM_ACTIONS}", self.models.len())));
        }
        for (k, (model, s)) in self.models.iter().zip(&self.structures.actions).enumerate() {
            if model.kind() != s.kind {
                return Err(Error::InvalidArgument(format!("action {k}: model kind does not match its structure")));
            }
            match model {
                ActionModel::Graph(m) => {
                    if m.action != k || m.cardinalities != s.selector.cardinalities() {
                        return Err(Error::Shape(format!("action {k}: graph model does not match its selector")));
                    }
                    m.validate()?;
                }
                ActionModel::Memo(t) => {
                    if t.action != k {
                        return Err(Error::Shape(format!("memo table for action {} stored at {k}", t.action)));
                    }
                    let cards = s.selector.cardinalities();
                    let fits = |key: &Tuple| key.len() == cards.len() && key.iter().zip(&cards).all(|(&x, &c)| (x as usize) < c);
                    if !t.counts.keys().all(fits) {
                        return Err(Error::Shape(format!("action {k}: memo key does not match its selector")));
                    }
                }
            }
        }
        if self.net.input_width() != NUM_ACTIONS || self.net.output_width() != NUM_ACTIONS {
            return Err(Error::Shape("reweighting network must map 57 scores to 57 logits".into()));
        }
        self.net.validate()
    }

    /// Discretized sub-state of every action for one state vector.
    pub fn substates(&self, state: &[f64]) -> Result<Vec<Tuple>> {
        let view = FeatureView::new(state, &self.config)?;
        self.structures.actions.iter().map(|a| a.selector.select(&view)).collect()
    }

    pub fn scores(&self, state: &[f64]) -> Result<Vec<f64>> {
        let tuples = self.substates(state)?;
        self.models.iter().zip(&tuples).map(|(m, t)| m.score(t)).collect()
    }

    /// Per-action scores and the reweighted logits. Deterministic (no dropout).
    pub fn forward(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let scores = self.scores(state)?;
        let logits = self.net.predict(&scores)?;
        Ok((scores, logits))
    }

    pub fn act_on(&self, state: &[f64], mode: ActMode, rng: &mut Rng) -> Result<usize> {
        let (_, logits) = self.forward(state)?;
        Ok(match mode {
            ActMode::Argmax => argmax(&logits),
            ActMode::Sample => rng.categorical(&softmax(&logits)),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CheckpointOut { kind: "dpgm", policy: self }).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<DpgmPolicy> {
        let parse = |reason: String| Error::Parse { what: "dpgm checkpoint".into(), reason };
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
        let obj = value.as_object_mut().ok_or_else(|| parse("not a JSON object".into()))?;
        match obj.remove("kind") {
            Some(serde_json::Value::String(k)) if k == "dpgm" => {}
            other => return Err(parse(format!("expected kind \"dpgm\", found {other:?}"))),
        }
        let policy: DpgmPolicy = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<DpgmPolicy> {
        DpgmPolicy::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn dpgm_forward(policy: &DpgmPolicy, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    policy.forward(state)
}

pub fn dpgm_act(policy: &DpgmPolicy, state: &[f64], mode: ActMode, rng: &mut Rng) -> Result<usize> {
    policy.act_on(state, mode, rng)
}

impl Policy for DpgmPolicy {
    fn name(&self) -> String {
        "dpgm".into()
    }

    fn act(&self, env: &Env, rng: &mut Rng) -> usize {
        // states produced by the simulator always decode
        self.act_on(&env.encode(), self.mode, rng).unwrap_or(0)
    }
}
