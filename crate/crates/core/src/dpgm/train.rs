//! Three-phase training: per-action scorers, then the reweighting network on frozen
//! scores, then (optionally) graphs and network jointly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::factor::{sigmoid, FactorGraphModel};
use super::graph_train::{graph_train_counts, GraphTrainHyper, GraphTrainReport};
use super::memo::MemoTable;
use super::policy::{ActMode, ActionModel, DpgmPolicy};
use super::selector::{FeatureView, Tuple};
use super::structure::{ModelKind, Structures};
use crate::error::{Error, Result};
use crate::nn::{softmax_cross_entropy, Algorithm, Batch, DenseNet, OptimizerState};
use crate::policy::argmax;
use crate::rng::{Rng, Stream};
use crate::sim::NUM_ACTIONS;
use crate::trajectory::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpgmHyper {
    pub graph: GraphTrainHyper,
    /// Hidden width of the reweighting network.
    pub hidden: usize,
    pub reweight_epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Run the joint fine-tuning phase.
    pub finetune: bool,
    pub seed: u64,
}

impl Default for DpgmHyper {
    fn default() -> Self {
        DpgmHyper {
            graph: GraphTrainHyper::default(),
            hidden: 64,
            reweight_epochs: 5,
            finetune_epochs: 2,
            batch_size: 256,
            learning_rate: 1e-3,
            finetune: true,
            seed: 0,
        }
    }
}

impl DpgmHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.hidden == 0 || self.batch_size == 0 {
            return bad("hidden width and batch size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0 && self.graph.learning_rate.is_finite() && self.graph.learning_rate > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpgmTrainReport {
    pub graph: Vec<GraphTrainReport>,
    /// Actions the demonstrator never took; their models were trained on negatives only.
    pub zero_positive_actions: Vec<usize>,
    /// Mean cross-entropy per epoch of the reweighting phase.
    pub reweight_losses: Vec<f64>,
    /// Mean cross-entropy per epoch of the joint phase (empty when disabled).
    pub finetune_losses: Vec<f64>,
    pub train_accuracy: f64,
}

/// Every training state mapped to an interned sub-state id per action.
struct Featurized {
    n: usize,
    /// `n x 57`, row-major.
    ids: Vec<u32>,
    uniques: Vec<Vec<Tuple>>,
    labels: Vec<usize>,
}

const BLOCK: usize = 8192;

fn featurize(dataset: &Dataset, structures: &Structures) -> Result<Featurized> {
    let cfg = dataset.config();
    let n = dataset.transitions.len();
    let mut ids = Vec::with_capacity(n * NUM_ACTIONS);
    let mut interners: Vec<HashMap<Tuple, u32>> = vec![HashMap::new(); NUM_ACTIONS];
    let mut uniques: Vec<Vec<Tuple>> = vec![Vec::new(); NUM_ACTIONS];
    for block in dataset.transitions.chunks(BLOCK) {
        let tuples: Vec<Vec<Tuple>> = block
            .par_iter()
            .map(|tr| {
                let view = FeatureView::new(&tr.state, cfg)?;
                structures.actions.iter().map(|a| a.selector.select(&view)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for row in tuples {
            for (k, t) in row.into_iter().enumerate() {
                let next = uniques[k].len() as u32;
                let id = *interners[k].entry(t).or_insert_with_key(|t| {
                    uniques[k].push(t.clone());
                    next
                });
                ids.push(id);
            }
        }
    }
    let labels = dataset.transitions.iter().map(|t| t.action).collect();
    Ok(Featurized { n, ids, uniques, labels })
}

impl Featurized {
    fn id(&self, i: usize, k: usize) -> usize {
        self.ids[i * NUM_ACTIONS + k] as usize
    }

    /// `(positives, total)` per unique sub-state per action.
    fn counts(&self) -> Vec<Vec<(u64, u64)>> {
        let mut c: Vec<Vec<(u64, u64)>> = self.uniques.iter().map(|u| vec![(0, 0); u.len()]).collect();
        for i in 0..self.n {
            for (k, ck) in c.iter_mut().enumerate() {
                let e = &mut ck[self.id(i, k)];
                e.0 += (self.labels[i] == k) as u64;
                e.1 += 1;
            }
        }
        c
    }
}

fn phase_one(
    feats: &Featurized,
    structures: &Structures,
    hyper: &GraphTrainHyper,
) -> Result<(Vec<ActionModel>, Vec<GraphTrainReport>)> {
    let counts = feats.counts();
    let trained: Vec<(ActionModel, Option<GraphTrainReport>)> = (0..NUM_ACTIONS)
        .into_par_iter()
        .map(|k| {
            let s = &structures.actions[k];
            match s.kind {
                ModelKind::Graph => {
                    let mut model = FactorGraphModel::new(k, s.selector.cardinalities(), &s.scopes)?;
                    let rows: Vec<(&[u16], u64, u64)> = feats.uniques[k]
                        .iter()
                        .zip(&counts[k])
                        .map(|(t, &(p, total))| (t.as_slice(), p, total - p))
                        .collect();
                    let report = graph_train_counts(&mut model, &rows, hyper)?;
                    Ok((ActionModel::Graph(model), Some(report)))
                }
                ModelKind::Memo => {
                    let mut table = MemoTable::new(k);
                    for (t, &c) in feats.uniques[k].iter().zip(&counts[k]) {
                        table.counts.insert(t.clone(), c);
                    }
                    Ok((ActionModel::Memo(table), None))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut models = Vec::with_capacity(NUM_ACTIONS);
    let mut reports = Vec::new();
    for (m, r) in trained {
        models.push(m);
        reports.extend(r);
    }
    Ok((models, reports))
}

/// Precomputed factor cells of every unique sub-state of every graph action.
fn cell_cache(models: &[ActionModel], feats: &Featurized) -> Vec<Vec<Vec<usize>>> {
    models
        .iter()
        .zip(&feats.uniques)
        .map(|(m, uniq)| match m {
            ActionModel::Graph(g) => uniq.iter().map(|t| g.factors.iter().map(|f| f.cell(t)).collect()).collect(),
            ActionModel::Memo(_) => Vec::new(),
        })
        .collect()
}

fn score_of(model: &ActionModel, cells: &[Vec<usize>], tuple: &[u16], u: usize) -> f64 {
    match model {
        ActionModel::Graph(g) => {
            let z: f64 = g.factors.iter().zip(&cells[u]).map(|(f, &c)| f.theta[2 * c + 1] - f.theta[2 * c]).sum();
            sigmoid(z)
        }
        ActionModel::Memo(t) => t.score(tuple),
    }
}

/// Score of every unique sub-state under the current models.
fn score_table(models: &[ActionModel], feats: &Featurized, cells: &[Vec<Vec<usize>>]) -> Vec<Vec<f64>> {
    (0..NUM_ACTIONS)
        .into_par_iter()
        .map(|k| {
            feats.uniques[k].iter().enumerate().map(|(u, t)| score_of(&models[k], &cells[k], t, u)).collect()
        })
        .collect()
}

fn gather_scores(feats: &Featurized, table: &[Vec<f64>], rows: &[usize]) -> Batch {
    let mut b = Batch::zeros(rows.len(), NUM_ACTIONS);
    for (r, &i) in rows.iter().enumerate() {
        for k in 0..NUM_ACTIONS {
            b.data[r * NUM_ACTIONS + k] = table[k][feats.id(i, k)];
        }
    }
    b
}

/// Mean cross-entropy of `logits` against `labels`, and its gradient.
fn batch_loss(logits: &Batch, labels: &[usize]) -> Result<(f64, Batch)> {
    let mut grad = Batch::zeros(logits.rows, logits.cols);
    let mut total = 0.0;
    let scale = 1.0 / logits.rows as f64;
    for (r, &y) in labels.iter().enumerate() {
        let (l, g) = softmax_cross_entropy(logits.row(r), y)?;
        total += l;
        for (dst, src) in grad.row_mut(r).iter_mut().zip(g) {
            *dst = src * scale;
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss".into()));
    }
    Ok((total * scale, grad))
}

fn train_reweighting(
    net: &mut DenseNet,
    feats: &Featurized,
    table: &[Vec<f64>],
    hyper: &DpgmHyper,
    shuffle: &mut Rng,
) -> Result<Vec<f64>> {
    let mut opt = OptimizerState::new(Algorithm::adam(), hyper.learning_rate);
    let mut order: Vec<usize> = (0..feats.n).collect();
    let mut losses = Vec::with_capacity(hyper.reweight_epochs);
    for _ in 0..hyper.reweight_epochs {
        shuffle.shuffle(&mut order);
        let mut sum = 0.0;
        for rows in order.chunks(hyper.batch_size) {
            let x = gather_scores(feats, table, rows);
            let labels: Vec<usize> = rows.iter().map(|&i| feats.labels[i]).collect();
            let (logits, cache) = net.forward_batch(&x, true)?;
            let (loss, grad) = batch_loss(&logits, &labels)?;
            sum += loss * rows.len() as f64;
            let (g, _) = net.backward(&cache, &grad)?;
            opt.step(&mut net.params_mut(), &g.slices())?;
        }
        losses.push(sum / feats.n as f64);
    }
    Ok(losses)
}

fn finetune(
    net: &mut DenseNet,
    models: &mut [ActionModel],
    feats: &Featurized,
    cells: &[Vec<Vec<usize>>],
    memo_scores: &[Vec<f64>],
    hyper: &DpgmHyper,
    shuffle: &mut Rng,
) -> Result<Vec<f64>> {
    let mut opt = OptimizerState::new(Algorithm::adam(), hyper.learning_rate);
    let mut order: Vec<usize> = (0..feats.n).collect();
    let mut theta_grads: Vec<Vec<f64>> = models
        .iter()
        .flat_map(|m| match m {
            ActionModel::Graph(g) => g.zero_grads(),
            ActionModel::Memo(_) => Vec::new(),
        })
        .collect();
    let mut losses = Vec::with_capacity(hyper.finetune_epochs);
    for _ in 0..hyper.finetune_epochs {
        shuffle.shuffle(&mut order);
        let mut sum = 0.0;
        for rows in order.chunks(hyper.batch_size) {
            let mut x = Batch::zeros(rows.len(), NUM_ACTIONS);
            for (r, &i) in rows.iter().enumerate() {
                for (k, m) in models.iter().enumerate() {
                    let u = feats.id(i, k);
                    x.data[r * NUM_ACTIONS + k] = match m {
                        ActionModel::Graph(_) => score_of(m, &cells[k], &[], u),
                        ActionModel::Memo(_) => memo_scores[k][u],
                    };
                }
            }
            let labels: Vec<usize> = rows.iter().map(|&i| feats.labels[i]).collect();
            let (logits, cache) = net.forward_batch(&x, true)?;
            let (loss, grad) = batch_loss(&logits, &labels)?;
            sum += loss * rows.len() as f64;
            let (net_grads, input_grad) = net.backward(&cache, &grad)?;

            theta_grads.iter_mut().for_each(|g| g.fill(0.0));
            let mut slot = 0;
            for (k, m) in models.iter().enumerate() {
                let ActionModel::Graph(g) = m else { continue };
                for (r, &i) in rows.iter().enumerate() {
                    let p = x.data[r * NUM_ACTIONS + k];
                    let dz = input_grad.data[r * NUM_ACTIONS + k] * p * (1.0 - p);
                    if dz == 0.0 {
                        continue;
                    }
                    for (j, &c) in cells[k][feats.id(i, k)].iter().enumerate() {
                        theta_grads[slot + j][2 * c + 1] += dz;
                        theta_grads[slot + j][2 * c] -= dz;
                    }
                }
                slot += g.factors.len();
            }

            let mut params = net.params_mut();
            for (k, m) in models.iter_mut().enumerate() {
                if let ActionModel::Graph(g) = m {
                    for (j, f) in g.factors.iter_mut().enumerate() {
                        params.push((format!("action{k}.factor{j}"), f.theta.as_mut_slice()));
                    }
                }
            }
            let mut grads = net_grads.slices();
            grads.extend(theta_grads.iter().map(|g| g.as_slice()));
            opt.step(&mut params, &grads)?;
        }
        losses.push(sum / feats.n as f64);
    }
    Ok(losses)
}

pub fn dpgm_train(dataset: &Dataset, structures: &Structures, hyper: &DpgmHyper) -> Result<(DpgmPolicy, DpgmTrainReport)> {
    hyper.validate()?;
    structures.validate()?;
    if dataset.transitions.is_empty() {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }
    let feats = featurize(dataset, structures)?;

    let (mut models, graph_reports) = phase_one(&feats, structures, &hyper.graph)?;
    let mut zero_positive_actions: Vec<usize> = (0..NUM_ACTIONS).collect();
    zero_positive_actions.retain(|k| !feats.labels.contains(k));

    let cells = cell_cache(&models, &feats);
    let table = score_table(&models, &feats, &cells);
    let mut net = DenseNet::new(&[NUM_ACTIONS, hyper.hidden, NUM_ACTIONS], &[0.0], hyper.seed)?;
    let mut shuffle = Rng::stream(hyper.seed, Stream::Shuffle);
    let reweight_losses = train_reweighting(&mut net, &feats, &table, hyper, &mut shuffle)?;

    let finetune_losses = if hyper.finetune && hyper.finetune_epochs > 0 {
        finetune(&mut net, &mut models, &feats, &cells, &table, hyper, &mut shuffle)?
    } else {
        Vec::new()
    };

    let table = score_table(&models, &feats, &cells);
    let all: Vec<usize> = (0..feats.n).collect();
    let mut correct = 0usize;
    for rows in all.chunks(4096) {
        let logits = net.predict_batch(&gather_scores(&feats, &table, rows))?;
        correct += rows.iter().enumerate().filter(|(r, &i)| argmax(logits.row(*r)) == feats.labels[i]).count();
    }

    let policy = DpgmPolicy {
        config: dataset.config().clone(),
        structures: structures.clone(),
        models,
        net,
        mode: ActMode::Argmax,
    };
    policy.validate()?;
    let report = DpgmTrainReport {
        graph: graph_reports,
        zero_positive_actions,
        reweight_losses,
        finetune_losses,
        train_accuracy: correct as f64 / feats.n as f64,
    };
    Ok((policy, report))
}

/// Fraction of pairs in `dataset` where the policy's argmax matches the recorded action.
pub fn accuracy<F>(dataset: &Dataset, predict: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<usize> + Sync,
{
    if dataset.transitions.is_empty() {
        return Err(Error::Dataset("accuracy of an empty dataset".into()));
    }
    let hits = dataset
        .transitions
        .par_iter()
        .map(|t| predict(&t.state).map(|a| (a == t.action) as usize))
        .sum::<Result<usize>>()?;
    Ok(hits as f64 / dataset.transitions.len() as f64)
}
