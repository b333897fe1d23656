//! Fitting one action's log-potentials to binary demonstration labels by minimizing
//! `sum_t (p(y=1 | x_t) - y_t)^2`.
//!
//! Identical sub-states are merged into weighted counts first, which leaves the loss unchanged
//! and makes an epoch cost proportional to the number of distinct tuples. Optimization is
//! full-batch gradient descent with a diagonal preconditioner (each parameter's step is
//! scaled by the data mass touching it) and backtracking, so the training loss never
//! increases from one epoch to the next.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::factor::{sigmoid, FactorGraphModel};
use super::selector::Tuple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTrainHyper {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once an epoch improves the loss by less than this.
    pub tolerance: f64,
    /// Weight positives by `negatives / positives`, capped here. `None` disables reweighting.
    pub positive_weight_cap: Option<f64>,
}

impl Default for GraphTrainHyper {
    fn default() -> Self {
        GraphTrainHyper { learning_rate: 1.0, max_epochs: 400, tolerance: 1e-10, positive_weight_cap: Some(100.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTrainReport {
    pub action: usize,
    /// Weighted mean squared loss, one entry per accepted epoch (entry 0 is the initial loss).
    pub losses: Vec<f64>,
    pub positive_weight: f64,
    pub positives: usize,
    pub negatives: usize,
}

struct Cell {
    /// Flat cell index per factor.
    cells: Vec<usize>,
    pos: f64,
    neg: f64,
}

struct Problem {
    rows: Vec<Cell>,
    total_weight: f64,
}

impl Problem {
    fn log_odds(&self, model: &FactorGraphModel, row: &Cell) -> f64 {
        model
            .factors
            .iter()
            .zip(&row.cells)
            .map(|(f, &c)| f.theta[2 * c + 1] - f.theta[2 * c])
            .sum()
    }

    fn loss(&self, model: &FactorGraphModel) -> f64 {
        let mut l = 0.0;
        for row in &self.rows {
            let p = sigmoid(self.log_odds(model, row));
            l += row.pos * (p - 1.0) * (p - 1.0) + row.neg * p * p;
        }
        l / self.total_weight
    }

    /// Gradient with respect to every theta, plus the data mass touching each entry.
    fn gradient(&self, model: &FactorGraphModel) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut grads = model.zero_grads();
        let mut mass = model.zero_grads();
        for row in &self.rows {
            let p = sigmoid(self.log_odds(model, row));
            let dz = (row.pos * 2.0 * (p - 1.0) + row.neg * 2.0 * p) * p * (1.0 - p) / self.total_weight;
            let w = (row.pos + row.neg) / self.total_weight;
            for (k, &c) in row.cells.iter().enumerate() {
                grads[k][2 * c + 1] += dz;
                grads[k][2 * c] -= dz;
                mass[k][2 * c + 1] += w;
                mass[k][2 * c] += w;
            }
        }
        (grads, mass)
    }
}

/// Positive-class weight for `positives` vs `negatives` under `cap`.
pub fn positive_weight(positives: usize, negatives: usize, cap: Option<f64>) -> f64 {
    match cap {
        Some(cap) if positives > 0 => (negatives as f64 / positives as f64).clamp(1.0, cap.max(1.0)),
        _ => 1.0,
    }
}

/// Weighted mean squared loss of `model` on `data` and its gradient with respect to every
/// log-potential (one buffer per factor). Positives count `positive_weight` times.
pub fn squared_loss_and_grad(
    model: &FactorGraphModel,
    data: &[(Tuple, bool)],
    positive_weight: f64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut rows = Vec::with_capacity(data.len());
    for (tuple, y) in data {
        model.check_tuple(tuple)?;
        rows.push(Cell {
            cells: model.factors.iter().map(|f| f.cell(tuple)).collect(),
            pos: if *y { positive_weight } else { 0.0 },
            neg: if *y { 0.0 } else { 1.0 },
        });
    }
    let total_weight: f64 = rows.iter().map(|r| r.pos + r.neg).sum();
    if rows.is_empty() || total_weight.is_nan() || total_weight <= 0.0 {
        return Err(Error::InvalidArgument("no training data".into()));
    }
    let problem = Problem { rows, total_weight };
    Ok((problem.loss(model), problem.gradient(model).0))
}

pub fn graph_train(model: &mut FactorGraphModel, data: &[(Tuple, bool)], hyper: &GraphTrainHyper) -> Result<GraphTrainReport> {
    let mut agg: BTreeMap<&[u16], (u64, u64)> = BTreeMap::new();
    for (tuple, y) in data {
        let e = agg.entry(tuple.as_slice()).or_insert((0, 0));
        if *y {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let counts: Vec<(&[u16], u64, u64)> = agg.into_iter().map(|(t, (p, n))| (t, p, n)).collect();
    graph_train_counts(model, &counts, hyper)
}

/// [`graph_train`] on pre-aggregated `(tuple, positives, negatives)` rows.
pub fn graph_train_counts(
    model: &mut FactorGraphModel,
    counts: &[(&[u16], u64, u64)],
    hyper: &GraphTrainHyper,
) -> Result<GraphTrainReport> {
    let positives = counts.iter().map(|c| c.1 as usize).sum::<usize>();
    let negatives = counts.iter().map(|c| c.2 as usize).sum::<usize>();
    if positives + negatives == 0 {
        return Err(Error::InvalidArgument(format!("action {}: no training data", model.action)));
    }
    for (tuple, _, _) in counts {
        model.check_tuple(tuple)?;
    }
    let wp = positive_weight(positives, negatives, hyper.positive_weight_cap);
    let rows: Vec<Cell> = counts
        .iter()
        .filter(|(_, p, n)| p + n > 0)
        .map(|(tuple, p, n)| Cell {
            cells: model.factors.iter().map(|f| f.cell(tuple)).collect(),
            pos: wp * *p as f64,
            neg: *n as f64,
        })
        .collect();
    let total_weight = rows.iter().map(|r| r.pos + r.neg).sum();
    let problem = Problem { rows, total_weight };

    let mut loss = problem.loss(model);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("initial loss of action {}", model.action)));
    }
    let mut losses = vec![loss];
    let mut lr = hyper.learning_rate;
    for _ in 0..hyper.max_epochs {
        let (grads, mass) = problem.gradient(model);
        let direction: Vec<Vec<f64>> = grads
            .iter()
            .zip(&mass)
            .map(|(g, m)| g.iter().zip(m).map(|(g, m)| if *m > 0.0 { g / m } else { 0.0 }).collect())
            .collect();
        let slope: f64 = grads.iter().zip(&direction).flat_map(|(g, d)| g.iter().zip(d).map(|(a, b)| a * b)).sum();
        if slope <= 0.0 {
            break;
        }
        let saved: Vec<Vec<f64>> = model.factors.iter().map(|f| f.theta.clone()).collect();
        let mut accepted = None;
        while lr > 1e-12 {
            for ((f, d), s) in model.factors.iter_mut().zip(&direction).zip(&saved) {
                for ((t, di), si) in f.theta.iter_mut().zip(d).zip(s) {
                    *t = si - lr * di;
                }
            }
            let candidate = problem.loss(model);
            if candidate.is_finite() && candidate <= loss - 1e-4 * lr * slope {
                accepted = Some(candidate);
                break;
            }
            lr *= 0.5;
        }
        let Some(new_loss) = accepted else {
            for (f, s) in model.factors.iter_mut().zip(saved) {
                f.theta = s;
            }
            break;
        };
        let improvement = loss - new_loss;
        loss = new_loss;
        losses.push(loss);
        lr = (lr * 1.5).min(hyper.learning_rate * 64.0);
        if improvement < hyper.tolerance {
            break;
        }
    }
    model.validate()?;
    Ok(GraphTrainReport { action: model.action, losses, positive_weight: wp, positives, negatives })
}
