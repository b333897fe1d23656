//! Per-action factor graphs over a binary selection variable `y`.
//!
//! Potentials are stored as log-potentials `theta` so every `phi = exp(theta)` is positive.
//! Every `x` is observed at inference time, so `p(y = 1 | x)` is a ratio of two factor
//! products and the partition function cancels:
//!
//! ```text
//! p(y=1 | x) = prod_i phi_i(x_i, 1) / (prod_i phi_i(x_i, 0) + prod_i phi_i(x_i, 1))
//!            = sigmoid(sum_i theta_i(x_i, 1) - theta_i(x_i, 0))
//! ```

use serde::{Deserialize, Serialize};

use super::selector::Tuple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    /// Positions in the selector's variable list.
    pub scope: Vec<usize>,
    /// Row-major strides over the scope's cardinalities.
    strides: Vec<usize>,
    /// `theta[2 * cell + y]`.
    pub theta: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, cardinalities: &[usize]) -> Result<Factor> {
        if scope.is_empty() {
            return Err(Error::InvalidArgument("factor scope may not be empty".into()));
        }
        let mut strides = vec![0; scope.len()];
        let mut cells = 1usize;
        for (k, &var) in scope.iter().enumerate().rev() {
            let card = *cardinalities
                .get(var)
                .ok_or_else(|| Error::InvalidArgument(format!("factor scope names variable {var}, not in selector")))?;
            strides[k] = cells;
            cells = cells
                .checked_mul(card)
                .filter(|&c| c <= 1 << 24)
                .ok_or_else(|| Error::InvalidArgument("factor table too large".into()))?;
        }
        Ok(Factor { scope, strides, theta: vec![0.0; 2 * cells] })
    }

    pub fn cells(&self) -> usize {
        self.theta.len() / 2
    }

    pub fn cell(&self, tuple: &[u16]) -> usize {
        self.scope.iter().zip(&self.strides).map(|(&v, &s)| tuple[v] as usize * s).sum()
    }

    /// `theta(x, 1) - theta(x, 0)` for the cell of `tuple`.
    pub fn log_ratio(&self, tuple: &[u16]) -> f64 {
        let c = self.cell(tuple);
        self.theta[2 * c + 1] - self.theta[2 * c]
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorGraphModel {
    pub action: usize,
    pub cardinalities: Vec<usize>,
    pub factors: Vec<Factor>,
}

impl FactorGraphModel {
    /// Fresh model with every log-potential at zero (p = 0.5 everywhere).
    pub fn new(action: usize, cardinalities: Vec<usize>, scopes: &[Vec<usize>]) -> Result<Self> {
        let factors = scopes.iter().map(|s| Factor::new(s.clone(), &cardinalities)).collect::<Result<Vec<_>>>()?;
        let model = FactorGraphModel { action, cardinalities, factors };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for var in 0..self.cardinalities.len() {
            if !self.factors.iter().any(|f| f.scope.contains(&var)) {
                return Err(Error::InvalidArgument(format!(
                    "action {}: variable {var} is not in any factor scope",
                    self.action
                )));
            }
        }
        for f in &self.factors {
            let expected: usize = f.scope.iter().map(|&v| self.cardinalities[v]).product::<usize>() * 2;
            if f.theta.len() != expected {
                return Err(Error::Shape(format!(
                    "action {}: factor table has {} entries, expected {expected}",
                    self.action,
                    f.theta.len()
                )));
            }
            if f.theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite(format!("log-potentials of action {}", self.action)));
            }
        }
        Ok(())
    }

    pub fn check_tuple(&self, tuple: &[u16]) -> Result<()> {
        if tuple.len() != self.cardinalities.len() {
            return Err(Error::Shape(format!(
                "action {}: tuple has {} entries, model has {} variables",
                self.action,
                tuple.len(),
                self.cardinalities.len()
            )));
        }
        if let Some(i) = tuple.iter().zip(&self.cardinalities).position(|(&x, &c)| x as usize >= c) {
            return Err(Error::InvalidArgument(format!("action {}: variable {i} value out of range", self.action)));
        }
        Ok(())
    }

    /// Summed log-odds of `y = 1`. Unchecked; call [`Self::check_tuple`] first for foreign input.
    pub fn log_odds(&self, tuple: &[u16]) -> f64 {
        self.factors.iter().map(|f| f.log_ratio(tuple)).sum()
    }

    /// `p(y = 1 | x)`.
    pub fn infer(&self, tuple: &[u16]) -> Result<f64> {
        self.check_tuple(tuple)?;
        Ok(sigmoid(self.log_odds(tuple)))
    }

    pub fn num_parameters(&self) -> usize {
        self.factors.iter().map(|f| f.theta.len()).sum()
    }

    /// Accumulate `scale * d log_odds / d theta` into `grads` (one buffer per factor).
    pub fn accumulate_log_odds_grad(&self, tuple: &Tuple, scale: f64, grads: &mut [Vec<f64>]) {
        for (f, g) in self.factors.iter().zip(grads.iter_mut()) {
            let c = f.cell(tuple);
            g[2 * c + 1] += scale;
            g[2 * c] -= scale;
        }
    }

    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.factors.iter().map(|f| vec![0.0; f.theta.len()]).collect()
    }
}

pub fn graph_infer(model: &FactorGraphModel, tuple: &[u16]) -> Result<f64> {
    model.infer(tuple)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_phi(f: &mut Factor, cell: usize, y0: f64, y1: f64) {
        f.theta[2 * cell] = y0.ln();
        f.theta[2 * cell + 1] = y1.ln();
    }

    #[test]
    fn equal_potentials_give_one_half() {
        let m = FactorGraphModel::new(0, vec![3, 2], &[vec![0], vec![0, 1]]).unwrap();
        assert_eq!(m.infer(&[2, 1]).unwrap(), 0.5);
    }

    #[test]
    fn single_factor_three_to_one() {
        let mut m = FactorGraphModel::new(0, vec![2], &[vec![0]]).unwrap();
        set_phi(&mut m.factors[0], 1, 1.0, 3.0);
        assert!((m.infer(&[1]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_factor_product() {
        let mut m = FactorGraphModel::new(0, vec![2, 2], &[vec![0], vec![1]]).unwrap();
        set_phi(&mut m.factors[0], 0, 1.0, 2.0);
        set_phi(&mut m.factors[1], 1, 3.0, 1.0);
        assert!((m.infer(&[0, 1]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tuples_and_uncovered_variables() {
        let m = FactorGraphModel::new(0, vec![2, 3], &[vec![0, 1]]).unwrap();
        assert!(m.infer(&[0]).is_err());
        assert!(m.infer(&[0, 3]).is_err());
        assert!(FactorGraphModel::new(0, vec![2, 3], &[vec![0]]).is_err());
        assert!(FactorGraphModel::new(0, vec![2], &[vec![1]]).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.3) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_size_is_product_of_cardinalities_times_two() {
        let m = FactorGraphModel::new(0, vec![3, 4, 2], &[vec![0, 2], vec![1]]).unwrap();
        assert_eq!(m.factors[0].theta.len(), 12);
        assert_eq!(m.factors[1].theta.len(), 8);
    }
}
