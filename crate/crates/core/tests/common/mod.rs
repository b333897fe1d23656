//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use dinerdash::dpgm::{squared_loss_and_grad, FactorGraphModel, Tuple};
use dinerdash::nn::{softmax_cross_entropy, Batch, DenseNet};
use dinerdash::rng::Rng;
use dinerdash::sim::{Env, EnvConfig, NUM_ACTIONS};

/// Up to 3 variables of up to 4 categories, up to 3 factors, log-potentials in [-3, 3].
pub fn random_model(rng: &mut Rng) -> FactorGraphModel {
    let n_vars = rng.range_inclusive(1, 3) as usize;
    let cards: Vec<usize> = (0..n_vars).map(|_| rng.range_inclusive(1, 4) as usize).collect();
    let n_factors = rng.range_inclusive(1, 3) as usize;
    let mut scopes: Vec<Vec<usize>> = (0..n_factors)
        .map(|_| {
            let scope: Vec<usize> = (0..n_vars).filter(|_| rng.bernoulli(0.5)).collect();
            if scope.is_empty() {
                vec![rng.below(n_vars as u64) as usize]
            } else {
                scope
            }
        })
        .collect();
    for v in 0..n_vars {
        if !scopes.iter().any(|s| s.contains(&v)) {
            scopes[n_factors - 1].push(v);
        }
    }
    for s in &mut scopes {
        s.sort_unstable();
        s.dedup();
    }
    let mut m = FactorGraphModel::new(0, cards, &scopes).unwrap();
    for f in &mut m.factors {
        for t in &mut f.theta {
            *t = rng.symmetric(3.0);
        }
    }
    m
}

/// Every assignment of the variables, in lexicographic order.
pub fn all_tuples(cards: &[usize]) -> Vec<Tuple> {
    let mut out = vec![Vec::new()];
    for &c in cards {
        out = out.into_iter().flat_map(|t| (0..c as u16).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

/// `p(y = 1 | x)` from the explicitly normalized joint `prod phi / Z` over all `(x, y)`.
pub fn joint_conditional(model: &FactorGraphModel, x: &[u16]) -> f64 {
    let potential = |tuple: &[u16], y: usize| -> f64 {
        model
            .factors
            .iter()
            .map(|f| {
                let mut cell = 0;
                for &v in &f.scope {
                    cell = cell * model.cardinalities[v] + tuple[v] as usize;
                }
                f.theta[2 * cell + y].exp()
            })
            .product()
    };
    let tuples = all_tuples(&model.cardinalities);
    let z: f64 = tuples.iter().map(|t| potential(t, 0) + potential(t, 1)).sum();
    let p1 = potential(x, 1) / z;
    let p0 = potential(x, 0) / z;
    p1 / (p0 + p1)
}

pub fn close(analytic: f64, numeric: f64, rel: f64) -> bool {
    (analytic - numeric).abs() <= rel * analytic.abs().max(numeric.abs()) + 1e-9
}

/// Central-difference check of the squared-loss potential gradient on random data.
/// Returns the number of mismatching entries.
pub fn graph_gradient_mismatches(rng: &mut Rng) -> usize {
    let mut model = random_model(rng);
    let tuples = all_tuples(&model.cardinalities);
    let n = rng.range_inclusive(1, 12) as usize;
    let data: Vec<(Tuple, bool)> =
        (0..n).map(|_| (tuples[rng.below(tuples.len() as u64) as usize].clone(), rng.bernoulli(0.4))).collect();
    let weight = 1.0 + rng.next_f64() * 5.0;
    let (_, grad) = squared_loss_and_grad(&model, &data, weight).unwrap();
    let h = 1e-5;
    let mut bad = 0;
    for f in 0..model.factors.len() {
        for i in 0..model.factors[f].theta.len() {
            let orig = model.factors[f].theta[i];
            model.factors[f].theta[i] = orig + h;
            let (up, _) = squared_loss_and_grad(&model, &data, weight).unwrap();
            model.factors[f].theta[i] = orig - h;
            let (down, _) = squared_loss_and_grad(&model, &data, weight).unwrap();
            model.factors[f].theta[i] = orig;
            if !close(grad[f][i], (up - down) / (2.0 * h), 1e-4) {
                bad += 1;
            }
        }
    }
    bad
}

/// Summed softmax cross-entropy of a network on a batch, evaluated on a clone so the dropout
/// mask is the same on every call.
fn net_loss(net: &DenseNet, x: &Batch, labels: &[usize]) -> f64 {
    let mut n = net.clone();
    let (out, _) = n.forward_batch(x, true).unwrap();
    labels.iter().enumerate().map(|(r, &y)| softmax_cross_entropy(out.row(r), y).unwrap().0).sum()
}

/// Central-difference check of every weight, bias and input gradient of a random network
/// (random depth, widths, batch and dropout). Returns the number of mismatching entries.
pub fn dense_gradient_mismatches(rng: &mut Rng, seed: u64) -> usize {
    let depth = rng.range_inclusive(1, 3) as usize;
    let widths: Vec<usize> = (0..=depth).map(|_| rng.range_inclusive(1, 6) as usize).collect();
    let dropout: Vec<f64> = (0..depth - 1).map(|_| if rng.bernoulli(0.5) { 0.3 } else { 0.0 }).collect();
    let mut net = DenseNet::new(&widths, &dropout, seed).unwrap();
    for l in &mut net.layers {
        for b in &mut l.bias {
            *b = rng.symmetric(0.5);
        }
    }
    let rows = rng.range_inclusive(1, 4) as usize;
    let classes = *widths.last().unwrap();
    let mut x = Batch::zeros(rows, widths[0]);
    for v in &mut x.data {
        *v = rng.symmetric(2.0);
    }
    let labels: Vec<usize> = (0..rows).map(|_| rng.below(classes as u64) as usize).collect();

    let mut probe = net.clone();
    let (out, cache) = probe.forward_batch(&x, true).unwrap();
    let mut grad_out = Batch::zeros(rows, classes);
    for (r, &y) in labels.iter().enumerate() {
        let (_, g) = softmax_cross_entropy(out.row(r), y).unwrap();
        grad_out.row_mut(r).copy_from_slice(&g);
    }
    let (grads, gin) = net.backward(&cache, &grad_out).unwrap();

    let h = 1e-6;
    let mut bad = 0;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    for (k, g) in analytic.iter().enumerate() {
        for i in 0..g.len() {
            let mut up = net.clone();
            up.params_mut()[k].1[i] += h;
            let mut down = net.clone();
            down.params_mut()[k].1[i] -= h;
            let numeric = (net_loss(&up, &x, &labels) - net_loss(&down, &x, &labels)) / (2.0 * h);
            if !close(g[i], numeric, 1e-4) {
                bad += 1;
            }
        }
    }
    for i in 0..x.data.len() {
        let mut xu = x.clone();
        xu.data[i] += h;
        let mut xd = x.clone();
        xd.data[i] -= h;
        let numeric = (net_loss(&net, &xu, &labels) - net_loss(&net, &xd, &labels)) / (2.0 * h);
        if !close(gin.data[i], numeric, 1e-4) {
            bad += 1;
        }
    }
    bad
}

/// Compare the legality mask with the outcome of trying every action on a clone.
pub fn legality_mismatches(env: &Env) -> usize {
    let mask = env.legal_actions();
    (0..NUM_ACTIONS)
        .filter(|&a| {
            let mut probe = env.clone();
            let r = probe.step(a).unwrap();
            r.info.illegal == mask[a]
        })
        .count()
}

/// Two environments with the same seed driven by the same random actions; returns whether
/// every state and reward matched bit for bit.
pub fn paired_run_identical(config: &EnvConfig, seed: u64, steps: usize, action_seed: u64) -> bool {
    let mut a = Env::new(config.clone(), seed).unwrap();
    let mut b = Env::new(config.clone(), seed).unwrap();
    let mut rng = Rng::new(action_seed);
    if a.reset() != b.reset() {
        return false;
    }
    for _ in 0..steps {
        let act = rng.below(NUM_ACTIONS as u64) as usize;
        let (ra, rb) = (a.step(act).unwrap(), b.step(act).unwrap());
        let same = ra.reward.to_bits() == rb.reward.to_bits()
            && ra.done == rb.done
            && ra.state.iter().zip(&rb.state).all(|(x, y)| x.to_bits() == y.to_bits());
        if !same {
            return false;
        }
        if ra.done {
            a.reset_with_seed(seed + 1);
            b.reset_with_seed(seed + 1);
        }
    }
    true
}
