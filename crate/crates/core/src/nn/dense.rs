use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

/// Fully connected layer. `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut Rng) -> Dense {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.symmetric(limit)).collect();
        Dense { inputs, outputs, activation, weights, bias: vec![0.0; outputs] }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// Row-major batch of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Batch {
        Batch { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Batch> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(Error::Shape("ragged batch".into()));
            }
            data.extend_from_slice(r.as_ref());
        }
        Ok(Batch { rows: rows.len(), cols, data })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    /// Input to each layer (after the previous boundary's dropout).
    inputs: Vec<Batch>,
    /// Pre-activation of each layer.
    pre: Vec<Batch>,
    /// Inverted-dropout multipliers at each boundary (empty when dropout was inactive).
    masks: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Gradients {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Interleaved `(weights, bias)` per layer, the order used by [`DenseNet::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights.iter().zip(&self.bias).flat_map(|(w, b)| [w.as_slice(), b.as_slice()]).collect()
    }
}

/// A stack of dense layers with optional inverted dropout between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Dense>,
    /// `dropout[i]` applies to the output of layer `i`; one entry per boundary.
    pub dropout: Vec<f64>,
    rng: Rng,
}

impl DenseNet {
    /// `widths = [in, h1, ..., out]`; hidden layers use ReLU, the last identity.
    pub fn new(widths: &[usize], dropout: &[f64], seed: u64) -> Result<DenseNet> {
        if widths.len() < 2 {
            return Err(Error::Shape("a network needs at least an input and an output width".into()));
        }
        if dropout.len() != widths.len() - 2 {
            return Err(Error::Shape(format!(
                "{} layers have {} boundaries, got {} dropout rates",
                widths.len() - 1,
                widths.len() - 2,
                dropout.len()
            )));
        }
        let mut init = Rng::stream(seed, Stream::Init);
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { Activation::Identity } else { Activation::Relu };
                Dense::glorot(widths[i], widths[i + 1], act, &mut init)
            })
            .collect();
        let net = DenseNet { layers, dropout: dropout.to_vec(), rng: Rng::stream(seed, Stream::Dropout) };
        net.validate()?;
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Dense>, dropout: Vec<f64>, seed: u64) -> Result<DenseNet> {
        let net = DenseNet { layers, dropout, rng: Rng::stream(seed, Stream::Dropout) };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        if self.dropout.len() + 1 != self.layers.len() {
            return Err(Error::Shape("need exactly one dropout rate per layer boundary".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape(format!("layer {i} parameter sizes do not match {}x{}", l.outputs, l.inputs)));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Error::Shape(format!("layer {i} input width does not match layer {} output", i - 1)));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        if let Some(p) = self.dropout.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::Shape(format!("dropout rate {p} outside [0, 1)")));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("validated").outputs
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Batched forward pass. Dropout is active only with `train = true`; outputs are
    /// never rescaled at evaluation time (inverted dropout).
    pub fn forward_batch(&mut self, x: &Batch, train: bool) -> Result<(Batch, Cache)> {
        let mut rng = std::mem::replace(&mut self.rng, Rng::new(0));
        let out = forward_impl(self, x, if train { Some(&mut rng) } else { None });
        self.rng = rng;
        out
    }

    /// Evaluation-mode forward pass; a pure function of the parameters and input.
    pub fn predict_batch(&self, x: &Batch) -> Result<Batch> {
        forward_impl(self, x, None).map(|(out, _)| out)
    }

    pub fn forward(&mut self, x: &[f64], train: bool) -> Result<(Vec<f64>, Cache)> {
        let batch = Batch { rows: 1, cols: x.len(), data: x.to_vec() };
        let (out, cache) = self.forward_batch(&batch, train)?;
        Ok((out.data, cache))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = Batch { rows: 1, cols: x.len(), data: x.to_vec() };
        Ok(self.predict_batch(&batch)?.data)
    }

    /// Reverse-mode gradients of a scalar loss whose gradient with respect to the network
    /// output is `grad_out`. Parameter gradients are summed over the batch. Returns the
    /// gradient with respect to the input as well.
    pub fn backward(&self, cache: &Cache, grad_out: &Batch) -> Result<(Gradients, Batch)> {
        let n = self.layers.len();
        if cache.inputs.len() != n {
            return Err(Error::Shape("cache does not belong to this network".into()));
        }
        let rows = cache.inputs[0].rows;
        if grad_out.rows != rows || grad_out.cols != self.output_width() {
            return Err(Error::Shape(format!(
                "output gradient is {}x{}, expected {}x{}",
                grad_out.rows,
                grad_out.cols,
                rows,
                self.output_width()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut g = grad_out.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            if i + 1 < n && !cache.masks[i].is_empty() {
                for (gv, m) in g.data.iter_mut().zip(&cache.masks[i]) {
                    *gv *= m;
                }
            }
            if layer.activation == Activation::Relu {
                for (gv, z) in g.data.iter_mut().zip(&cache.pre[i].data) {
                    if *z <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            let input = &cache.inputs[i];
            let gw = &mut grads.weights[i];
            let gb = &mut grads.bias[i];
            for r in 0..rows {
                let grow = g.row(r);
                let xrow = input.row(r);
                for o in 0..layer.outputs {
                    let go = grow[o];
                    if go != 0.0 {
                        gb[o] += go;
                        axpy(go, xrow, &mut gw[o * layer.inputs..(o + 1) * layer.inputs]);
                    }
                }
            }
            let mut gin = Batch::zeros(rows, layer.inputs);
            for r in 0..rows {
                let grow = g.row(r).to_vec();
                let dst = gin.row_mut(r);
                for (o, go) in grow.iter().enumerate() {
                    if *go != 0.0 {
                        axpy(*go, layer.row(o), dst);
                    }
                }
            }
            g = gin;
        }
        Ok((grads, g))
    }

    /// Mutable parameter slices with names, interleaved `(weights, bias)` per layer.
    pub fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| {
                [(format!("layer{i}.weights"), l.weights.as_mut_slice()), (format!("layer{i}.bias"), l.bias.as_mut_slice())]
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<DenseNet> {
        let net: DenseNet =
            serde_json::from_str(text).map_err(|e| Error::Parse { what: "network checkpoint".into(), reason: e.to_string() })?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<DenseNet> {
        DenseNet::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn forward_impl(net: &DenseNet, x: &Batch, mut rng: Option<&mut Rng>) -> Result<(Batch, Cache)> {
    if x.cols != net.input_width() {
        return Err(Error::Shape(format!("input has width {}, network expects {}", x.cols, net.input_width())));
    }
    let n = net.layers.len();
    let mut cache = Cache { inputs: Vec::with_capacity(n), pre: Vec::with_capacity(n), masks: Vec::with_capacity(n) };
    let mut a = x.clone();
    for (i, layer) in net.layers.iter().enumerate() {
        let mut z = Batch::zeros(a.rows, layer.outputs);
        for r in 0..a.rows {
            let arow = a.row(r);
            let zrow = z.row_mut(r);
            for (o, zv) in zrow.iter_mut().enumerate() {
                *zv = dot(layer.row(o), arow) + layer.bias[o];
            }
        }
        let mut out = z.clone();
        if layer.activation == Activation::Relu {
            for v in out.data.iter_mut() {
                *v = v.max(0.0);
            }
        }
        let mut mask = Vec::new();
        if i + 1 < n {
            let p = net.dropout[i];
            if let (true, Some(rng)) = (p > 0.0, rng.as_deref_mut()) {
                let keep = 1.0 / (1.0 - p);
                mask = (0..out.data.len()).map(|_| if rng.next_f64() < p { 0.0 } else { keep }).collect();
                for (v, m) in out.data.iter_mut().zip(&mask) {
                    *v *= m;
                }
            }
        }
        cache.inputs.push(a);
        cache.pre.push(z);
        cache.masks.push(mask);
        a = out;
    }
    Ok((a, cache))
}
