//! Multilayer perceptron with softmax cross-entropy output, trained by
//! mini-batch gradient descent with backpropagation.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::params::Params;
use super::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// `f(W x + b)` with `W` stored row-major as `n_out x n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl MlpLayer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        let n_out = weights.len();
        let n_in = weights.first().map_or(0, Vec::len);
        if let Some(bad) = weights.iter().find(|r| r.len() != n_in) {
            return Err(Error::Dimension {
                expected: n_in,
                found: bad.len(),
            });
        }
        if biases.len() != n_out {
            return Err(Error::Dimension {
                expected: n_out,
                found: biases.len(),
            });
        }
        Ok(MlpLayer {
            n_in,
            n_out,
            weights: weights.into_iter().flatten().collect(),
            biases,
            activation,
        })
    }

    fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in.max(1))
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_in {
            return Err(Error::Dimension {
                expected: self.n_in,
                found: x.len(),
            });
        }
        Ok(self.preactivation(x).into_iter().map(|z| self.activation.apply(z)).collect())
    }
}

pub fn mlp_forward(layer: &MlpLayer, x: &[f64]) -> Result<Vec<f64>> {
    layer.forward(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl MlpParams {
    pub fn with_layers(layers: usize, width: usize) -> Self {
        MlpParams {
            hidden: vec![width; layers],
            activation: Activation::Relu,
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
        }
    }

    pub(crate) fn from_params(p: &mut Params<'_>, layers: usize) -> Result<Self> {
        let width = p.count("hidden", 1)?.unwrap_or(15);
        let d = MlpParams::with_layers(layers, width);
        let activation = match p.text("activation")? {
            None => d.activation,
            Some("relu") => Activation::Relu,
            Some("sigmoid") => Activation::Sigmoid,
            Some(other) => return Err(Error::param(format!("unknown activation {other:?}"))),
        };
        Ok(MlpParams {
            activation,
            epochs: p.count("epochs", 1)?.unwrap_or(d.epochs),
            learning_rate: p.positive("learning_rate")?.unwrap_or(d.learning_rate),
            batch_size: p.count("batch_size", 1)?.unwrap_or(d.batch_size),
            ..d
        })
    }
}

/// Per-layer gradients `(dW, db)` in the same layout as the layer.
pub type Gradients = Vec<(Vec<f64>, Vec<f64>)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<MlpLayer>,
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

impl Mlp {
    /// Layer sizes `[input, hidden.., output]`. Weights are uniform in
    /// `±1/sqrt(fan_in)`, biases zero, output layer identity (logits).
    pub fn init(sizes: &[usize], hidden: Activation, seed: u64) -> Mlp {
        let mut rng = seed::rng(seed);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let r = 1.0 / (n_in as f64).sqrt();
                MlpLayer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.random_range(-r..r)).collect(),
                    biases: vec![0.0; n_out],
                    activation: if l + 2 == sizes.len() { Activation::Identity } else { hidden },
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.preactivation(&a).into_iter().map(|z| layer.activation.apply(z)).collect();
        }
        a
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        log_softmax(&self.logits(x)).into_iter().map(f64::exp).collect()
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        let z = self.logits(x);
        let mut best = 0;
        for c in 1..z.len() {
            if z[c] > z[best] {
                best = c;
            }
        }
        best
    }

    /// Mean cross-entropy over `rows`.
    pub fn loss(&self, x: &Matrix, y: &[usize], rows: &[usize]) -> f64 {
        rows.iter().map(|&i| -log_softmax(&self.logits(x.row(i)))[y[i]]).sum::<f64>() / rows.len() as f64
    }

    /// Mean cross-entropy over `rows` and its gradient by backpropagation.
    pub fn loss_and_gradients(&self, x: &Matrix, y: &[usize], rows: &[usize]) -> (f64, Gradients) {
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.n_out]))
            .collect();
        let mut loss = 0.0;
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut act: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        for &i in rows {
            pre.clear();
            act.clear();
            act.push(x.row(i).to_vec());
            for layer in &self.layers {
                let z = layer.preactivation(act.last().unwrap());
                act.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
                pre.push(z);
            }
            let logp = log_softmax(act.last().unwrap());
            loss -= logp[y[i]];
            let mut delta: Vec<f64> = logp.iter().map(|v| v.exp()).collect();
            delta[y[i]] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                if l + 1 < self.layers.len() {
                    for (d, (&z, &a)) in delta.iter_mut().zip(pre[l].iter().zip(&act[l + 1])) {
                        *d *= layer.activation.derivative(z, a);
                    }
                }
                let input = &act[l];
                let (gw, gb) = &mut grads[l];
                for (o, &d) in delta.iter().enumerate() {
                    gb[o] += d;
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, &a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; layer.n_in];
                    for (o, &d) in delta.iter().enumerate() {
                        for (b, &w) in back.iter_mut().zip(&layer.weights[o * layer.n_in..(o + 1) * layer.n_in]) {
                            *b += w * d;
                        }
                    }
                    delta = back;
                }
            }
        }
        let scale = 1.0 / rows.len() as f64;
        for (gw, gb) in &mut grads {
            gw.iter_mut().chain(gb.iter_mut()).for_each(|g| *g *= scale);
        }
        (loss * scale, grads)
    }

    /// Parameters in order: layer by layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *p = *it.next().expect("parameter count");
            }
        }
    }

    pub fn flatten(grads: &Gradients) -> Vec<f64> {
        grads.iter().flat_map(|(w, b)| w.iter().chain(b).copied()).collect()
    }

    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &MlpParams, seed: u64) -> Mlp {
        let mut sizes = vec![x.cols];
        sizes.extend(&params.hidden);
        sizes.push(n_classes);
        let mut net = Mlp::init(&sizes, params.activation, seed::derive_tag(seed, "init"));
        let mut order: Vec<usize> = (0..x.rows).collect();
        for epoch in 0..params.epochs {
            order.shuffle(&mut seed::rng(seed::derive(seed, &[epoch as u64])));
            for batch in order.chunks(params.batch_size) {
                let (_, grads) = net.loss_and_gradients(x, y, batch);
                for (layer, (gw, gb)) in net.layers.iter_mut().zip(grads) {
                    for (w, g) in layer.weights.iter_mut().zip(gw) {
                        *w -= params.learning_rate * g;
                    }
                    for (b, g) in layer.biases.iter_mut().zip(gb) {
                        *b -= params.learning_rate * g;
                    }
                }
            }
        }
        net
    }
}
