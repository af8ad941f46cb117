//! Linear SVM trained on the primal hinge objective
//! `lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))` by averaged stochastic
//! subgradient descent.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::seed;

use super::params::Params;
use super::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Initial step; the step at update `t` is `eta0 / (1 + eta0 * lambda * t)`.
    pub eta0: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
            eta0: 0.1,
        }
    }
}

impl SvmParams {
    pub(crate) fn from_params(p: &mut Params<'_>) -> Result<Self> {
        let d = SvmParams::default();
        Ok(SvmParams {
            lambda: p.positive("lambda")?.unwrap_or(d.lambda),
            epochs: p.count("epochs", 1)?.unwrap_or(d.epochs),
            eta0: p.positive("eta0")?.unwrap_or(d.eta0),
        })
    }
}

/// Fitted separator: class 1 when `w.x + b > 0`, else class 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        usize::from(self.decision(x) > 0.0)
    }

    /// Regularized mean hinge loss on `(x, y)` with `y` in {0, 1}.
    pub fn objective(&self, x: &Matrix, y: &[usize]) -> f64 {
        let hinge: f64 = (0..x.rows)
            .map(|i| {
                let s = if y[i] == 1 { 1.0 } else { -1.0 };
                (1.0 - s * self.decision(x.row(i))).max(0.0)
            })
            .sum();
        0.5 * self.lambda * dot(&self.weights, &self.weights) + hinge / x.rows as f64
    }

    pub fn fit(x: &Matrix, y: &[usize], params: &SvmParams, seed: u64) -> LinearSvm {
        Self::fit_traced(x, y, params, seed).0
    }

    /// Also returns the objective of the averaged iterate after each epoch.
    pub fn fit_traced(x: &Matrix, y: &[usize], params: &SvmParams, seed: u64) -> (LinearSvm, Vec<f64>) {
        let d = x.cols;
        let lambda = params.lambda;
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut avg = LinearSvm {
            weights: vec![0.0; d],
            bias: 0.0,
            lambda,
        };
        let mut order: Vec<usize> = (0..x.rows).collect();
        let mut trace = Vec::with_capacity(params.epochs);
        let mut t: u64 = 0;
        for epoch in 0..params.epochs {
            order.shuffle(&mut seed::rng(seed::derive(seed, &[epoch as u64])));
            for &i in &order {
                t += 1;
                let eta = params.eta0 / (1.0 + params.eta0 * lambda * t as f64);
                let row = x.row(i);
                let s = if y[i] == 1 { 1.0 } else { -1.0 };
                let margin = s * (dot(&w, row) + b);
                let shrink = 1.0 - eta * lambda;
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(row) {
                        *wj = shrink * *wj + eta * s * xj;
                    }
                    b += eta * s;
                } else {
                    w.iter_mut().for_each(|wj| *wj *= shrink);
                }
                let k = 1.0 / t as f64;
                for (a, wj) in avg.weights.iter_mut().zip(&w) {
                    *a += (wj - *a) * k;
                }
                avg.bias += (b - avg.bias) * k;
            }
            trace.push(avg.objective(x, y));
        }
        (avg, trace)
    }
}
