use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::params::{HyperValue, Params};
use super::tree::{majority, Builder, DecisionTree, TreeParams};
use super::Matrix;

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, floor(sqrt(d)))`
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeParams::default(),
        }
    }
}

impl ForestParams {
    pub(crate) fn from_params(p: &mut Params<'_>) -> Result<Self> {
        let d = ForestParams::default();
        let n_trees = p.count("n_trees", 1)?.unwrap_or(d.n_trees);
        let bootstrap = p.flag("bootstrap")?.unwrap_or(d.bootstrap);
        let max_features = match p.raw("max_features") {
            None => d.max_features,
            Some(HyperValue::Text(s)) if s == "sqrt" => MaxFeatures::Sqrt,
            Some(HyperValue::Text(s)) if s == "all" => MaxFeatures::All,
            Some(HyperValue::Int(k)) if *k >= 1 => MaxFeatures::Count(*k as usize),
            Some(v) => return Err(Error::param(format!("max_features expects sqrt, all or a count, got {v}"))),
        };
        let tree = TreeParams::from_params(p)?;
        Ok(ForestParams {
            n_trees,
            bootstrap,
            max_features,
            tree,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

impl RandomForest {
    /// Trees are fitted in parallel; tree `t` draws from stream `(seed, t)`,
    /// so the result equals sequential fitting.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> RandomForest {
        let m = params.max_features.resolve(x.cols);
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                let idx: Vec<usize> = if params.bootstrap {
                    (0..x.rows).map(|_| rng.random_range(0..x.rows)).collect()
                } else {
                    (0..x.rows).collect()
                };
                let sampler = (m < x.cols).then_some((m, rng));
                Builder::new(x, y, n_classes, &params.tree, sampler).build(idx)
            })
            .collect();
        RandomForest { trees, n_classes }
    }

    /// Majority vote; ties go to the earliest class.
    pub fn predict_row(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(x)] += 1;
        }
        majority(&votes)
    }

    /// Mean decrease in impurity, averaged over trees and normalized to
    /// sum to 1 (all zeros when no tree split).
    pub fn feature_importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.importances.len());
        let mut imp = vec![0.0; d];
        for t in &self.trees {
            for (a, b) in imp.iter_mut().zip(&t.importances) {
                *a += b;
            }
        }
        let n = self.trees.len().max(1) as f64;
        imp.iter_mut().for_each(|v| *v /= n);
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}
