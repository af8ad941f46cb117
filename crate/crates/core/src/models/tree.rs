//! Greedy binary CART.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

use super::impurity::SplitCriterion;
use super::params::Params;
use super::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: SplitCriterion::Gini,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub(crate) fn from_params(p: &mut Params<'_>) -> Result<Self> {
        let d = TreeParams::default();
        let criterion = p.text("criterion")?.map(|s| s.parse()).transpose()?.unwrap_or(d.criterion);
        let max_depth = p.optional_count("max_depth", 0)?.unwrap_or(d.max_depth);
        let min_samples_split = p.count("min_samples_split", 2)?.unwrap_or(d.min_samples_split);
        Ok(TreeParams {
            criterion,
            max_depth,
            min_samples_split,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
        class: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    /// Sample-fraction-weighted impurity decrease per feature (unnormalized).
    pub importances: Vec<f64>,
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &TreeParams) -> DecisionTree {
        let idx: Vec<usize> = (0..x.rows).collect();
        Builder::new(x, y, n_classes, params, None).build(idx)
    }

    /// Walks the tree; `x <= threshold` goes left.
    pub fn leaf(&self, x: &[f64]) -> &Node {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> usize {
        match self.leaf(x) {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub(crate) fn validate(&self, n_features: usize, n_classes: usize) -> Result<()> {
        for n in &self.nodes {
            let ok = match n {
                Node::Split { feature, left, right, .. } => {
                    *feature < n_features && *left < self.nodes.len() && *right < self.nodes.len()
                }
                Node::Leaf { counts, class } => counts.len() == n_classes && *class < n_classes,
            };
            if !ok {
                return Err(Error::ModelFormat("malformed tree node".into()));
            }
        }
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("empty tree".into()));
        }
        Ok(())
    }
}

pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

pub(crate) struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    /// Per-split feature subsampling: (features to try, rng).
    sampler: Option<(usize, Rng)>,
    importances: Vec<f64>,
    pairs: Vec<(f64, usize)>,
}

const GAIN_EPS: f64 = 1e-12;

impl<'a> Builder<'a> {
    pub(crate) fn new(
        x: &'a Matrix,
        y: &'a [usize],
        n_classes: usize,
        params: &'a TreeParams,
        sampler: Option<(usize, Rng)>,
    ) -> Self {
        Builder {
            x,
            y,
            n_classes,
            params,
            sampler: sampler.filter(|(m, _)| *m < x.cols),
            importances: vec![0.0; x.cols],
            pairs: Vec::new(),
        }
    }

    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Builds from the given sample indices (repeats allowed).
    pub(crate) fn build(mut self, idx: Vec<usize>) -> DecisionTree {
        let root_n = idx.len() as f64;
        let mut nodes: Vec<Node> = vec![Node::Leaf {
            counts: Vec::new(),
            class: 0,
        }];
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, idx, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let counts = self.counts(&idx);
            let n = idx.len();
            let impurity = self.params.criterion.of(&counts, n);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
            let best = if !pure && depth_ok && n >= self.params.min_samples_split {
                self.best_split(&idx, &counts, impurity)
            } else {
                None
            };
            match best {
                None => {
                    let class = majority(&counts);
                    nodes[slot] = Node::Leaf { counts, class };
                }
                Some(b) => {
                    self.importances[b.feature] += (n as f64 / root_n) * b.gain.max(0.0);
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.into_iter().partition(|&i| self.x.get(i, b.feature) <= b.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    let placeholder = Node::Leaf {
                        counts: Vec::new(),
                        class: 0,
                    };
                    nodes.push(placeholder.clone());
                    nodes.push(placeholder);
                    nodes[slot] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        DecisionTree {
            nodes,
            importances: self.importances,
        }
    }

    fn feature_order(&mut self) -> (Vec<usize>, usize) {
        let d = self.x.cols;
        match &mut self.sampler {
            None => ((0..d).collect(), d),
            Some((m, rng)) => {
                use rand::seq::SliceRandom;
                let mut order: Vec<usize> = (0..d).collect();
                order.shuffle(rng);
                (order, *m)
            }
        }
    }

    /// Best (feature, threshold) by impurity decrease. Any split separating
    /// distinct values is admissible; the decrease is never negative for a
    /// concave criterion, and zero-decrease splits are kept so impure nodes
    /// can still be separated (XOR-like layouts).
    fn best_split(&mut self, idx: &[usize], parent: &[usize], parent_impurity: f64) -> Option<Best> {
        let (order, want) = self.feature_order();
        let n = idx.len();
        let mut best: Option<Best> = None;
        let mut tried_valid = 0usize;
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for &f in &order {
            if tried_valid >= want && best.is_some() {
                break;
            }
            self.pairs.clear();
            self.pairs.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.pairs[0].0 == self.pairs[n - 1].0 {
                continue;
            }
            tried_valid += 1;
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(parent);
            for i in 0..n - 1 {
                let (v, c) = self.pairs[i];
                left[c] += 1;
                right[c] -= 1;
                let next = self.pairs[i + 1].0;
                if v == next {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let child = (nl as f64 * self.params.criterion.of(&left, nl)
                    + nr as f64 * self.params.criterion.of(&right, nr))
                    / n as f64;
                let gain = parent_impurity - child;
                if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                    let mut threshold = v + (next - v) / 2.0;
                    if !(threshold >= v && threshold < next) {
                        threshold = v;
                    }
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }
}
