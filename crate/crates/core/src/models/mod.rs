//! The six classifier families behind one fit/predict contract.

mod forest;
mod impurity;
mod mlp;
mod naive_bayes;
mod params;
pub mod persist;
mod standardize;
mod svm;
mod tree;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FlowRecord};
use crate::error::{Error, Result};

pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use impurity::{entropy, gini, SplitCriterion};
pub use mlp::{mlp_forward, Activation, Gradients, Mlp, MlpLayer, MlpParams};
pub use naive_bayes::{bayes_posterior, Likelihoods, NaiveBayes, NbParams, NbVariant};
pub use params::HyperValue;
pub use persist::{load_model, save_model};
pub use standardize::{standardize_apply, standardize_fit, Standardizer};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, Node, TreeParams};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows<I: IntoIterator<Item = Vec<f64>>>(rows: I) -> Matrix {
        let mut data = Vec::new();
        let mut n = 0;
        let mut cols = None;
        for r in rows {
            let c = *cols.get_or_insert(r.len());
            assert_eq!(c, r.len(), "ragged matrix");
            data.extend(r);
            n += 1;
        }
        Matrix {
            rows: n,
            cols: cols.unwrap_or(0),
            data,
        }
    }

    pub fn from_dataset(d: &Dataset) -> Matrix {
        let cols = d.schema().dim();
        let mut data = Vec::with_capacity(d.len() * cols);
        for r in d.records() {
            data.extend_from_slice(&r.values);
        }
        Matrix { rows: d.len(), cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum::<f64>() / self.rows.max(1) as f64
    }

    /// Population variance.
    pub fn column_variance(&self, j: usize) -> f64 {
        let m = self.column_mean(j);
        (0..self.rows).map(|i| (self.get(i, j) - m).powi(2)).sum::<f64>() / self.rows.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DecisionTree,
    RandomForest,
    Svm,
    NaiveBayes,
    Ann,
    Dnn,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::DecisionTree,
        Family::RandomForest,
        Family::Svm,
        Family::NaiveBayes,
        Family::Ann,
        Family::Dnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::Svm => "svm",
            Family::NaiveBayes => "naive_bayes",
            Family::Ann => "ann",
            Family::Dnn => "dnn",
        }
    }

    /// SVM and MLPs see z-scored features; trees and naive Bayes see raw values.
    pub fn standardizes(self) -> bool {
        matches!(self, Family::Svm | Family::Ann | Family::Dnn)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param(format!("unknown model family {s:?}")))
    }
}

/// Typed hyperparameters, resolved from a [`ClassifierSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    Svm(SvmParams),
    NaiveBayes(NbParams),
    Mlp(MlpParams),
}

impl FamilyParams {
    fn resolve(family: Family, map: &BTreeMap<String, HyperValue>) -> Result<Self> {
        let mut p = params::Params::new(map);
        let out = match family {
            Family::DecisionTree => FamilyParams::DecisionTree(TreeParams::from_params(&mut p)?),
            Family::RandomForest => FamilyParams::RandomForest(ForestParams::from_params(&mut p)?),
            Family::Svm => FamilyParams::Svm(SvmParams::from_params(&mut p)?),
            Family::NaiveBayes => FamilyParams::NaiveBayes(NbParams::from_params(&mut p)?),
            Family::Ann => FamilyParams::Mlp(MlpParams::from_params(&mut p, 1)?),
            Family::Dnn => FamilyParams::Mlp(MlpParams::from_params(&mut p, 3)?),
        };
        p.finish(family.name())?;
        Ok(out)
    }
}

/// Model family, hyperparameters and seed. Validated on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub family: Family,
    pub hyperparameters: BTreeMap<String, HyperValue>,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(family: Family, hyperparameters: BTreeMap<String, HyperValue>, seed: u64) -> Result<Self> {
        FamilyParams::resolve(family, &hyperparameters)?;
        Ok(ClassifierSpec {
            family,
            hyperparameters,
            seed,
        })
    }

    /// Family defaults.
    pub fn default_for(family: Family, seed: u64) -> Self {
        ClassifierSpec {
            family,
            hyperparameters: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<HyperValue>) -> Result<Self> {
        self.hyperparameters.insert(name.to_string(), value.into());
        FamilyParams::resolve(self.family, &self.hyperparameters)?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn params(&self) -> Result<FamilyParams> {
        FamilyParams::resolve(self.family, &self.hyperparameters)
    }

    /// `family(k=v, ...)`
    pub fn describe(&self) -> String {
        let kv: Vec<String> = self.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.family, kv.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedState {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Svm(LinearSvm),
    NaiveBayes(NaiveBayes),
    Mlp(Mlp),
}

impl FittedState {
    fn predict_row(&self, x: &[f64]) -> usize {
        match self {
            FittedState::DecisionTree(m) => m.predict_row(x),
            FittedState::RandomForest(m) => m.predict_row(x),
            FittedState::Svm(m) => m.predict_row(x),
            FittedState::NaiveBayes(m) => m.predict_row(x),
            FittedState::Mlp(m) => m.predict_row(x),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub feature_names: Vec<String>,
    /// Class labels in lexicographic order; predictions index into this.
    pub labels: Vec<String>,
    pub standardizer: Option<Standardizer>,
    pub state: FittedState,
    pub n_train: usize,
    #[serde(skip)]
    fit_time: Duration,
}

impl PartialEq for TrainedModel {
    /// Compares everything except the fit wall time.
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.feature_names == other.feature_names
            && self.labels == other.labels
            && self.standardizer == other.standardizer
            && self.state == other.state
            && self.n_train == other.n_train
    }
}

/// Training matrix plus class indices into the sorted label list.
pub(crate) fn design(d: &Dataset) -> (Matrix, Vec<usize>, Vec<String>) {
    let labels = d.labels();
    let y = d
        .records()
        .iter()
        .map(|r| labels.binary_search(&r.label).expect("label present"))
        .collect();
    (Matrix::from_dataset(d), y, labels)
}

/// Fits `spec` on `train`.
pub fn fit(spec: &ClassifierSpec, train: &Dataset) -> Result<TrainedModel> {
    let params = spec.params()?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if train.records().iter().any(|r| r.has_missing() || r.has_non_finite()) {
        return Err(Error::param("training set contains missing or non-finite values; clean it first"));
    }
    let start = Instant::now();
    let (x, y, labels) = design(train);
    if labels.len() < 2 {
        return Err(Error::SingleClass(labels[0].clone()));
    }
    let k = labels.len();
    let (x, standardizer) = if spec.family.standardizes() {
        let s = Standardizer::fit_matrix(&x);
        (s.apply_matrix(&x), Some(s))
    } else {
        (x, None)
    };
    let state = match params {
        FamilyParams::DecisionTree(p) => FittedState::DecisionTree(DecisionTree::fit(&x, &y, k, &p)),
        FamilyParams::RandomForest(p) => FittedState::RandomForest(RandomForest::fit(&x, &y, k, &p, spec.seed)),
        FamilyParams::Svm(p) => {
            if k > 2 {
                return Err(Error::NotBinary {
                    family: "svm",
                    classes: k,
                });
            }
            FittedState::Svm(LinearSvm::fit(&x, &y, &p, spec.seed))
        }
        FamilyParams::NaiveBayes(p) => FittedState::NaiveBayes(NaiveBayes::fit(&x, &y, k, &p)?),
        FamilyParams::Mlp(p) => FittedState::Mlp(Mlp::fit(&x, &y, k, &p, spec.seed)),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_names: train.schema().feature_names().to_vec(),
        labels,
        standardizer,
        state,
        n_train: train.len(),
        fit_time: start.elapsed(),
    })
}

impl TrainedModel {
    /// Wall time spent in [`fit`]; zero for models loaded from disk.
    pub fn fit_time(&self) -> Duration {
        self.fit_time
    }

    fn check_schema(&self, names: &[String]) -> Result<()> {
        if names != self.feature_names.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features {:?}, got {:?}",
                self.feature_names.len(),
                self.feature_names,
                names
            )));
        }
        Ok(())
    }

    /// Class index for raw (unstandardized) feature values.
    pub fn predict_values(&self, x: &[f64]) -> usize {
        match &self.standardizer {
            Some(s) => self.state.predict_row(&s.apply_row(x)),
            None => self.state.predict_row(x),
        }
    }

    pub fn predict(&self, record: &FlowRecord) -> Result<&str> {
        if record.values.len() != self.feature_names.len() {
            return Err(Error::Dimension {
                expected: self.feature_names.len(),
                found: record.values.len(),
            });
        }
        if record.has_missing() {
            return Err(Error::param("record has missing values"));
        }
        Ok(&self.labels[self.predict_values(&record.values)])
    }

    /// Predicts every record; the duration covers the prediction loop only.
    pub fn predict_batch(&self, d: &Dataset) -> Result<(Vec<String>, Duration)> {
        self.check_schema(d.schema().feature_names())?;
        if d.records().iter().any(FlowRecord::has_missing) {
            return Err(Error::param("dataset has missing values"));
        }
        let start = Instant::now();
        let idx: Vec<usize> = d.records().iter().map(|r| self.predict_values(&r.values)).collect();
        let elapsed = start.elapsed();
        Ok((idx.into_iter().map(|i| self.labels[i].clone()).collect(), elapsed))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let d = self.feature_names.len();
        let k = self.labels.len();
        let ok = match &self.state {
            FittedState::DecisionTree(t) => t.validate(d, k).is_ok(),
            FittedState::RandomForest(f) => {
                f.n_classes == k && !f.trees.is_empty() && f.trees.iter().all(|t| t.validate(d, k).is_ok())
            }
            FittedState::Svm(s) => s.weights.len() == d && k == 2,
            FittedState::NaiveBayes(nb) => nb.priors.len() == k,
            FittedState::Mlp(m) => {
                m.layers.first().is_some_and(|l| l.n_in == d)
                    && m.layers.last().is_some_and(|l| l.n_out == k)
                    && m.layers.windows(2).all(|w| w[0].n_out == w[1].n_in)
            }
        };
        if !ok {
            return Err(Error::ModelFormat("fitted state does not match schema or labels".into()));
        }
        Ok(())
    }
}
