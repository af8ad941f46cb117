//! Experiment configuration file (TOML).
//!
//! ```toml
//! seed = 42
//! output_dir = "runs/cic"
//!
//! [train]
//! path = "cic2017.csv"
//! label_column = "Label"
//! resample = { per_class_cap = 200000, benign_to_malicious_ratio = 1.0 }
//!
//! [test]
//! path = "cic2018.csv"
//! fraction = 0.1
//!
//! [features]
//! max_k = 20
//!
//! [models.grids.decision_tree]
//! max_depth = [10, 20, "none"]
//! ```
//!
//! Every section except `[train]` is optional.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::DEFAULT_RANKING_FRACTION;
use crate::models::Family;
use crate::tuning::{HyperGrid, DEFAULT_GRID_FRACTION};

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_label() -> String {
    "Label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Where the run directory goes. Not part of the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub train: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<DataSource>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub models: ModelConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(default = "default_label")]
    pub label_column: String,
    /// Share of rows kept while reading.
    #[serde(default = "one")]
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResampleConfig>,
}

impl DataSource {
    pub fn new(path: impl Into<PathBuf>, label_column: impl Into<String>) -> Self {
        DataSource {
            path: path.into(),
            label_column: label_column.into(),
            fraction: 1.0,
            resample: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benign_to_malicious_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub clean: bool,
    pub drop_classes: Vec<String>,
    pub benign_label: String,
    /// Relabel every non-benign class as `malicious_label`.
    pub binarize: bool,
    pub malicious_label: String,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            clean: true,
            drop_classes: Vec::new(),
            benign_label: "BENIGN".into(),
            binarize: true,
            malicious_label: "malicious".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// When false, every (aligned) feature is kept.
    #[serde(default = "yes")]
    pub select: bool,
    pub exclusions: Vec<String>,
    pub ranking_fraction: f64,
    pub ranking_trees: usize,
    /// Longest prefix of the ranking tried on the curve; all features if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    pub tolerance: f64,
    pub curve_families: Vec<Family>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            select: true,
            exclusions: Vec::new(),
            ranking_fraction: DEFAULT_RANKING_FRACTION,
            ranking_trees: 100,
            max_k: None,
            tolerance: 0.002,
            curve_families: Family::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub families: Vec<Family>,
    /// Grid per family name; a family without a grid uses its defaults.
    pub grids: BTreeMap<String, HyperGrid>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            families: Family::ALL.to_vec(),
            grids: BTreeMap::new(),
        }
    }
}

impl ModelConfig {
    pub fn grid(&self, family: Family) -> HyperGrid {
        self.grids.get(family.name()).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub k: usize,
    pub grid_fraction: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            k: 5,
            grid_fraction: DEFAULT_GRID_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Share of the training data used for the final fit; the rest is the
    /// train-side holdout.
    pub train_fraction: f64,
    pub gap_flag: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            train_fraction: 0.7,
            gap_flag: crate::evaluation::DEFAULT_GAP_FLAG,
        }
    }
}

fn check_fraction(name: &str, f: f64, allow_one: bool) -> Result<()> {
    let ok = f > 0.0 && (f < 1.0 || (allow_one && f == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {f} is out of range")))
    }
}

impl ExperimentConfig {
    /// Minimal config: defaults everywhere except the inputs and seed.
    pub fn new(train: DataSource, test: Option<DataSource>, seed: u64) -> Self {
        ExperimentConfig {
            seed,
            output_dir: None,
            train,
            test,
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            models: ModelConfig::default(),
            validation: ValidationConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative dataset paths are taken relative to the
    /// file's directory and made absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| -> Result<()> {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = std::path::absolute(&joined).map_err(|e| Error::io(joined, e))?;
            }
            Ok(())
        };
        resolve(&mut cfg.train.path)?;
        if let Some(t) = cfg.test.as_mut() {
            resolve(&mut t.path)?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for src in std::iter::once(&self.train).chain(self.test.as_ref()) {
            check_fraction("fraction", src.fraction, true)?;
            if let Some(r) = &src.resample {
                if r.per_class_cap == Some(0) {
                    return Err(Error::Config("per_class_cap must be positive".into()));
                }
                if let Some(x) = r.benign_to_malicious_ratio {
                    if !(x > 0.0 && x.is_finite()) {
                        return Err(Error::Config(format!("benign_to_malicious_ratio = {x} must be positive")));
                    }
                }
            }
        }
        let f = &self.features;
        check_fraction("ranking_fraction", f.ranking_fraction, true)?;
        if f.ranking_trees == 0 {
            return Err(Error::Config("ranking_trees must be positive".into()));
        }
        if f.max_k == Some(0) {
            return Err(Error::Config("max_k must be positive".into()));
        }
        if f.tolerance.is_nan() || f.tolerance < 0.0 {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        if f.select && f.curve_families.is_empty() {
            return Err(Error::Config("curve_families is empty".into()));
        }
        if self.models.families.is_empty() {
            return Err(Error::Config("models.families is empty".into()));
        }
        for (name, grid) in &self.models.grids {
            let family: Family = name.parse().map_err(|_| Error::Config(format!("unknown family {name:?} in models.grids")))?;
            HyperGrid::new(grid.axes().clone()).map_err(|e| Error::Config(format!("{family}: {e}")))?;
        }
        if self.validation.k < 2 {
            return Err(Error::Config("validation.k must be at least 2".into()));
        }
        check_fraction("grid_fraction", self.validation.grid_fraction, true)?;
        check_fraction("train_fraction", self.evaluation.train_fraction, false)?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, ignoring `output_dir`.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::HyperValue;

    const SAMPLE: &str = r#"
seed = 7
output_dir = "out"

[train]
path = "a.csv"
resample = { per_class_cap = 10, benign_to_malicious_ratio = 1.0 }

[test]
path = "b.csv"
label_column = "y"
fraction = 0.1

[features]
max_k = 4
curve_families = ["decision_tree"]

[models]
families = ["decision_tree", "svm"]

[models.grids.decision_tree]
max_depth = [2, "none"]
criterion = ["gini"]
"#;

    #[test]
    fn parse_and_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.train.label_column, "Label");
        assert_eq!(c.test.as_ref().unwrap().fraction, 0.1);
        assert_eq!(c.validation.k, 5);
        assert_eq!(c.validation.grid_fraction, 0.25);
        assert_eq!(c.evaluation.train_fraction, 0.7);
        assert_eq!(c.features.ranking_fraction, 0.1);
        let g = c.models.grid(Family::DecisionTree);
        assert_eq!(g.len(), 2);
        assert_eq!(g.cells()[1]["max_depth"], HyperValue::Text("none".into()));
        assert!(c.models.grid(Family::Svm).names().is_empty());
    }

    #[test]
    fn round_trip_keeps_digest() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        let mut moved = c.clone();
        moved.output_dir = Some("elsewhere".into());
        assert_eq!(moved.digest(), c.digest());
        let mut reseeded = c.clone();
        reseeded.seed = 8;
        assert_ne!(reseeded.digest(), c.digest());
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("seed = 1").is_err());
        let bad = [
            SAMPLE.replace("max_k = 4", "max_k = 0"),
            SAMPLE.replace("fraction = 0.1", "fraction = 1.5"),
            SAMPLE.replace("[models.grids.decision_tree]", "[models.grids.tree]"),
            SAMPLE.replace("criterion = [\"gini\"]", "criterion = []"),
            SAMPLE.replace("seed = 7", "seed = 7\nunknown = 1"),
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{text}");
        }
    }
}
