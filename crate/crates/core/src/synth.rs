//! Synthetic two-class flow data with controllable drift between a training
//! set and a later test set.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FlowRecord, Schema};
use crate::error::{Error, Result};
use crate::seed;

pub const BENIGN: &str = "benign";
pub const MALICIOUS: &str = "malicious";

/// Per-class Gaussian: one mean and one standard deviation per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCluster {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Transformation applied to the test distribution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Drift {
    /// Offset added to every test record, per feature. Empty means none.
    pub mean_shift: Vec<f64>,
    /// Benign fraction of the test set, if different from training.
    pub prior_shift: Option<f64>,
    /// Rotation (radians) of the first two features.
    pub rotation: Option<f64>,
}

impl Drift {
    pub fn none() -> Self {
        Drift::default()
    }

    /// Same offset on every feature.
    pub fn uniform_shift(n_features: usize, offset: f64) -> Self {
        Drift {
            mean_shift: vec![offset; n_features],
            ..Drift::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_records: usize,
    pub n_features: usize,
    /// Fraction of benign records.
    pub class_balance: f64,
    pub benign: ClassCluster,
    pub malicious: ClassCluster,
    #[serde(default)]
    pub drift: Drift,
    pub seed: u64,
}

impl SynthConfig {
    /// Balanced classes with unit scales; the malicious mean sits at
    /// `separation` on every feature, the benign mean at the origin.
    pub fn separated(n_records: usize, n_features: usize, separation: f64, seed: u64) -> Self {
        SynthConfig {
            n_records,
            n_features,
            class_balance: 0.5,
            benign: ClassCluster {
                mean: vec![0.0; n_features],
                scale: vec![1.0; n_features],
            },
            malicious: ClassCluster {
                mean: vec![separation; n_features],
                scale: vec![1.0; n_features],
            },
            drift: Drift::none(),
            seed,
        }
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_records < 2 {
            return Err(Error::param("n_records must be at least 2"));
        }
        if self.n_features == 0 {
            return Err(Error::param("n_features must be positive"));
        }
        let balance_ok = |b: f64| b > 0.0 && b < 1.0;
        if !balance_ok(self.class_balance) {
            return Err(Error::param(format!("class balance {} outside (0, 1)", self.class_balance)));
        }
        for (name, c) in [(BENIGN, &self.benign), (MALICIOUS, &self.malicious)] {
            if c.mean.len() != self.n_features || c.scale.len() != self.n_features {
                return Err(Error::Dimension {
                    expected: self.n_features,
                    found: c.mean.len().min(c.scale.len()),
                });
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::param(format!("{name} mean must be finite")));
            }
            if let Some(s) = c.scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                return Err(Error::param(format!("{name} scale {s} must be positive")));
            }
        }
        let d = &self.drift;
        if !d.mean_shift.is_empty() && d.mean_shift.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                found: d.mean_shift.len(),
            });
        }
        if let Some(b) = d.prior_shift {
            if !balance_ok(b) {
                return Err(Error::param(format!("prior shift {b} outside (0, 1)")));
            }
        }
        if d.rotation.is_some() && self.n_features < 2 {
            return Err(Error::param("rotation needs at least two features"));
        }
        Ok(())
    }

    pub fn schema(&self) -> Schema {
        let names = (1..=self.n_features).map(|i| format!("f{i}")).collect();
        Schema::new(names, "label").expect("generated names are distinct")
    }
}

/// Whether record `i` of `n` is benign when `n_benign` of them are: the two
/// classes are interleaved evenly through the file.
fn is_benign(i: usize, n: usize, n_benign: usize) -> bool {
    (i + 1) * n_benign / n > i * n_benign / n
}

fn draw(cfg: &SynthConfig, balance: f64, stream: u64, drift: Option<&Drift>) -> Vec<FlowRecord> {
    let n = cfg.n_records;
    let n_benign = (balance * n as f64).round() as usize;
    (0..n)
        .map(|i| {
            let benign = is_benign(i, n, n_benign);
            let c = if benign { &cfg.benign } else { &cfg.malicious };
            let mut rng = seed::rng(seed::derive(stream, &[i as u64]));
            let mut v: Vec<f64> = c
                .mean
                .iter()
                .zip(&c.scale)
                .map(|(m, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + s * z
                })
                .collect();
            if let Some(d) = drift {
                if let Some(theta) = d.rotation {
                    let (sin, cos) = theta.sin_cos();
                    let (a, b) = (v[0], v[1]);
                    v[0] = cos * a - sin * b;
                    v[1] = sin * a + cos * b;
                }
                for (x, off) in v.iter_mut().zip(&d.mean_shift) {
                    *x += off;
                }
            }
            FlowRecord::new(v, if benign { BENIGN } else { MALICIOUS })
        })
        .collect()
}

/// Draws a training set and a drift-transformed test set of `n_records`
/// each. Benign count is `round(balance * n_records)`.
pub fn generate_pair(cfg: &SynthConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let train = draw(cfg, cfg.class_balance, seed::derive_tag(cfg.seed, "synth-train"), None);
    let test_balance = cfg.drift.prior_shift.unwrap_or(cfg.class_balance);
    let test = draw(cfg, test_balance, seed::derive_tag(cfg.seed, "synth-test"), Some(&cfg.drift));
    Ok((
        Dataset::new(cfg.schema(), train, format!("synthetic train (seed {})", cfg.seed))?,
        Dataset::new(cfg.schema(), test, format!("synthetic test (seed {})", cfg.seed))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_class_counts() {
        let mut cfg = SynthConfig::separated(1001, 3, 2.0, 5);
        cfg.class_balance = 0.3;
        cfg.drift.prior_shift = Some(0.8);
        let (train, test) = generate_pair(&cfg).unwrap();
        assert_eq!(train.label_counts()[BENIGN], 300);
        assert_eq!(train.label_counts()[MALICIOUS], 701);
        assert_eq!(test.label_counts()[BENIGN], 801);
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::separated(500, 4, 1.0, 9);
        assert_eq!(generate_pair(&cfg).unwrap(), generate_pair(&cfg).unwrap());
        let other = SynthConfig::separated(500, 4, 1.0, 10);
        assert_ne!(generate_pair(&cfg).unwrap().0, generate_pair(&other).unwrap().0);
    }

    #[test]
    fn invalid_configs() {
        let good = SynthConfig::separated(100, 2, 1.0, 0);
        let mut c = good.clone();
        c.benign.scale[1] = 0.0;
        assert!(generate_pair(&c).is_err());
        let mut c = good.clone();
        c.class_balance = 1.0;
        assert!(generate_pair(&c).is_err());
        let mut c = good.clone();
        c.n_records = 1;
        assert!(generate_pair(&c).is_err());
        let c = good.with_drift(Drift::uniform_shift(3, 1.0));
        assert!(generate_pair(&c).is_err());
    }

    fn mean_and_se(d: &Dataset, j: usize) -> (f64, f64) {
        let n = d.len() as f64;
        let m = d.records().iter().map(|r| r.values[j]).sum::<f64>() / n;
        let var = d.records().iter().map(|r| (r.values[j] - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn zero_drift_means_agree() {
        let cfg = SynthConfig::separated(4000, 5, 1.5, 21);
        let (train, test) = generate_pair(&cfg).unwrap();
        for j in 0..5 {
            let (m1, s1) = mean_and_se(&train, j);
            let (m2, s2) = mean_and_se(&test, j);
            assert!((m1 - m2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(), "feature {j}");
        }
    }

    #[test]
    fn shift_and_rotation_apply() {
        let base = SynthConfig::separated(2000, 2, 0.0, 4);
        let (_, shifted) = generate_pair(&base.clone().with_drift(Drift::uniform_shift(2, 10.0))).unwrap();
        let (m, _) = mean_and_se(&shifted, 0);
        assert!((m - 10.0).abs() < 0.2);

        let mut cfg = SynthConfig::separated(2000, 2, 0.0, 4);
        cfg.benign.mean = vec![3.0, 0.0];
        cfg.malicious.mean = vec![3.0, 0.0];
        cfg.drift.rotation = Some(std::f64::consts::FRAC_PI_2);
        let (_, rotated) = generate_pair(&cfg).unwrap();
        let (m0, _) = mean_and_se(&rotated, 0);
        let (m1, _) = mean_and_se(&rotated, 1);
        assert!(m0.abs() < 0.2 && (m1 - 3.0).abs() < 0.2);
    }
}
