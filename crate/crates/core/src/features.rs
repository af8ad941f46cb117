//! Feature selection: random-forest impurity ranking, per-k accuracy
//! curves over the ranked features, and the choice of k.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, ClassifierSpec, ForestParams, RandomForest};
use crate::preprocess::holdout_split;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub importance: f64,
}

/// Features by descending importance (ties keep schema order).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub features: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn top(&self, k: usize) -> Vec<String> {
        self.features.iter().take(k).map(|f| f.feature.clone()).collect()
    }

    pub fn position(&self, feature: &str) -> Option<usize> {
        self.features.iter().position(|f| f.feature == feature)
    }

    /// `feature,importance`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["feature", "importance"])?;
        for f in &self.features {
            w.write_record([f.feature.as_str(), &f.importance.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<importances>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<FeatureRanking> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut features = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let importance = row
                .get(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::param("importance column must be numeric"))?;
            features.push(RankedFeature {
                feature: row.get(0).unwrap_or_default().trim().to_string(),
                importance,
            });
        }
        Ok(FeatureRanking { features })
    }
}

/// Default share of the training data used to fit the ranking forest.
pub const DEFAULT_RANKING_FRACTION: f64 = 0.1;

/// Keeps each record by a seeded Bernoulli draw; `fraction >= 1` keeps all.
pub(crate) fn bernoulli_subsample(d: &Dataset, fraction: f64, stream: u64, step: &str) -> Dataset {
    if fraction >= 1.0 {
        return d.clone();
    }
    let keep: Vec<usize> = (0..d.len())
        .filter(|&i| seed::unit(stream, i as u64) < fraction)
        .collect();
    d.derive_indices(&keep, step)
}

/// Ranks features by mean decrease in impurity of a random forest trained on
/// a seeded `fraction` of `d`, after removing `exclusions`.
pub fn rank_features<S: AsRef<str>>(
    d: &Dataset,
    forest: &ForestParams,
    exclusions: &[S],
    fraction: f64,
    seed: u64,
) -> Result<FeatureRanking> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("ranking fraction {fraction} outside (0, 1]")));
    }
    let reduced = d.without_features(exclusions)?;
    if reduced.schema().dim() == 0 {
        return Err(Error::param("every feature is excluded"));
    }
    let sample = bernoulli_subsample(&reduced, fraction, seed::derive_tag(seed, "rank-sample"), "ranking sample");
    if sample.is_empty() {
        return Err(Error::Empty("ranking sample".into()));
    }
    if sample.records().iter().any(|r| r.has_missing() || r.has_non_finite()) {
        return Err(Error::param("ranking needs a cleaned dataset"));
    }
    let (x, y, labels) = models::design(&sample);
    if labels.len() < 2 {
        return Err(Error::SingleClass(labels[0].clone()));
    }
    let rf = RandomForest::fit(&x, &y, labels.len(), forest, seed::derive_tag(seed, "rank-forest"));
    let mut features: Vec<RankedFeature> = reduced
        .schema()
        .feature_names()
        .iter()
        .zip(rf.feature_importances())
        .map(|(name, importance)| RankedFeature {
            feature: name.clone(),
            importance,
        })
        .collect();
    features.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    Ok(FeatureRanking { features })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCurve {
    pub model: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub models: Vec<ModelCurve>,
}

impl AccuracyCurve {
    /// Mean accuracy across models for k = 1, 2, ...
    pub fn mean_by_k(&self) -> Vec<f64> {
        let len = self.models.iter().map(|m| m.points.len()).min().unwrap_or(0);
        (0..len)
            .map(|i| self.models.iter().map(|m| m.points[i].accuracy).sum::<f64>() / self.models.len() as f64)
            .collect()
    }

    /// `model,k,accuracy`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["model", "k", "accuracy"])?;
        for m in &self.models {
            for p in &m.points {
                w.write_record([m.model.as_str(), &p.k.to_string(), &p.accuracy.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<curve>", e))?;
        Ok(())
    }
}

pub(crate) fn holdout_accuracy(spec: &ClassifierSpec, train: &Dataset, test: &Dataset) -> Result<f64> {
    let model = models::fit(spec, train)?;
    let (pred, _) = model.predict_batch(test)?;
    let correct = pred.iter().zip(test.records()).filter(|(p, r)| **p == r.label).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Holdout accuracy of each model on the top-1 .. top-`max_k` features.
///
/// One stratified 70/30 split is shared by every point; each model keeps its
/// own seed across k, so a point depends only on (spec, k).
pub fn accuracy_curve(
    d: &Dataset,
    ranking: &FeatureRanking,
    model_specs: &[ClassifierSpec],
    max_k: usize,
    split_seed: u64,
) -> Result<AccuracyCurve> {
    if max_k == 0 || max_k > ranking.len() {
        return Err(Error::param(format!("max_k {max_k} must be in 1..={}", ranking.len())));
    }
    let (train, test) = holdout_split(d, 0.7, true, split_seed)?;
    let subsets: Vec<(Dataset, Dataset)> = (1..=max_k)
        .map(|k| {
            let names = ranking.top(k);
            Ok((train.select_features(&names)?, test.select_features(&names)?))
        })
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..model_specs.len())
        .flat_map(|m| (0..max_k).map(move |k| (m, k)))
        .collect();
    let acc: Vec<f64> = tasks
        .par_iter()
        .map(|&(m, k)| holdout_accuracy(&model_specs[m], &subsets[k].0, &subsets[k].1))
        .collect::<Result<_>>()?;
    let models = model_specs
        .iter()
        .enumerate()
        .map(|(m, spec)| ModelCurve {
            model: spec.family.to_string(),
            points: (0..max_k)
                .map(|k| CurvePoint {
                    k: k + 1,
                    accuracy: acc[m * max_k + k],
                })
                .collect(),
        })
        .collect();
    Ok(AccuracyCurve { models })
}

/// Smallest k (1-based) whose mean accuracy is within `tolerance` of the best.
pub fn choose_top_k_from_means(means: &[f64], tolerance: f64) -> Result<usize> {
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    means
        .iter()
        .position(|&m| m >= best - tolerance - 1e-12)
        .map(|i| i + 1)
        .ok_or_else(|| Error::Empty("accuracy curve".into()))
}

pub fn choose_top_k(curve: &AccuracyCurve, tolerance: f64) -> Result<usize> {
    choose_top_k_from_means(&curve.mean_by_k(), tolerance)
}
