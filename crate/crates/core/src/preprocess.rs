//! Cleaning, deduplication, downsampling, relabelling and holdout splits.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FlowRecord};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub dropped_missing: usize,
    pub dropped_nonfinite: usize,
    pub dropped_duplicates: usize,
    pub remaining: usize,
}

impl CleanReport {
    pub fn input(&self) -> usize {
        self.dropped_missing + self.dropped_nonfinite + self.dropped_duplicates + self.remaining
    }
}

/// Drops rows with missing or non-finite values, then collapses exact
/// duplicates (features and label) to their first occurrence.
///
/// A row carrying both a missing and a non-finite value counts as missing.
pub fn clean(d: &Dataset) -> (Dataset, CleanReport) {
    let mut report = CleanReport::default();
    let mut seen: HashSet<DedupKey<'_>> = HashSet::with_capacity(d.len());
    let mut kept = Vec::with_capacity(d.len());
    for r in d.records() {
        if r.has_missing() {
            report.dropped_missing += 1;
        } else if r.has_non_finite() {
            report.dropped_nonfinite += 1;
        } else if !seen.insert(DedupKey(r)) {
            report.dropped_duplicates += 1;
        } else {
            kept.push(r.clone());
        }
    }
    report.remaining = kept.len();
    (d.derive(kept, "clean"), report)
}

/// Row identity for deduplication; `0.0` and `-0.0` are the same value.
struct DedupKey<'a>(&'a FlowRecord);

impl DedupKey<'_> {
    fn bits(v: f64) -> u64 {
        if v == 0.0 {
            0
        } else {
            v.to_bits()
        }
    }
}

impl PartialEq for DedupKey<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.0.label == other.0.label
            && self
                .0
                .values
                .iter()
                .zip(&other.0.values)
                .all(|(&a, &b)| Self::bits(a) == Self::bits(b))
    }
}

impl Eq for DedupKey<'_> {}

impl std::hash::Hash for DedupKey<'_> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.label.hash(state);
        for &v in &self.0.values {
            Self::bits(v).hash(state);
        }
    }
}

/// Majority-class downsampling policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplePolicy {
    /// Attack classes above this size are reduced to exactly this size.
    pub per_class_cap: Option<usize>,
    /// Benign records per non-benign record after resampling.
    pub target_benign_to_malicious_ratio: Option<f64>,
    pub benign_label: String,
    pub seed: u64,
}

impl ResamplePolicy {
    pub fn new(benign_label: impl Into<String>, seed: u64) -> Self {
        ResamplePolicy {
            per_class_cap: None,
            target_benign_to_malicious_ratio: None,
            benign_label: benign_label.into(),
            seed,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.per_class_cap = Some(cap);
        self
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.target_benign_to_malicious_ratio = Some(ratio);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.per_class_cap == Some(0) {
            return Err(Error::param("per-class cap must be positive"));
        }
        if let Some(r) = self.target_benign_to_malicious_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::param(format!("ratio {r} must be positive")));
            }
        }
        Ok(())
    }
}

/// Uniformly chooses `keep` of `pool` without replacement, preserving order.
fn sample_sorted(pool: &[usize], keep: usize, stream: u64) -> Vec<usize> {
    let mut rng = seed::rng(stream);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), keep)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Applies the attack-class cap, then shrinks the benign class to the
/// target ratio. Classes are never grown and survivors keep their order.
pub fn downsample(d: &Dataset, p: &ResamplePolicy) -> Result<Dataset> {
    p.validate()?;
    let groups = d.indices_by_label();
    let mut survivors: Vec<(bool, Vec<usize>)> = Vec::with_capacity(groups.len());
    for (pos, (label, idx)) in groups.into_iter().enumerate() {
        let benign = label == p.benign_label;
        let idx = match p.per_class_cap {
            Some(cap) if !benign && idx.len() > cap => sample_sorted(&idx, cap, seed::derive(p.seed, &[pos as u64])),
            _ => idx,
        };
        survivors.push((benign, idx));
    }

    if let Some(ratio) = p.target_benign_to_malicious_ratio {
        let malicious: usize = survivors.iter().filter(|(b, _)| !b).map(|(_, v)| v.len()).sum();
        let benign_slot = survivors
            .iter()
            .position(|(b, _)| *b)
            .ok_or_else(|| Error::UnknownLabel(p.benign_label.clone()))?;
        let benign = survivors[benign_slot].1.len();
        if malicious == 0 {
            return Err(Error::Empty("no non-benign records to balance against".into()));
        }
        let target = (ratio * malicious as f64).round() as usize;
        if target > benign {
            return Err(Error::UnattainableRatio {
                requested: ratio,
                achievable: benign as f64 / malicious as f64,
            });
        }
        let pool = std::mem::take(&mut survivors[benign_slot].1);
        survivors[benign_slot].1 = sample_sorted(&pool, target, seed::derive_tag(p.seed, "benign-ratio"));
    }

    let mut keep: Vec<usize> = survivors.into_iter().flat_map(|(_, v)| v).collect();
    keep.sort_unstable();
    Ok(d.derive_indices(&keep, "downsample"))
}

/// Replaces every label other than `benign_label` with `merged_label`.
pub fn binarize_labels(d: &Dataset, benign_label: &str, merged_label: &str) -> Dataset {
    let records: Vec<FlowRecord> = d
        .records()
        .iter()
        .map(|r| {
            let label = if r.label == benign_label { benign_label } else { merged_label };
            FlowRecord::new(r.values.clone(), label)
        })
        .collect();
    let out = d.derive(records, &format!("binarize -> {benign_label}/{merged_label}"));
    if out.labels().len() < 2 && !out.is_empty() {
        log::warn!("binarized dataset has a single class {:?}", out.labels());
    }
    out
}

pub fn drop_class(d: &Dataset, label: &str) -> Dataset {
    let records = d.records().iter().filter(|r| r.label != label).cloned().collect();
    d.derive(records, &format!("drop {label}"))
}

/// Splits into disjoint (train, rest) parts; both keep input order.
///
/// Stratified splits round `train_fraction * n` per class.
pub fn holdout_split(d: &Dataset, train_fraction: f64, stratified: bool, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    if d.len() < 2 {
        return Err(Error::Empty(format!("holdout split needs 2 records, have {}", d.len())));
    }
    let groups = if stratified {
        d.indices_by_label()
    } else {
        vec![(String::new(), (0..d.len()).collect())]
    };
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for (pos, (label, mut idx)) in groups.into_iter().enumerate() {
        if stratified && idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: idx.len(),
                needed: 2,
            });
        }
        let take = (train_fraction * idx.len() as f64).round() as usize;
        idx.shuffle(&mut seed::rng(seed::derive(seed, &[pos as u64])));
        train.extend_from_slice(&idx[..take]);
        rest.extend_from_slice(&idx[take..]);
    }
    if train.is_empty() || rest.is_empty() {
        return Err(Error::Empty("holdout split left one side empty".into()));
    }
    train.sort_unstable();
    rest.sort_unstable();
    Ok((d.derive_indices(&train, "holdout train"), d.derive_indices(&rest, "holdout rest")))
}
