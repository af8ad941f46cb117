//! Confusion matrices, accuracy/precision/recall/F1, timing, and the
//! train-versus-test gap report.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;

/// `counts[i][j]` = records of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// One-vs-rest counts for a designated positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `TP / (TP + FP)`, 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`, 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * (p * r) / (p + r)
        }
    }
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Collapses to positive-versus-rest counts.
    pub fn binary(&self, positive: &str) -> Result<BinaryCounts> {
        let p = self.index(positive)?;
        let total = self.total();
        let tp = self.counts[p][p];
        let fn_ = self.counts[p].iter().sum::<u64>() - tp;
        let fp = self.counts.iter().map(|row| row[p]).sum::<u64>() - tp;
        Ok(BinaryCounts {
            tp,
            tn: total - tp - fn_ - fp,
            fp,
            fn_,
        })
    }

    /// Rows are true classes; the header names the predicted classes.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(std::iter::once("true\\predicted").chain(self.labels.iter().map(String::as_str)))?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<confusion>", e))?;
        Ok(())
    }
}

pub fn confusion_matrix<S: AsRef<str>, T: AsRef<str>>(
    truth: &[S],
    predicted: &[T],
    label_order: &[String],
) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(label_order.to_vec());
    for (t, p) in truth.iter().zip(predicted) {
        let i = cm.index(t.as_ref())?;
        let j = cm.index(p.as_ref())?;
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One row of the metrics table: `positive` treated as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    #[serde(flatten)]
    pub class: ClassMetrics,
}

pub fn metrics(cm: &ConfusionMatrix, positive: &str) -> Result<MetricsRow> {
    if cm.total() == 0 {
        return Err(Error::Empty("confusion matrix".into()));
    }
    let b = cm.binary(positive)?;
    Ok(MetricsRow {
        accuracy: b.accuracy(),
        class: ClassMetrics {
            class: positive.to_string(),
            precision: b.precision(),
            recall: b.recall(),
            f1: b.f1(),
        },
    })
}

/// Overall accuracy plus one row per class, each class positive in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

pub fn metrics_report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let per_class = cm
        .labels
        .iter()
        .map(|l| metrics(cm, l).map(|r| r.class))
        .collect::<Result<_>>()?;
    Ok(MetricsReport {
        accuracy: cm.accuracy(),
        per_class,
    })
}

/// Metrics and confusion counts for one side (train holdout or test).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<u64>>,
}

impl SideReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        let m = metrics_report(cm)?;
        Ok(SideReport {
            accuracy: m.accuracy,
            per_class: m.per_class,
            confusion: cm.counts.clone(),
        })
    }

    pub fn f1(&self, class: &str) -> Option<f64> {
        self.per_class.iter().find(|c| c.class == class).map(|c| c.f1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGap {
    pub class: String,
    pub f1: f64,
}

/// Train-side minus test-side metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBlock {
    pub accuracy: f64,
    pub f1_per_class: Vec<ClassGap>,
}

impl GapBlock {
    pub fn between(train: &SideReport, test: &SideReport) -> GapBlock {
        GapBlock {
            accuracy: train.accuracy - test.accuracy,
            f1_per_class: train
                .per_class
                .iter()
                .map(|c| ClassGap {
                    class: c.class.clone(),
                    f1: c.f1 - test.f1(&c.class).unwrap_or(0.0),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub fit_s: f64,
    pub predict_s: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub environment: String,
}

pub fn environment_note() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{}, {} threads", std::env::consts::OS, std::env::consts::ARCH, threads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub train: SideReport,
    pub test: Option<SideReport>,
    pub gap: Option<GapBlock>,
    pub timing: TimingReport,
    pub seed: u64,
    pub config_digest: String,
}

impl EvaluationReport {
    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    /// Test-side accuracy when present, else train-side.
    pub fn headline_accuracy(&self) -> f64 {
        self.test.as_ref().unwrap_or(&self.train).accuracy
    }
}

fn side(model: &TrainedModel, d: &Dataset) -> Result<(SideReport, f64)> {
    let (pred, elapsed) = model.predict_batch(d)?;
    let truth: Vec<&str> = d.records().iter().map(|r| r.label.as_str()).collect();
    let cm = confusion_matrix(&truth, &pred, &model.labels)?;
    Ok((SideReport::from_confusion(&cm)?, elapsed.as_secs_f64()))
}

/// Scores `model` on the training-side holdout and, when given, on a later
/// test dataset. Prediction time is taken from the test-side batch.
pub fn evaluate(model: &TrainedModel, train_holdout: &Dataset, test: Option<&Dataset>) -> Result<EvaluationReport> {
    let (train, holdout_s) = side(model, train_holdout)?;
    let (test, predict_s, n_test) = match test {
        Some(t) => {
            let (r, s) = side(model, t)?;
            (Some(r), s, t.len())
        }
        None => (None, holdout_s, train_holdout.len()),
    };
    let gap = test.as_ref().map(|t| GapBlock::between(&train, t));
    Ok(EvaluationReport {
        model: model.spec.family.to_string(),
        train,
        test,
        gap,
        timing: TimingReport {
            fit_s: model.fit_time().as_secs_f64(),
            predict_s,
            n_train: model.n_train,
            n_test,
            environment: environment_note(),
        },
        seed: model.spec.seed,
        config_digest: String::new(),
    })
}

pub const DEFAULT_GAP_FLAG: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub accuracy_gap: Option<f64>,
    pub f1_gap: Vec<ClassGap>,
    pub fit_s: f64,
    pub predict_s: f64,
    /// Accuracy gap above the flag threshold.
    pub overfit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub gap_flag_threshold: f64,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_models(reports: &[EvaluationReport]) -> ComparisonTable {
    compare_models_with(reports, DEFAULT_GAP_FLAG)
}

/// Rows sorted by headline accuracy, descending; ties by model name.
pub fn compare_models_with(reports: &[EvaluationReport], gap_flag_threshold: f64) -> ComparisonTable {
    let mut order: Vec<&EvaluationReport> = reports.iter().collect();
    order.sort_by(|a, b| {
        b.headline_accuracy()
            .total_cmp(&a.headline_accuracy())
            .then_with(|| a.model.cmp(&b.model))
    });
    let rows = order
        .into_iter()
        .map(|r| {
            let gap = r.gap.as_ref();
            ComparisonRow {
                model: r.model.clone(),
                train_accuracy: r.train.accuracy,
                test_accuracy: r.test.as_ref().map(|t| t.accuracy),
                accuracy_gap: gap.map(|g| g.accuracy),
                f1_gap: gap.map(|g| g.f1_per_class.clone()).unwrap_or_default(),
                fit_s: r.timing.fit_s,
                predict_s: r.timing.predict_s,
                overfit: gap.is_some_and(|g| g.accuracy > gap_flag_threshold),
            }
        })
        .collect();
    ComparisonTable {
        gap_flag_threshold,
        rows,
    }
}

impl ComparisonTable {
    pub fn flagged(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.overfit)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let classes: Vec<String> = self
            .rows
            .iter()
            .find(|r| !r.f1_gap.is_empty())
            .map(|r| r.f1_gap.iter().map(|g| g.class.clone()).collect())
            .unwrap_or_default();
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["model".to_string(), "train_accuracy".into(), "test_accuracy".into(), "accuracy_gap".into()];
        header.extend(classes.iter().map(|c| format!("f1_gap_{c}")));
        header.extend(["fit_s".into(), "predict_s".into(), "overfit".into()]);
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.model.clone(), r.train_accuracy.to_string(), opt(r.test_accuracy), opt(r.accuracy_gap)];
            for c in &classes {
                rec.push(opt(r.f1_gap.iter().find(|g| &g.class == c).map(|g| g.f1)));
            }
            rec.extend([r.fit_s.to_string(), r.predict_s.to_string(), r.overfit.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<comparison>", e))?;
        Ok(())
    }
}
