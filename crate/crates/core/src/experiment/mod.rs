//! End-to-end experiment: load, align, clean, resample, relabel, rank
//! features, pick k, tune, cross-validate, fit, evaluate and compare.
//!
//! A run directory looks like:
//!
//! ```text
//! config.toml              config copy (without output_dir)
//! reports/run.json         digest, stage seeds, chosen features and winners
//! reports/preprocess.json  clean reports and class distributions per stage
//! reports/features.json    ranking, curve means and the chosen k
//! reports/cv.json          cross-validation of each winner
//! reports/eval_<model>.json
//! reports/comparison.json
//! tables/grid_<model>.csv  every grid cell
//! tables/cv.csv
//! tables/comparison.csv
//! plots/importances.csv  plots/curve.csv  plots/timing.csv
//! plots/confusion_<model>_{train,test}.csv
//! models/<model>.json
//! ```

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    DataSource, EvaluationConfig, ExperimentConfig, FeatureConfig, ModelConfig, PreprocessConfig, ResampleConfig,
    ValidationConfig,
};

use crate::dataset::{align_schemas, class_distribution, load_csv, ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{compare_models_with, confusion_matrix, evaluate, ComparisonTable, EvaluationReport};
use crate::features::{accuracy_curve, choose_top_k, rank_features, FeatureRanking};
use crate::models::{fit, save_model, ClassifierSpec, ForestParams, HyperValue};
use crate::preprocess::{binarize_labels, clean, downsample, drop_class, holdout_split, CleanReport, ResamplePolicy};
use crate::seed;
use crate::tuning::{cross_validate, grid_search, CvResult};

const STAGES: [&str; 10] = [
    "load-train",
    "load-test",
    "resample-train",
    "resample-test",
    "rank",
    "curve",
    "grid",
    "cv",
    "holdout",
    "fit",
];

fn stage_seed(master: u64, stage: &str) -> u64 {
    seed::derive_tag(master, stage)
}

fn at<T>(stage: &'static str, input: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        input: input.into(),
        source: Box::new(e),
    })
}

struct RunDir {
    root: PathBuf,
}

impl RunDir {
    fn create(root: &Path) -> Result<Self> {
        for sub in ["reports", "tables", "plots", "models"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(|e| Error::io(p, e))?;
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn text(&self, rel: &str, text: &str) -> Result<()> {
        let p = self.path(rel);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    }

    fn json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(rel, &s)
    }

    fn csv(&self, rel: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let p = self.path(rel);
        fs::write(&p, buf).map_err(|e| Error::io(p, e))
    }
}

#[derive(Debug, Clone, Serialize)]
struct StageDistribution {
    stage: &'static str,
    records: usize,
    distribution: ClassDistribution,
}

#[derive(Debug, Clone, Default, Serialize)]
struct SidePreprocess {
    clean: Option<CleanReport>,
    distributions: Vec<StageDistribution>,
}

impl SidePreprocess {
    fn note(&mut self, stage: &'static str, d: &Dataset) {
        self.distributions.push(StageDistribution {
            stage,
            records: d.len(),
            distribution: class_distribution(d),
        });
    }
}

#[derive(Debug, Clone, Serialize)]
struct FeatureReport {
    ranking: Option<FeatureRanking>,
    curve_mean_by_k: Vec<f64>,
    tolerance: f64,
    k: usize,
    selected: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Winner {
    model: String,
    hyperparameters: BTreeMap<String, HyperValue>,
    seed: u64,
    cv: CvResult,
}

#[derive(Debug, Clone, Serialize)]
struct RunReport {
    config_digest: String,
    seed: u64,
    stage_seeds: BTreeMap<&'static str, u64>,
    n_train: usize,
    n_test: Option<usize>,
    selected_features: Vec<String>,
    winners: Vec<Winner>,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub config_digest: String,
    pub selected_features: Vec<String>,
    pub reports: Vec<EvaluationReport>,
    pub comparison: ComparisonTable,
}

/// Loads the configured datasets and runs the pipeline into
/// `cfg.output_dir` (default `run`).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
    run_experiment_in(cfg, &out)
}

pub fn run_experiment_in(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let load = |src: &DataSource, stage: &str| {
        at(
            "load",
            src.path.display().to_string(),
            load_csv(&src.path, &src.label_column, src.fraction, stage_seed(cfg.seed, stage)),
        )
    };
    let train = load(&cfg.train, "load-train")?;
    let test = cfg.test.as_ref().map(|t| load(t, "load-test")).transpose()?;
    run_datasets(cfg, train, test, out)
}

fn preprocess_side(
    cfg: &ExperimentConfig,
    d: Dataset,
    resample: Option<&ResampleConfig>,
    side: &'static str,
) -> Result<(Dataset, SidePreprocess)> {
    let p = &cfg.preprocess;
    let mut rep = SidePreprocess::default();
    rep.note("loaded", &d);
    let mut d = d;
    if p.clean {
        let (cleaned, report) = clean(&d);
        rep.clean = Some(report);
        d = cleaned;
        rep.note("cleaned", &d);
    }
    if !p.drop_classes.is_empty() {
        for label in &p.drop_classes {
            d = drop_class(&d, label);
        }
        rep.note("dropped", &d);
    }
    if let Some(r) = resample {
        let stream = if side == "train" { "resample-train" } else { "resample-test" };
        let mut policy = ResamplePolicy::new(&p.benign_label, stage_seed(cfg.seed, stream));
        policy.per_class_cap = r.per_class_cap;
        policy.target_benign_to_malicious_ratio = r.benign_to_malicious_ratio;
        d = at("resample", side, downsample(&d, &policy))?;
        rep.note("resampled", &d);
    }
    if p.binarize {
        d = binarize_labels(&d, &p.benign_label, &p.malicious_label);
        rep.note("binarized", &d);
    }
    if d.is_empty() {
        return Err(at::<()>("preprocess", side, Err(Error::Empty("no records left".into()))).unwrap_err());
    }
    Ok((d, rep))
}

/// Runs every stage after loading on in-memory datasets.
pub fn run_datasets(cfg: &ExperimentConfig, train: Dataset, test: Option<Dataset>, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let digest = cfg.digest();
    let dir = RunDir::create(out)?;
    let mut copy = cfg.clone();
    copy.output_dir = None;
    dir.text("config.toml", &copy.to_toml()?)?;
    let s = |stage: &str| stage_seed(cfg.seed, stage);

    // Identifier and timestamp columns go first: they are often text, and
    // cleaning would otherwise drop every row for their unparsed cells.
    let fc = &cfg.features;
    let train = at("exclude", "train", train.without_features(&fc.exclusions))?;
    let test = match test {
        Some(t) => {
            let present: Vec<&String> = fc.exclusions.iter().filter(|n| t.schema().index_of(n).is_some()).collect();
            Some(at("exclude", "test", t.without_features(&present))?)
        }
        None => None,
    };

    let (train, test) = match test {
        Some(t) => {
            let (a, b) = at("align", format!("{} / {}", train.provenance(), t.provenance()), align_schemas(&train, &t))?;
            (a, Some(b))
        }
        None => (train, None),
    };

    let (train, train_prep) = preprocess_side(cfg, train, cfg.train.resample.as_ref(), "train")?;
    let (test, test_prep) = match test {
        Some(t) => {
            let resample = cfg.test.as_ref().and_then(|c| c.resample.as_ref());
            let (d, r) = preprocess_side(cfg, t, resample, "test")?;
            (Some(d), Some(r))
        }
        None => (None, None),
    };
    let mut prep = BTreeMap::new();
    prep.insert("train", train_prep);
    if let Some(t) = test_prep {
        prep.insert("test", t);
    }
    dir.json("reports/preprocess.json", &prep)?;

    let feature_report = if fc.select {
        let forest = ForestParams {
            n_trees: fc.ranking_trees,
            ..ForestParams::default()
        };
        let ranking = at("rank", "train", rank_features(&train, &forest, &[] as &[&str], fc.ranking_fraction, s("rank")))?;
        dir.csv("plots/importances.csv", |b| ranking.write_csv(b))?;
        let max_k = fc.max_k.unwrap_or(ranking.len()).min(ranking.len());
        let curve_seed = s("curve");
        let specs: Vec<ClassifierSpec> = fc
            .curve_families
            .iter()
            .enumerate()
            .map(|(i, &f)| ClassifierSpec::default_for(f, seed::derive(curve_seed, &[i as u64])))
            .collect();
        let curve = at("curve", "train", accuracy_curve(&train, &ranking, &specs, max_k, curve_seed))?;
        dir.csv("plots/curve.csv", |b| curve.write_csv(b))?;
        let k = at("choose-k", "curve", choose_top_k(&curve, fc.tolerance))?;
        FeatureReport {
            selected: ranking.top(k),
            curve_mean_by_k: curve.mean_by_k(),
            ranking: Some(ranking),
            tolerance: fc.tolerance,
            k,
        }
    } else {
        let all = train.schema().feature_names().to_vec();
        FeatureReport {
            ranking: None,
            curve_mean_by_k: Vec::new(),
            tolerance: fc.tolerance,
            k: all.len(),
            selected: all,
        }
    };
    dir.json("reports/features.json", &feature_report)?;
    let selected = feature_report.selected.clone();
    let train = at("select", "train", train.select_features(&selected))?;
    let test = test.map(|t| at("select", "test", t.select_features(&selected))).transpose()?;

    let vc = &cfg.validation;
    let mut winners = Vec::new();
    for (i, &family) in cfg.models.families.iter().enumerate() {
        let grid = cfg.models.grid(family);
        let (best, table) = at(
            "grid",
            family.name(),
            grid_search(family, &grid, &train, vc.grid_fraction, vc.k, seed::derive(s("grid"), &[i as u64])),
        )?;
        dir.csv(&format!("tables/grid_{family}.csv"), |b| table.write_csv(b))?;
        winners.push(best);
    }

    let mut cv_rows = Vec::new();
    for best in &winners {
        let cv = at("cv", best.family.name(), cross_validate(best, &train, vc.k, s("cv")))?;
        cv_rows.push(Winner {
            model: best.family.to_string(),
            hyperparameters: best.hyperparameters.clone(),
            seed: best.seed,
            cv,
        });
    }
    dir.json("reports/cv.json", &cv_rows)?;
    dir.csv("tables/cv.csv", |b| write_cv_table(&cv_rows, vc.k, b))?;

    let (fit_part, holdout) = at(
        "holdout",
        "train",
        holdout_split(&train, cfg.evaluation.train_fraction, true, s("holdout")),
    )?;
    let mut reports = Vec::new();
    for best in &winners {
        let name = best.family.name();
        let model = at("fit", name, fit(best, &fit_part))?;
        save_model(&model, dir.path(&format!("models/{name}.json")))?;
        let report = at("evaluate", name, evaluate(&model, &holdout, test.as_ref()))?.with_digest(digest.clone());
        let (pred, _) = model.predict_batch(&holdout)?;
        let truth: Vec<&str> = holdout.records().iter().map(|r| r.label.as_str()).collect();
        let cm = confusion_matrix(&truth, &pred, &model.labels)?;
        dir.csv(&format!("plots/confusion_{name}_train.csv"), |b| cm.write_csv(b))?;
        if let Some(t) = &test {
            let (pred, _) = model.predict_batch(t)?;
            let truth: Vec<&str> = t.records().iter().map(|r| r.label.as_str()).collect();
            let cm = at("evaluate", name, confusion_matrix(&truth, &pred, &model.labels))?;
            dir.csv(&format!("plots/confusion_{name}_test.csv"), |b| cm.write_csv(b))?;
        }
        dir.json(&format!("reports/eval_{name}.json"), &report)?;
        reports.push(report);
    }

    let comparison = compare_models_with(&reports, cfg.evaluation.gap_flag);
    dir.json("reports/comparison.json", &comparison)?;
    dir.csv("tables/comparison.csv", |b| comparison.write_csv(b))?;
    dir.csv("plots/timing.csv", |b| write_timing(&reports, b))?;
    for row in comparison.flagged() {
        log::warn!(
            "{}: train-test accuracy gap {:.4} exceeds {}",
            row.model,
            row.accuracy_gap.unwrap_or(0.0),
            comparison.gap_flag_threshold
        );
    }

    dir.json(
        "reports/run.json",
        &RunReport {
            config_digest: digest.clone(),
            seed: cfg.seed,
            stage_seeds: STAGES.iter().map(|&st| (st, s(st))).collect(),
            n_train: train.len(),
            n_test: test.as_ref().map(Dataset::len),
            selected_features: selected.clone(),
            winners: cv_rows,
        },
    )?;

    Ok(RunSummary {
        output_dir: out.to_path_buf(),
        config_digest: digest,
        selected_features: selected,
        reports,
        comparison,
    })
}

fn write_cv_table(rows: &[Winner], k: usize, buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    let mut header = vec!["model".to_string()];
    header.extend((1..=k).map(|i| format!("fold_{i}")));
    header.extend(["mean".into(), "std".into()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.model.clone()];
        rec.extend(r.cv.folds.iter().map(f64::to_string));
        rec.extend([r.cv.mean.to_string(), r.cv.std.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<cv>", e))?;
    Ok(())
}

fn write_timing(reports: &[EvaluationReport], buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["model", "fit_s", "predict_s", "n_train", "n_test"])?;
    for r in reports {
        let t = &r.timing;
        w.write_record([
            r.model.clone(),
            t.fit_s.to_string(),
            t.predict_s.to_string(),
            t.n_train.to_string(),
            t.n_test.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<timing>", e))?;
    Ok(())
}
