//! Large-scale run: train on CIC-IDS2017, test on CSE-CIC-IDS2018.
//!
//! ```text
//! cargo run --release --example cic_reproduction -- cic2017.csv cse2018.csv [out-dir]
//! ```
//!
//! Each argument is one CSV holding the concatenated daily files of a
//! capture. The 2018 capture is sampled at 10% on load. The two releases
//! spell their columns differently ("Tot Fwd Pkts" vs "Total Fwd Packets")
//! and label benign traffic "Benign" vs "BENIGN", so both are harmonized
//! before the pipeline runs. Expect tens of minutes and several GB of RAM.

use std::collections::HashSet;
use std::env;
use std::path::PathBuf;
use std::process::ExitCode;

use nidsgap::dataset::{class_distribution, load_csv};
use nidsgap::experiment::{run_datasets, DataSource, ExperimentConfig, ResampleConfig};
use nidsgap::tuning::HyperGrid;
use nidsgap::{Dataset, FlowRecord, Result, Schema};

const IDENTIFIERS: [&str; 6] = ["Flow ID", "Source IP", "Src IP", "Destination IP", "Dst IP", "Timestamp"];

fn expand(token: &str) -> &str {
    match token {
        "tot" => "total",
        "pkt" | "pkts" | "packet" => "packets",
        "byts" | "byte" => "bytes",
        "len" => "length",
        "cnt" => "count",
        "seg" => "segment",
        "avg" => "average",
        "var" => "variance",
        "blk" | "b" => "bulk",
        "forward" => "fwd",
        "backward" => "bwd",
        "dst" => "destination",
        "src" => "source",
        other => other,
    }
}

/// Spelling-independent column key: lowercase tokens, abbreviations
/// expanded, filler words dropped, sorted.
fn canonical(name: &str) -> String {
    let lower = name.to_lowercase().replace("totlen", "total len");
    let mut tokens: Vec<&str> = lower
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty() && *t != "of")
        .map(expand)
        .collect();
    tokens.sort_unstable();
    tokens.join("_")
}

/// Renames columns to their canonical key, dropping later duplicates, and
/// maps the benign label to `benign`.
fn harmonize(d: &Dataset, benign: &str) -> Result<Dataset> {
    let mut seen = HashSet::new();
    let keep: Vec<(usize, String)> = d
        .schema()
        .feature_names()
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            let key = if IDENTIFIERS.contains(&n.as_str()) { n.clone() } else { canonical(n) };
            seen.insert(key.clone()).then_some((i, key))
        })
        .collect();
    let schema = Schema::new(keep.iter().map(|(_, k)| k.clone()).collect(), "Label")?;
    let records = d
        .records()
        .iter()
        .map(|r| {
            let label = if r.label == benign { "BENIGN" } else { r.label.as_str() };
            FlowRecord::new(keep.iter().map(|&(i, _)| r.values[i]).collect(), label)
        })
        .collect();
    Dataset::new(schema, records, d.provenance())
}

fn run(train_path: &str, test_path: &str, out: PathBuf) -> Result<()> {
    let train = harmonize(&load_csv(train_path, "Label", 1.0, 1)?, "BENIGN")?;
    let test = harmonize(&load_csv(test_path, "Label", 0.1, 2)?, "Benign")?;
    println!("train:\n{}\ntest:\n{}", class_distribution(&train), class_distribution(&test));

    let mut cfg = ExperimentConfig::new(DataSource::new(train_path, "Label"), Some(DataSource::new(test_path, "Label")), 2017);
    cfg.train.resample = Some(ResampleConfig {
        per_class_cap: Some(100_000),
        benign_to_malicious_ratio: Some(1.0),
    });
    // Every malicious record of the later capture is kept.
    cfg.test.as_mut().unwrap().resample = Some(ResampleConfig {
        per_class_cap: None,
        benign_to_malicious_ratio: Some(1.0),
    });
    let present: HashSet<&str> = train.schema().feature_names().iter().map(String::as_str).collect();
    cfg.features.exclusions = IDENTIFIERS.iter().filter(|n| present.contains(*n)).map(|n| n.to_string()).collect();
    cfg.models.grids.insert(
        "decision_tree".into(),
        HyperGrid::default().axis("max_depth", [10, 20, 30])?.axis("criterion", ["gini", "entropy"])?,
    );
    cfg.models.grids.insert("random_forest".into(), HyperGrid::default().axis("n_trees", [50, 100])?);

    let summary = run_datasets(&cfg, train, Some(test), &out)?;
    println!("selected features: {:?}", summary.selected_features);
    for row in &summary.comparison.rows {
        println!(
            "{:<14} train {:.4}  test {:.4}  gap {:+.4}",
            row.model,
            row.train_accuracy,
            row.test_accuracy.unwrap_or(f64::NAN),
            row.accuracy_gap.unwrap_or(f64::NAN)
        );
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = env::args().skip(1).collect();
    let [train, test, rest @ ..] = args.as_slice() else {
        eprintln!("usage: cic_reproduction <cic2017.csv> <cse2018.csv> [out-dir]");
        return ExitCode::from(1);
    };
    let out = rest.first().map_or_else(|| PathBuf::from("runs/cic"), PathBuf::from);
    match run(train, test, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
