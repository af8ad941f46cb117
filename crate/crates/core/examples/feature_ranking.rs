//! Rank features with a random forest, trace accuracy against the number of
//! top features kept, and pick the smallest adequate k.

use std::io;

use nidsgap::features::{accuracy_curve, choose_top_k, rank_features};
use nidsgap::models::ForestParams;
use nidsgap::synth::{generate_pair, ClassCluster, SynthConfig};
use nidsgap::{ClassifierSpec, Family, Result};

fn main() -> Result<()> {
    // Ten features; only f3 and f7 separate the classes.
    let mut cfg = SynthConfig::separated(8_000, 10, 0.0, 42);
    let mut mean = vec![0.0; 10];
    mean[2] = 2.5;
    mean[6] = -2.0;
    cfg.malicious = ClassCluster { mean, scale: vec![1.0; 10] };
    let (data, _) = generate_pair(&cfg)?;

    let forest = ForestParams { n_trees: 50, ..ForestParams::default() };
    // "f10" stands in for an identifier column that must never be ranked.
    let ranking = rank_features(&data, &forest, &["f10"], 0.5, 1)?;
    println!("importance ranking:");
    ranking.write_csv(io::stdout())?;

    let specs = [
        ClassifierSpec::default_for(Family::DecisionTree, 1),
        ClassifierSpec::default_for(Family::NaiveBayes, 1),
    ];
    let curve = accuracy_curve(&data, &ranking, &specs, 6, 2)?;
    println!("\naccuracy by k:");
    curve.write_csv(io::stdout())?;

    let k = choose_top_k(&curve, 0.002)?;
    println!("\nkeep top {k}: {:?}", ranking.top(k));
    Ok(())
}
