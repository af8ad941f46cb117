//! Per-class caps, benign ratios and binarization on an imbalanced table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nidsgap::dataset::class_distribution;
use nidsgap::preprocess::{binarize_labels, downsample, drop_class, holdout_split, ResamplePolicy};
use nidsgap::{Dataset, Result};

fn imbalanced() -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    for (label, n) in [("BENIGN", 20_000), ("DDoS", 6_000), ("PortScan", 3_000), ("Bot", 400), ("Heartbleed", 7)] {
        for _ in 0..n {
            rows.push((vec![rng.random::<f64>(), rng.random::<f64>()], label.to_string()));
        }
    }
    Dataset::from_rows(&["a", "b"], "Label", rows)
}

fn main() -> Result<()> {
    let raw = imbalanced()?;
    println!("raw:\n{}", class_distribution(&raw));

    // Classes too small to learn from are removed outright.
    let d = drop_class(&raw, "Heartbleed");

    let capped = downsample(&d, &ResamplePolicy::new("BENIGN", 7).with_cap(2_000))?;
    println!("attack classes capped at 2000:\n{}", class_distribution(&capped));

    let balanced = downsample(&d, &ResamplePolicy::new("BENIGN", 7).with_cap(2_000).with_ratio(1.0))?;
    println!("cap plus 1:1 benign ratio:\n{}", class_distribution(&balanced));

    let binary = binarize_labels(&balanced, "BENIGN", "malicious");
    println!("binarized:\n{}", class_distribution(&binary));

    let (train, holdout) = holdout_split(&binary, 0.7, true, 3)?;
    println!("stratified 70/30: {} train, {} holdout", train.len(), holdout.len());
    Ok(())
}
