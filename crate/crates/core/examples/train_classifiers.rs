//! Fit all six classifier families on one split and print their holdout
//! metrics side by side.

use nidsgap::evaluation::{confusion_matrix, metrics};
use nidsgap::models::fit;
use nidsgap::preprocess::holdout_split;
use nidsgap::synth::{generate_pair, SynthConfig, BENIGN, MALICIOUS};
use nidsgap::{ClassifierSpec, Family, Result};

fn main() -> Result<()> {
    let (data, _) = generate_pair(&SynthConfig::separated(6_000, 6, 1.2, 3))?;
    let (train, holdout) = holdout_split(&data, 0.7, true, 4)?;
    let truth: Vec<&str> = holdout.records().iter().map(|r| r.label.as_str()).collect();
    let order = [BENIGN.to_string(), MALICIOUS.to_string()];

    println!("{:<14} {:>8} {:>9} {:>8} {:>8} {:>9}", "model", "accuracy", "precision", "recall", "f1", "fit ms");
    for family in Family::ALL {
        let spec = ClassifierSpec::default_for(family, 5);
        let model = fit(&spec, &train)?;
        let (predicted, _) = model.predict_batch(&holdout)?;
        let cm = confusion_matrix(&truth, &predicted, &order)?;
        let m = metrics(&cm, MALICIOUS)?;
        println!(
            "{:<14} {:>8.4} {:>9.4} {:>8.4} {:>8.4} {:>9.1}",
            family.name(),
            m.accuracy,
            m.class.precision,
            m.class.recall,
            m.class.f1,
            model.fit_time().as_secs_f64() * 1e3
        );
    }

    // Hyperparameters are set by name and validated when the model is fit.
    let shallow = ClassifierSpec::default_for(Family::DecisionTree, 5).with("max_depth", 2)?;
    println!("\n{}", shallow.describe());
    Ok(())
}
