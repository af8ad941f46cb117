//! Save a fitted model as JSON, reload it and check the predictions agree.

use nidsgap::models::{fit, load_model, save_model};
use nidsgap::synth::{generate_pair, SynthConfig};
use nidsgap::{ClassifierSpec, Family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (train, test) = generate_pair(&SynthConfig::separated(3_000, 4, 1.5, 31))?;
    let dir = std::env::temp_dir().join("nidsgap-model-persistence");
    std::fs::create_dir_all(&dir)?;

    for family in Family::ALL {
        let model = fit(&ClassifierSpec::default_for(family, 32), &train)?;
        let path = dir.join(format!("{}.json", family.name()));
        save_model(&model, &path)?;
        let loaded = load_model(&path)?;

        let (before, _) = model.predict_batch(&test)?;
        let (after, _) = loaded.predict_batch(&test)?;
        let same = before.iter().zip(&after).filter(|(a, b)| a == b).count();
        let bytes = std::fs::metadata(&path)?.len();
        println!("{:<14} {:>8} bytes  {same}/{} predictions identical", family.name(), bytes, before.len());
    }
    println!("models written to {}", dir.display());
    Ok(())
}
