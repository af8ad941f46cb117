//! Grid search a decision tree and a random forest, then cross-validate the
//! winners on the full training data.

use std::io;

use nidsgap::synth::{generate_pair, SynthConfig};
use nidsgap::tuning::{cross_validate, grid_search, HyperGrid, DEFAULT_GRID_FRACTION};
use nidsgap::{Family, Result};

fn main() -> Result<()> {
    let (data, _) = generate_pair(&SynthConfig::separated(5_000, 5, 1.0, 11))?;

    let searches = [
        (
            Family::DecisionTree,
            HyperGrid::default()
                .axis("max_depth", [2, 4, 8, 16])?
                .axis("criterion", ["gini", "entropy"])?,
        ),
        (
            Family::RandomForest,
            HyperGrid::default()
                .axis("n_trees", [10, 40])?
                .axis("max_depth", [4, 12])?,
        ),
    ];

    for (family, grid) in searches {
        println!("== {} ({} cells)", family.name(), grid.len());
        let (best, table) = grid_search(family, &grid, &data, DEFAULT_GRID_FRACTION, 5, 12)?;
        table.write_csv(io::stdout())?;
        let cv = cross_validate(&best, &data, 5, 13)?;
        println!(
            "winner {}: 5-fold mean {:.4}, std {:.5} (sample std {:.5})\n",
            best.describe(),
            cv.mean,
            cv.std,
            cv.sample_std()
        );
    }
    Ok(())
}
