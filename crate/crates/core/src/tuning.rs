//! Grid search and stratified k-fold cross-validation.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::holdout_accuracy;
use crate::models::{ClassifierSpec, Family, HyperValue};
use crate::preprocess::holdout_split;
use crate::seed;

/// Default share of the training data used by [`grid_search`].
pub const DEFAULT_GRID_FRACTION: f64 = 0.25;

/// Candidate values per hyperparameter. Cells are enumerated with keys in
/// sorted order, the last key varying fastest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperGrid {
    axes: BTreeMap<String, Vec<HyperValue>>,
}

impl HyperGrid {
    pub fn new(axes: BTreeMap<String, Vec<HyperValue>>) -> Result<Self> {
        if let Some((name, _)) = axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::param(format!("grid axis {name} has no candidates")));
        }
        Ok(HyperGrid { axes })
    }

    /// Adds (or replaces) one axis.
    pub fn axis<V: Into<HyperValue>>(mut self, name: &str, values: impl IntoIterator<Item = V>) -> Result<Self> {
        let values: Vec<HyperValue> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(Error::param(format!("grid axis {name} has no candidates")));
        }
        self.axes.insert(name.to_string(), values);
        Ok(self)
    }

    pub fn axes(&self) -> &BTreeMap<String, Vec<HyperValue>> {
        &self.axes
    }

    pub fn names(&self) -> Vec<String> {
        self.axes.keys().cloned().collect()
    }

    /// Number of cells; an axis-free grid has the single default cell.
    pub fn len(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> Vec<BTreeMap<String, HyperValue>> {
        let mut out = vec![BTreeMap::new()];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.insert(name.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        out
    }
}

/// Fold accuracies with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl CvResult {
    pub fn from_folds(folds: Vec<f64>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Empty("no fold accuracies".into()));
        }
        let n = folds.len() as f64;
        let mean = folds.iter().sum::<f64>() / n;
        let std = (folds.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(CvResult { folds, mean, std })
    }

    /// Standard deviation with the `k - 1` divisor.
    pub fn sample_std(&self) -> f64 {
        let n = self.folds.len();
        if n < 2 {
            return 0.0;
        }
        (self.folds.iter().map(|a| (a - self.mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Assigns every record a fold in `0..k`. Within each class the records are
/// shuffled, then dealt round-robin by a counter that carries across classes.
pub fn stratified_folds(d: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::param(format!("k = {k}; need at least 2 folds")));
    }
    let mut fold = vec![0; d.len()];
    let mut counter = 0usize;
    for (pos, (label, mut idx)) in d.indices_by_label().into_iter().enumerate() {
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                label,
                count: idx.len(),
                needed: k,
            });
        }
        idx.shuffle(&mut seed::rng(seed::derive(seed, &[pos as u64])));
        for i in idx {
            fold[i] = counter % k;
            counter += 1;
        }
    }
    Ok(fold)
}

/// Stratified k-fold cross-validation. Fold `i` trains on the other folds
/// with the model seed derived from `(spec.seed, seed, i)`.
pub fn cross_validate(spec: &ClassifierSpec, d: &Dataset, k: usize, seed: u64) -> Result<CvResult> {
    let fold = stratified_folds(d, k, seed::derive_tag(seed, "folds"))?;
    let folds = (0..k)
        .into_par_iter()
        .map(|i| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&r| fold[r] == i);
            let train = d.derive_indices(&train, &format!("cv train {}", i + 1));
            let test = d.derive_indices(&test, &format!("cv test {}", i + 1));
            let spec = spec.clone().with_seed(seed::derive(spec.seed, &[seed, i as u64]));
            holdout_accuracy(&spec, &train, &test)
        })
        .collect::<Result<Vec<f64>>>()?;
    CvResult::from_folds(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub hyperparameters: BTreeMap<String, HyperValue>,
    pub result: Option<CvResult>,
    pub error: Option<String>,
}

/// Every evaluated cell in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub family: Family,
    pub parameters: Vec<String>,
    pub k: usize,
    pub cells: Vec<GridCell>,
}

impl GridTable {
    /// Index of the highest mean; the earliest cell wins ties.
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.cells.iter().enumerate() {
            if let Some(r) = &c.result {
                if best.is_none_or(|(_, m)| r.mean > m) {
                    best = Some((i, r.mean));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// `params..., fold_1..fold_k, mean, std, error`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = self.parameters.clone();
        header.extend((1..=self.k).map(|i| format!("fold_{i}")));
        header.extend(["mean".into(), "std".into(), "error".into()]);
        w.write_record(&header)?;
        for c in &self.cells {
            let mut rec: Vec<String> = self
                .parameters
                .iter()
                .map(|p| c.hyperparameters.get(p).map(ToString::to_string).unwrap_or_default())
                .collect();
            match &c.result {
                Some(r) => {
                    rec.extend(r.folds.iter().map(f64::to_string));
                    rec.extend([r.mean.to_string(), r.std.to_string()]);
                }
                None => rec.extend(std::iter::repeat_n(String::new(), self.k + 2)),
            }
            rec.push(c.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<grid>", e))?;
        Ok(())
    }
}

/// Cross-validates every grid cell on a seeded stratified `fraction` of `d`
/// and returns the best spec with the full table. A cell that fails to
/// train is recorded and skipped; the search fails only if every cell does.
pub fn grid_search(
    family: Family,
    grid: &HyperGrid,
    d: &Dataset,
    fraction: f64,
    k: usize,
    seed: u64,
) -> Result<(ClassifierSpec, GridTable)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("grid fraction {fraction} outside (0, 1]")));
    }
    let sample = if fraction < 1.0 {
        holdout_split(d, fraction, true, seed::derive_tag(seed, "grid-sample"))?.0
    } else {
        d.clone()
    };
    let model_seed = seed::derive_tag(seed, "grid-model");
    let cv_seed = seed::derive_tag(seed, "grid-cv");
    let cells: Vec<GridCell> = grid
        .cells()
        .into_par_iter()
        .map(|hp| {
            let outcome = ClassifierSpec::new(family, hp.clone(), model_seed)
                .and_then(|spec| cross_validate(&spec, &sample, k, cv_seed));
            match outcome {
                Ok(r) => GridCell {
                    hyperparameters: hp,
                    result: Some(r),
                    error: None,
                },
                Err(e) => {
                    log::warn!("grid cell {family} {hp:?} failed: {e}");
                    GridCell {
                        hyperparameters: hp,
                        result: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let table = GridTable {
        family,
        parameters: grid.names(),
        k,
        cells,
    };
    let best = table.best().ok_or_else(|| {
        let first = table.cells.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        Error::AllCellsFailed(format!("{family}: {first}"))
    })?;
    let spec = ClassifierSpec::new(family, table.cells[best].hyperparameters.clone(), model_seed)?;
    Ok((spec, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    #[test]
    fn fold_aggregation() {
        let r = CvResult::from_folds(vec![0.9972, 0.9967, 0.9971, 0.9971, 0.9970]).unwrap();
        assert!((r.mean - 0.9970).abs() < 5e-5);
        assert_eq!(round4(r.std), 0.0002);
        assert_eq!(round4(r.sample_std()), 0.0002);
    }

    fn two_class(n_b: usize, n_m: usize) -> Dataset {
        let rows = (0..n_b + n_m)
            .map(|i| (vec![i as f64, (i % 7) as f64], if i < n_b { "b" } else { "m" }.to_string()))
            .collect();
        Dataset::from_rows(&["x", "y"], "label", rows).unwrap()
    }

    #[test]
    fn folds_partition_records() {
        let d = two_class(30, 70);
        let f = stratified_folds(&d, 5, 3).unwrap();
        let mut sizes = [0; 5];
        for &i in &f {
            sizes[i] += 1;
        }
        assert_eq!(sizes, [20; 5]);
        assert_eq!(f, stratified_folds(&d, 5, 3).unwrap());
        assert!(matches!(stratified_folds(&two_class(3, 10), 5, 0), Err(Error::ClassTooSmall { .. })));
        assert!(stratified_folds(&d, 1, 0).is_err());
    }

    #[test]
    fn majority_baseline() {
        let d = two_class(30, 70);
        let spec = ClassifierSpec::default_for(Family::DecisionTree, 0).with("max_depth", 0).unwrap();
        let r = cross_validate(&spec, &d, 5, 11).unwrap();
        assert!((r.mean - 0.70).abs() < 0.02);
    }

    fn xor_like() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..200 {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            let label = if (a + b) as i32 % 2 == 1 { "m" } else { "b" };
            rows.push((vec![a + 0.01 * (i % 5) as f64, b], label.to_string()));
        }
        Dataset::from_rows(&["a", "b"], "label", rows).unwrap()
    }

    #[test]
    fn deeper_tree_wins_when_needed() {
        let grid = HyperGrid::default().axis("max_depth", [HyperValue::Int(1), HyperValue::Text("none".into())]).unwrap();
        let (best, table) = grid_search(Family::DecisionTree, &grid, &xor_like(), 1.0, 5, 2).unwrap();
        assert_eq!(best.hyperparameters["max_depth"], HyperValue::Text("none".into()));
        assert_eq!(table.cells.len(), 2);
        assert!(table.cells[0].result.as_ref().unwrap().mean < 0.8);
    }

    #[test]
    fn reduced_grid_reproduces_winner() {
        let d = xor_like();
        let grid = HyperGrid::default()
            .axis("max_depth", [1, 2, 3])
            .unwrap()
            .axis("criterion", ["gini", "entropy"])
            .unwrap();
        assert_eq!(grid.len(), 6);
        let (best, table) = grid_search(Family::DecisionTree, &grid, &d, 0.5, 5, 4).unwrap();
        let win = &table.cells[table.best().unwrap()];
        let mut reduced = HyperGrid::default();
        for (k, v) in &best.hyperparameters {
            reduced = reduced.axis(k, [v.clone()]).unwrap();
        }
        let (again, t2) = grid_search(Family::DecisionTree, &reduced, &d, 0.5, 5, 4).unwrap();
        assert_eq!(again, best);
        assert_eq!(t2.cells[0].result, win.result);
    }

    #[test]
    fn equal_means_pick_first_cell() {
        let grid = HyperGrid::default().axis("criterion", ["gini", "entropy"]).unwrap();
        let d = two_class(30, 70);
        let (best, table) = grid_search(Family::DecisionTree, &grid, &d, 1.0, 5, 1).unwrap();
        let means: Vec<f64> = table.cells.iter().map(|c| c.result.as_ref().unwrap().mean).collect();
        assert_eq!(means[0], means[1]);
        assert_eq!(best.hyperparameters["criterion"], HyperValue::Text("gini".into()));
        assert_eq!(table.best(), Some(0));
    }

    #[test]
    fn failed_cells_are_recorded() {
        let rows = (0..30)
            .map(|i| (vec![i as f64], ["a", "b", "c"][i % 3].to_string()))
            .collect();
        let three = Dataset::from_rows(&["x"], "label", rows).unwrap();
        let grid = HyperGrid::default().axis("epochs", [1, 2]).unwrap();
        assert!(matches!(grid_search(Family::Svm, &grid, &three, 1.0, 3, 0), Err(Error::AllCellsFailed(_))));

        let mixed = HyperGrid::default().axis("max_depth", [HyperValue::Int(-1), HyperValue::Int(2)]).unwrap();
        let (best, table) = grid_search(Family::DecisionTree, &mixed, &xor_like(), 1.0, 5, 0).unwrap();
        assert!(table.cells[0].error.is_some());
        assert_eq!(best.hyperparameters["max_depth"], HyperValue::Int(2));
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("max_depth,fold_1,fold_2,fold_3,fold_4,fold_5,mean,std,error\n"));
    }
}
