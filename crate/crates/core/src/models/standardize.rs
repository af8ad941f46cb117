use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FlowRecord};
use crate::error::{Error, Result};

use super::Matrix;

/// Per-feature z-scoring with training-set statistics.
///
/// Constant features get a zero scale, so they map to 0 everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// `1/sigma`, or 0 for constant features.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit_matrix(x: &Matrix) -> Standardizer {
        let (mean, scale) = (0..x.cols)
            .map(|j| {
                let m = x.column_mean(j);
                let var = x.column_variance(j);
                (m, if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 })
            })
            .unzip();
        Standardizer { mean, scale }
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) * s })
            .collect()
    }

    pub(crate) fn apply_matrix(&self, x: &Matrix) -> Matrix {
        Matrix::from_rows((0..x.rows).map(|i| self.apply_row(x.row(i))))
    }
}

pub fn standardize_fit(train: &Dataset) -> Standardizer {
    Standardizer::fit_matrix(&Matrix::from_dataset(train))
}

pub fn standardize_apply(s: &Standardizer, d: &Dataset) -> Result<Dataset> {
    if d.schema().dim() != s.mean.len() {
        return Err(Error::Dimension {
            expected: s.mean.len(),
            found: d.schema().dim(),
        });
    }
    let records = d
        .records()
        .iter()
        .map(|r| FlowRecord::new(s.apply_row(&r.values), r.label.clone()))
        .collect();
    Ok(d.derive(records, "standardize"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<Vec<f64>>) -> Dataset {
        Dataset::from_rows(&["a", "b", "c"], "y", rows.into_iter().map(|r| (r, "x".to_string())).collect()).unwrap()
    }

    #[test]
    fn fitting_set_has_zero_mean_unit_variance() {
        let train = ds((0..50)
            .map(|i| vec![i as f64 * 0.3 + 2.0, (i * i) as f64, 4.0])
            .collect());
        let s = standardize_fit(&train);
        let z = Matrix::from_dataset(&standardize_apply(&s, &train).unwrap());
        for j in 0..2 {
            assert!(z.column_mean(j).abs() < 1e-9);
            assert!((z.column_variance(j) - 1.0).abs() < 1e-9);
        }
        assert!((0..z.rows).all(|i| z.get(i, 2) == 0.0));
    }

    #[test]
    fn test_side_uses_training_statistics() {
        let train = ds((0..20).map(|i| vec![i as f64, 1.0, 0.0]).collect());
        let shifted = ds((0..20).map(|i| vec![i as f64 + 100.0, 1.0, 0.0]).collect());
        let s = standardize_fit(&train);
        let z = Matrix::from_dataset(&standardize_apply(&s, &shifted).unwrap());
        let sigma = Matrix::from_dataset(&train).column_variance(0).sqrt();
        assert!((z.column_mean(0) - 100.0 / sigma).abs() < 1e-9);
    }
}
