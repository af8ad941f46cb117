use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl SplitCriterion {
    /// Impurity of `counts` whose sum is `total > 0`.
    #[inline]
    pub(crate) fn of(self, counts: &[usize], total: usize) -> f64 {
        let n = total as f64;
        match self {
            SplitCriterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
            SplitCriterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }

    pub fn impurity(self, counts: &[usize]) -> Result<f64> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty("class counts".into()));
        }
        Ok(self.of(counts, total))
    }
}

impl std::str::FromStr for SplitCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(SplitCriterion::Gini),
            "entropy" => Ok(SplitCriterion::Entropy),
            other => Err(Error::param(format!("unknown criterion {other:?}"))),
        }
    }
}

impl std::fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitCriterion::Gini => "gini",
            SplitCriterion::Entropy => "entropy",
        })
    }
}

/// Gini impurity `1 - sum p^2`.
pub fn gini(class_counts: &[usize]) -> Result<f64> {
    SplitCriterion::Gini.impurity(class_counts)
}

/// Shannon entropy in bits.
pub fn entropy(class_counts: &[usize]) -> Result<f64> {
    SplitCriterion::Entropy.impurity(class_counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[1, 1]).unwrap(), 0.5);
        assert_eq!(gini(&[9]).unwrap(), 0.0);
        assert!((gini(&[1, 3]).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini(&[]).is_err());
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[1, 1]).unwrap(), 1.0);
        assert_eq!(entropy(&[0, 5]).unwrap(), 0.0);
        assert!((entropy(&[1, 3]).unwrap() - 0.811278).abs() < 1e-6);
        assert!(entropy(&[]).is_err());
    }

    proptest! {
        #[test]
        fn maximal_at_uniform_zero_iff_pure(counts in prop::collection::vec(0usize..50, 2..6)) {
            prop_assume!(counts.iter().sum::<usize>() > 0);
            let k = counts.len();
            let pure = counts.iter().filter(|&&c| c > 0).count() == 1;
            for crit in [SplitCriterion::Gini, SplitCriterion::Entropy] {
                let v = crit.impurity(&counts).unwrap();
                let uniform = crit.impurity(&vec![1; k]).unwrap();
                prop_assert!(v <= uniform + 1e-12);
                prop_assert!(v >= -1e-15);
                prop_assert_eq!(v.abs() < 1e-15, pure);
            }
        }
    }
}
