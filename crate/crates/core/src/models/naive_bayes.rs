//! Gaussian and Bernoulli naive Bayes.
//!
//! Prediction maximizes `ln P(A) + sum ln P(B_j | A)`; the shared evidence
//! term `P(B)` of Bayes' rule is dropped since it does not change the argmax.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::Params;
use super::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbVariant {
    #[default]
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub variant: NbVariant,
    /// Gaussian variances are floored at this multiple of the largest feature variance.
    pub var_smoothing: f64,
    /// Laplace pseudo-count for Bernoulli likelihoods.
    pub alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            variant: NbVariant::Gaussian,
            var_smoothing: 1e-9,
            alpha: 1.0,
        }
    }
}

impl NbParams {
    pub(crate) fn from_params(p: &mut Params<'_>) -> Result<Self> {
        let d = NbParams::default();
        let variant = match p.text("variant")? {
            None => d.variant,
            Some("gaussian") => NbVariant::Gaussian,
            Some("bernoulli") => NbVariant::Bernoulli,
            Some(other) => return Err(Error::param(format!("unknown naive Bayes variant {other:?}"))),
        };
        Ok(NbParams {
            variant,
            var_smoothing: p.positive("var_smoothing")?.unwrap_or(d.var_smoothing),
            alpha: p.positive("alpha")?.unwrap_or(d.alpha),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Likelihoods {
    Gaussian {
        /// `[class][feature]`
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    Bernoulli {
        /// Per-feature binarization threshold (training median); `x > t` is 1.
        thresholds: Vec<f64>,
        /// `[class][feature]` probability of a 1.
        probs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub priors: Vec<f64>,
    pub likelihoods: Likelihoods,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl NaiveBayes {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &NbParams) -> Result<NaiveBayes> {
        let n = x.rows;
        let d = x.cols;
        let mut counts = vec![0usize; n_classes];
        for &c in y {
            counts[c] += 1;
        }
        let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

        let likelihoods = match params.variant {
            NbVariant::Gaussian => {
                let mut means = vec![vec![0.0; d]; n_classes];
                for i in 0..n {
                    for (m, v) in means[y[i]].iter_mut().zip(x.row(i)) {
                        *m += v;
                    }
                }
                for (c, m) in means.iter_mut().enumerate() {
                    m.iter_mut().for_each(|v| *v /= counts[c].max(1) as f64);
                }
                let mut variances = vec![vec![0.0; d]; n_classes];
                for (i, &c) in y.iter().enumerate().take(n) {
                    for j in 0..d {
                        let dv = x.get(i, j) - means[c][j];
                        variances[c][j] += dv * dv;
                    }
                }
                for (c, v) in variances.iter_mut().enumerate() {
                    v.iter_mut().for_each(|s| *s /= counts[c].max(1) as f64);
                }
                let max_var = (0..d).map(|j| x.column_variance(j)).fold(0.0, f64::max);
                let mut floor = params.var_smoothing * max_var;
                if floor <= 0.0 {
                    floor = f64::MIN_POSITIVE;
                }
                for v in variances.iter_mut().flatten() {
                    *v = v.max(floor);
                }
                Likelihoods::Gaussian { means, variances }
            }
            NbVariant::Bernoulli => {
                if n_classes > 2 {
                    return Err(Error::NotBinary {
                        family: "bernoulli naive Bayes",
                        classes: n_classes,
                    });
                }
                let thresholds: Vec<f64> = (0..d).map(|j| median((0..n).map(|i| x.get(i, j)).collect())).collect();
                let mut ones = vec![vec![0usize; d]; n_classes];
                for i in 0..n {
                    for j in 0..d {
                        if x.get(i, j) > thresholds[j] {
                            ones[y[i]][j] += 1;
                        }
                    }
                }
                let probs = ones
                    .iter()
                    .enumerate()
                    .map(|(c, row)| {
                        row.iter()
                            .map(|&k| (k as f64 + params.alpha) / (counts[c] as f64 + 2.0 * params.alpha))
                            .collect()
                    })
                    .collect();
                Likelihoods::Bernoulli { thresholds, probs }
            }
        };
        Ok(NaiveBayes { priors, likelihoods })
    }

    /// `ln P(A) + sum_j ln P(x_j | A)` for every class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        (0..self.priors.len())
            .map(|c| {
                let prior = self.priors[c].ln();
                let lik: f64 = match &self.likelihoods {
                    Likelihoods::Gaussian { means, variances } => x
                        .iter()
                        .zip(&means[c])
                        .zip(&variances[c])
                        .map(|((&v, &m), &s2)| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (v - m).powi(2) / (2.0 * s2))
                        .sum(),
                    Likelihoods::Bernoulli { thresholds, probs } => x
                        .iter()
                        .zip(thresholds)
                        .zip(&probs[c])
                        .map(|((&v, &t), &p)| if v > t { p.ln() } else { (1.0 - p).ln() })
                        .sum(),
                };
                prior + lik
            })
            .collect()
    }

    /// Argmax of the joint log-likelihood; ties go to the earliest class.
    pub fn predict_row(&self, x: &[f64]) -> usize {
        let jll = self.joint_log_likelihood(x);
        let mut best = 0;
        for c in 1..jll.len() {
            if jll[c] > jll[best] {
                best = c;
            }
        }
        best
    }
}

/// Bayes' rule `P(A|B) = P(B|A) P(A) / P(B)`.
///
/// Fails when `P(B) = 0` or when the inputs are inconsistent (result above 1).
pub fn bayes_posterior(p_b_given_a: f64, p_a: f64, p_b: f64) -> Result<f64> {
    for (name, p) in [("P(B|A)", p_b_given_a), ("P(A)", p_a), ("P(B)", p_b)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Probability(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if p_b == 0.0 {
        return Err(Error::Probability("P(B) = 0".into()));
    }
    let post = p_b_given_a * p_a / p_b;
    if post > 1.0 + 1e-12 {
        return Err(Error::Probability(format!("inconsistent inputs give P(A|B) = {post}")));
    }
    Ok(post.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_examples() {
        assert_eq!(bayes_posterior(0.8, 0.5, 0.4).unwrap(), 1.0);
        assert_eq!(bayes_posterior(0.37, 1.0, 0.37).unwrap(), 1.0);
        assert!((bayes_posterior(0.9, 0.2, 0.3).unwrap() - 0.6).abs() < 1e-12);
        assert!(bayes_posterior(0.5, 0.5, 0.0).is_err());
        assert!(bayes_posterior(0.9, 0.9, 0.1).is_err());
        assert!(bayes_posterior(1.2, 0.5, 0.5).is_err());
    }

    #[test]
    fn identical_classes_tie_to_first() {
        let x = Matrix::from_rows(vec![vec![0.0], vec![2.0], vec![0.0], vec![2.0]]);
        let nb = NaiveBayes::fit(&x, &[0, 0, 1, 1], 2, &NbParams::default()).unwrap();
        assert_eq!(nb.predict_row(&[1.0]), 0);
        assert_eq!(nb.predict_row(&[-7.0]), 0);
    }

    #[test]
    fn bernoulli_rejects_three_classes() {
        let x = Matrix::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let p = NbParams {
            variant: NbVariant::Bernoulli,
            ..NbParams::default()
        };
        assert!(NaiveBayes::fit(&x, &[0, 1, 2], 3, &p).is_err());
    }

    #[test]
    fn bernoulli_uses_median_threshold() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let p = NbParams {
            variant: NbVariant::Bernoulli,
            ..NbParams::default()
        };
        let nb = NaiveBayes::fit(&x, &[0, 0, 1, 1], 2, &p).unwrap();
        match &nb.likelihoods {
            Likelihoods::Bernoulli { thresholds, probs } => {
                assert_eq!(thresholds[0], 2.5);
                assert!((probs[0][0] - 0.25).abs() < 1e-12);
                assert!((probs[1][0] - 0.75).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        assert_eq!(nb.predict_row(&[0.0]), 0);
        assert_eq!(nb.predict_row(&[9.0]), 1);
    }

    #[test]
    fn variance_floor_handles_constant_features() {
        let x = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 5.0], vec![1.0, 6.0]]);
        let nb = NaiveBayes::fit(&x, &[0, 0, 1, 1], 2, &NbParams::default()).unwrap();
        assert!(nb.joint_log_likelihood(&[1.0, 3.0]).iter().all(|v| v.is_finite()));
        assert_eq!(nb.predict_row(&[1.0, 0.5]), 0);
        assert_eq!(nb.predict_row(&[1.0, 5.5]), 1);
    }
}
