//! Statistical checks shared by all verification suites.
//!
//! Everything here is pure: the same inputs give the same report.

mod independence;
mod ks;
mod moments;

pub use independence::{pairwise_independence_check, IndependenceReport};
pub use ks::{kolmogorov_survival, ks_test_normal, ks_test_normal_weighted, KsReport};
pub use moments::{moment_check, moment_check_weighted, MomentReport};

use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::reduce;

/// Minimum sample (or effective sample) size accepted by the KS tests.
pub const MIN_KS_SAMPLE: f64 = 8.0;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Values with strictly positive importance weights.
///
/// Weights are only meaningful up to scale. When every weight is equal they
/// are stored as exact ones, so a uniformly weighted sample behaves bit for
/// bit like an unweighted one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        let uniform = weights.windows(2).all(|w| w[0] == w[1]);
        let weights = if uniform {
            vec![1.0; weights.len()]
        } else {
            weights
        };
        Ok(Self { values, weights })
    }

    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        reduce::pairwise_sum(&self.weights)
    }

    /// Weights rescaled to sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.weights.iter().map(|w| w / total).collect()
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2`.
    pub fn n_effective(&self) -> f64 {
        kish_effective_size(&self.weights)
    }
}

pub fn kish_effective_size(weights: &[f64]) -> f64 {
    let s = reduce::pairwise_sum(weights);
    let s2 = reduce::pairwise_sum_by(weights, |w| w * w);
    s * s / s2
}

/// Serialized form of a test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
    pub reject_at_001: bool,
    pub reject_at_0001: bool,
}

impl TestRecord {
    pub fn new(test: impl Into<String>, statistic: f64, p_value: f64, n_effective: f64) -> Self {
        Self {
            test: test.into(),
            statistic,
            p_value,
            n_effective,
            reject_at_001: p_value < 0.01,
            reject_at_0001: p_value < 0.001,
        }
    }
}

/// Outcome of one named check in a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `sqrt(sum_i lambda_i v_i^2)`.
pub fn weighted_l2_norm(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: values.len(),
        });
    }
    let terms: Vec<f64> = values.iter().zip(weights).map(|(v, w)| w * v * v).collect();
    Ok(reduce::pairwise_sum(&terms).sqrt())
}

/// Sup over time first, then the uniform average over `(i, m)`.
pub fn path_space_norm(paths: &PathEnsemble) -> f64 {
    paths.path_space_norm()
}
