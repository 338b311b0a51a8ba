use serde::{Deserialize, Serialize};

use super::{normal_cdf, TestRecord, WeightedSample, MIN_KS_SAMPLE};
use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov result against a normal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n_effective: f64,
    pub p_value: f64,
}

impl KsReport {
    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn record(&self, test: impl Into<String>) -> TestRecord {
        TestRecord::new(test, self.statistic, self.p_value, self.n_effective)
    }
}

/// `P(K > lambda)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form of the CDF, fast for small arguments.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = -pi2 / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            let term = (c * j * j).exp();
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        let cdf = (std::f64::consts::TAU).sqrt() / lambda * sum;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += sign * term;
            if term < 1e-300 || term < 1e-18 * sum.abs() {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value with Stephens' finite-sample scaling of the argument.
fn ks_p_value(d: f64, n_effective: f64) -> f64 {
    let sn = n_effective.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

fn check_params(mean: f64, variance: f64) -> Result<()> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variance must be positive, got {variance}"
        )));
    }
    if !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mean must be finite, got {mean}"
        )));
    }
    Ok(())
}

/// KS test of a sample against `N(mean, variance)`.
pub fn ks_test_normal(sample: &[f64], mean: f64, variance: f64) -> Result<KsReport> {
    ks_test_normal_weighted(
        &WeightedSample::unweighted(sample.to_vec())?,
        mean,
        variance,
    )
}

/// KS test of a weighted empirical CDF against `N(mean, variance)`, with the
/// p-value evaluated at the Kish effective sample size.
pub fn ks_test_normal_weighted(ws: &WeightedSample, mean: f64, variance: f64) -> Result<KsReport> {
    check_params(mean, variance)?;
    let n_effective = ws.n_effective();
    if ws.len() < MIN_KS_SAMPLE as usize || n_effective.is_nan() || n_effective < MIN_KS_SAMPLE {
        return Err(Error::InsufficientSample(format!(
            "KS test needs at least {MIN_KS_SAMPLE} (effective) observations, got n={} n_eff={n_effective:.2}",
            ws.len()
        )));
    }
    if n_effective < 35.0 {
        log::warn!(
            "KS p-value uses the asymptotic law with only {n_effective:.1} effective observations"
        );
    }
    let sd = variance.sqrt();
    let mut order: Vec<usize> = (0..ws.len()).collect();
    let values = ws.values();
    let weights = ws.weights();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total = ws.total_weight();

    let mut d: f64 = 0.0;
    let mut cum = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let x = values[order[pos]];
        let below = cum / total;
        while pos < order.len() && values[order[pos]] == x {
            cum += weights[order[pos]];
            pos += 1;
        }
        let above = cum / total;
        let f = normal_cdf((x - mean) / sd);
        d = d.max((above - f).abs()).max((f - below).abs());
    }
    let statistic = d.min(1.0);
    Ok(KsReport {
        statistic,
        n_effective,
        p_value: ks_p_value(statistic, n_effective),
    })
}
