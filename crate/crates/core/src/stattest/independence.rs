use serde::{Deserialize, Serialize};

use super::{kish_effective_size, TestRecord};
use crate::error::{Error, Result};

/// Pearson chi-square test on a quantile-binned contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub n_effective: f64,
}

impl IndependenceReport {
    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn record(&self, test: impl Into<String>) -> TestRecord {
        TestRecord::new(test, self.chi2, self.p_value, self.n_effective)
    }
}

/// Bin assignment by weighted rank. Tied values share a bin.
fn quantile_bins(xs: &[f64], weights: &[f64], n_bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let total: f64 = crate::reduce::pairwise_sum(weights);
    let mut bins = vec![0; xs.len()];
    let mut cum = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let x = xs[order[pos]];
        let mid = (cum + 0.5 * weights[order[pos]]) / total;
        let bin = ((mid * n_bins as f64) as usize).min(n_bins - 1);
        while pos < order.len() && xs[order[pos]] == x {
            bins[order[pos]] = bin;
            cum += weights[order[pos]];
            pos += 1;
        }
    }
    bins
}

/// Tests independence of `x` and `y` on an `n_bins x n_bins` table of
/// marginal quantile bins. With weights, cell masses are normalized weights
/// and the statistic is scaled by the Kish effective size.
pub fn pairwise_independence_check(
    x: &[f64],
    y: &[f64],
    n_bins: usize,
    weights: Option<&[f64]>,
) -> Result<IndependenceReport> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 100 {
        return Err(Error::InsufficientSample(format!(
            "independence check needs at least 100 pairs, got {}",
            x.len()
        )));
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument("n_bins must be at least 2".into()));
    }
    let unit;
    let w = match weights {
        Some(w) => {
            if w.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    actual: w.len(),
                });
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidArgument(
                    "weights must be positive and finite".into(),
                ));
            }
            w
        }
        None => {
            unit = vec![1.0; x.len()];
            &unit[..]
        }
    };
    for (name, v) in [("x", x), ("y", y)] {
        if v.iter().any(|a| a.is_nan()) {
            return Err(Error::InvalidArgument(format!("{name} contains NaN")));
        }
        if v.iter().all(|a| *a == v[0]) {
            return Err(Error::DegenerateMarginal(format!("{name} is constant")));
        }
    }
    let bx = quantile_bins(x, w, n_bins);
    let by = quantile_bins(y, w, n_bins);
    let total: f64 = crate::reduce::pairwise_sum(w);
    let mut table = vec![0.0; n_bins * n_bins];
    for j in 0..x.len() {
        table[bx[j] * n_bins + by[j]] += w[j] / total;
    }
    let rows: Vec<f64> = (0..n_bins)
        .map(|a| (0..n_bins).map(|b| table[a * n_bins + b]).sum())
        .collect();
    let cols: Vec<f64> = (0..n_bins)
        .map(|b| (0..n_bins).map(|a| table[a * n_bins + b]).sum())
        .collect();
    let live_rows = rows.iter().filter(|r| **r > 0.0).count();
    let live_cols = cols.iter().filter(|c| **c > 0.0).count();
    if live_rows < 2 || live_cols < 2 {
        return Err(Error::DegenerateMarginal(
            "fewer than two occupied bins".into(),
        ));
    }
    let n_eff = kish_effective_size(w);
    let mut chi2 = 0.0;
    for a in 0..n_bins {
        for b in 0..n_bins {
            let e = rows[a] * cols[b];
            if e > 0.0 {
                chi2 += (table[a * n_bins + b] - e).powi(2) / e;
            }
        }
    }
    chi2 *= n_eff;
    let df = (live_rows - 1) * (live_cols - 1);
    let p_value = statrs::function::gamma::gamma_ur(df as f64 / 2.0, chi2 / 2.0);
    Ok(IndependenceReport {
        chi2,
        df,
        p_value,
        n_effective: n_eff,
    })
}
