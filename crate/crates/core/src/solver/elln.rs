use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::reduce;

/// Path-by-path index averages against the pooled mean at one time node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllnReport {
    pub t_idx: usize,
    pub n_index: usize,
    pub n_paths: usize,
    /// Average over indices and paths.
    pub grand_mean: f64,
    /// `max_m |avg_i x(i, m) - grand_mean|`.
    pub max_deviation: f64,
    /// 95th percentile (nearest rank) of the same deviations.
    pub p95_deviation: f64,
}

/// Exact-law-of-large-numbers check for a decoupled ensemble. The caller
/// is responsible for the ensemble having independent indices.
pub fn elln_check(paths: &PathEnsemble, t_idx: usize) -> Result<EllnReport> {
    if t_idx >= paths.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "time index {t_idx} beyond last node {}",
            paths.n_nodes() - 1
        )));
    }
    elln_check_slab(paths.at(t_idx), paths.n_index(), paths.n_paths(), t_idx)
}

/// [`elln_check`] on a single index-major slab of `n_index * n_paths` values
/// observed at node `t_idx`.
pub fn elln_check_slab(
    slab: &[f64],
    n_index: usize,
    n_paths: usize,
    t_idx: usize,
) -> Result<EllnReport> {
    let (n, m) = (n_index, n_paths);
    if n == 0 || m == 0 || slab.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            actual: slab.len(),
        });
    }
    let grand_mean = reduce::mean(slab);
    let mut deviations: Vec<f64> = (0..m)
        .map(|p| {
            let column: Vec<f64> = (0..n).map(|i| slab[i * m + p]).collect();
            (reduce::mean(&column) - grand_mean).abs()
        })
        .collect();
    deviations.sort_by(f64::total_cmp);
    let rank = ((0.95 * m as f64).ceil() as usize).clamp(1, m) - 1;
    Ok(EllnReport {
        t_idx,
        n_index: n,
        n_paths: m,
        grand_mean,
        max_deviation: deviations[m - 1],
        p95_deviation: deviations[rank],
    })
}

/// Ratio of 95th-percentile deviations between a coarse and a fine index
/// grid. With `N` quadrupled an O(1/sqrt(N)) law predicts a ratio of 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllnScaling {
    pub coarse_n: usize,
    pub fine_n: usize,
    pub ratio: f64,
    pub expected_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

pub fn elln_scaling(coarse: &EllnReport, fine: &EllnReport) -> EllnScaling {
    let (lower, upper) = (1.5, 2.8);
    let ratio = coarse.p95_deviation / fine.p95_deviation;
    EllnScaling {
        coarse_n: coarse.n_index,
        fine_n: fine.n_index,
        ratio,
        expected_ratio: (fine.n_index as f64 / coarse.n_index as f64).sqrt(),
        lower,
        upper,
        pass: (lower..=upper).contains(&ratio),
    }
}
