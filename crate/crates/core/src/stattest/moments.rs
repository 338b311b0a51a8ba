use serde::{Deserialize, Serialize};

use super::WeightedSample;
use crate::error::{Error, Result};
use crate::reduce;

/// z-scores of the sample mean and variance against targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    pub variance: f64,
    pub n_effective: f64,
    pub z_mean: f64,
    pub z_var: f64,
}

fn z(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

pub fn moment_check(sample: &[f64], target_mean: f64, target_var: f64) -> Result<MomentReport> {
    moment_check_weighted(
        &WeightedSample::unweighted(sample.to_vec())?,
        target_mean,
        target_var,
    )
}

/// Standard errors use the Kish effective size; the variance standard error
/// uses the empirical fourth central moment, `sqrt((m4 - s^4) / n)`.
pub fn moment_check_weighted(
    ws: &WeightedSample,
    target_mean: f64,
    target_var: f64,
) -> Result<MomentReport> {
    if ws.len() < 2 {
        return Err(Error::InsufficientSample(
            "moment check needs at least 2 observations".into(),
        ));
    }
    let n_eff = ws.n_effective();
    let total = ws.total_weight();
    let (xs, ws_) = (ws.values(), ws.weights());
    let wx: Vec<f64> = xs.iter().zip(ws_).map(|(x, w)| x * w).collect();
    let mean = reduce::pairwise_sum(&wx) / total;
    let dev2: Vec<f64> = xs
        .iter()
        .zip(ws_)
        .map(|(x, w)| w * (x - mean).powi(2))
        .collect();
    let dev4: Vec<f64> = xs
        .iter()
        .zip(ws_)
        .map(|(x, w)| w * (x - mean).powi(4))
        .collect();
    let m2 = reduce::pairwise_sum(&dev2) / total;
    let m4 = reduce::pairwise_sum(&dev4) / total;
    let variance = m2 * n_eff / (n_eff - 1.0);
    let se_mean = (variance / n_eff).sqrt();
    let se_var = ((m4 - m2 * m2).max(0.0) / n_eff).sqrt();
    Ok(MomentReport {
        mean,
        variance,
        n_effective: n_eff,
        z_mean: z(mean - target_mean, se_mean),
        z_var: z(variance - target_var, se_var),
    })
}
