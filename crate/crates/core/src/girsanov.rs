//! Change of measure on the extension space by the exponential density
//!
//! ```text
//! E_t = exp( int_0^t Theta_s dB_s - 1/2 int_0^t Theta_s^2 ds )
//! ```
//!
//! The tilted measure is represented purely as importance weights on the
//! pooled `(i, m)` sample. Everything is accumulated in log space along the
//! time grid with left-endpoint evaluation of the stochastic integral.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::grid::Grids;
use crate::noise::NoiseEnsemble;
use crate::reduce;
use crate::rng::domain;
use crate::stattest::{
    kish_effective_size, ks_test_normal_weighted, moment_check, normal_cdf,
    pairwise_independence_check, CheckResult, WeightedSample,
};

/// Tilt process `theta_{t,u}`. Every kind is adapted to the Brownian motion
/// of its own index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaProcess {
    Constant {
        c: f64,
    },
    /// `theta_t = intercept + slope * t`
    TimeAffine {
        intercept: f64,
        slope: f64,
    },
    /// `theta_t = kappa * B_t`
    AdaptedLinear {
        kappa: f64,
    },
}

impl ThetaProcess {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ThetaProcess::Constant { c } => c.is_finite(),
            ThetaProcess::TimeAffine { intercept, slope } => {
                intercept.is_finite() && slope.is_finite()
            }
            ThetaProcess::AdaptedLinear { kappa } => kappa.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "theta parameters must be finite".into(),
            ))
        }
    }

    /// Value at time `t` given the current level `b` of the same index.
    #[inline]
    pub fn value(&self, t: f64, b: f64) -> f64 {
        match *self {
            ThetaProcess::Constant { c } => c,
            ThetaProcess::TimeAffine { intercept, slope } => intercept + slope * t,
            ThetaProcess::AdaptedLinear { kappa } => kappa * b,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ThetaProcess::Constant { c } => c == 0.0,
            ThetaProcess::TimeAffine { intercept, slope } => intercept == 0.0 && slope == 0.0,
            ThetaProcess::AdaptedLinear { kappa } => kappa == 0.0,
        }
    }

    /// `E_Q[ sum_{j<K} theta_j dt ]` on the time grid, the mean drift removed
    /// from each `W^u_T`.
    pub fn expected_drift(&self, grids: &Grids) -> f64 {
        let dt = grids.time.dt();
        match *self {
            ThetaProcess::AdaptedLinear { .. } => 0.0,
            _ => {
                let terms: Vec<f64> = (0..grids.time.n_steps())
                    .map(|k| self.value(grids.time.node(k), 0.0) * dt)
                    .collect();
                reduce::pairwise_sum(&terms)
            }
        }
    }

    /// Exact `E_Q[exp int_0^T theta_s^2 ds]`, or `None` where it is infinite.
    pub fn novikov_closed_form(&self, horizon: f64) -> Option<f64> {
        match *self {
            ThetaProcess::Constant { c } => Some((c * c * horizon).exp()),
            ThetaProcess::TimeAffine {
                intercept: a,
                slope: b,
            } => {
                let t = horizon;
                Some((a * a * t + a * b * t * t + b * b * t * t * t / 3.0).exp())
            }
            ThetaProcess::AdaptedLinear { kappa } => {
                // E exp(alpha int B^2) = cos(sqrt(2 alpha) T)^(-1/2) below the first blow-up
                let x = (2.0 * kappa * kappa).sqrt() * horizon;
                (x < std::f64::consts::FRAC_PI_2).then(|| x.cos().powf(-0.5))
            }
        }
    }
}

/// Running per-`(i, m)` quantities along the time grid.
struct TiltState {
    level: Vec<f64>,
    log_density: Vec<f64>,
    drift: Vec<f64>,
    theta_sq: Vec<f64>,
}

impl TiltState {
    fn new(len: usize) -> Self {
        Self {
            level: vec![0.0; len],
            log_density: vec![0.0; len],
            drift: vec![0.0; len],
            theta_sq: vec![0.0; len],
        }
    }

    /// Advances from node `k` to `k + 1`; theta is evaluated at the left end.
    fn step(&mut self, noise: &NoiseEnsemble, theta: &ThetaProcess, k: usize) {
        let grids = noise.grids();
        let (t, dt) = (grids.time.node(k), grids.time.dt());
        let increments = noise.increments_at(k);
        self.level
            .par_iter_mut()
            .zip(self.log_density.par_iter_mut())
            .zip(self.drift.par_iter_mut())
            .zip(self.theta_sq.par_iter_mut())
            .zip(increments.par_iter())
            .for_each(|((((b, log_e), drift), sq), &db)| {
                let th = theta.value(t, *b);
                *log_e += th * db - 0.5 * th * th * dt;
                *drift += th * dt;
                *sq += th * th * dt;
                *b += db;
            });
    }

    /// `W = B - int theta dt`.
    fn shifted(&self) -> Vec<f64> {
        self.level
            .iter()
            .zip(&self.drift)
            .map(|(b, d)| b - d)
            .collect()
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `exp(x - max x)`, floored at the smallest positive normal so that every
/// weight stays strictly positive.
fn shifted_exp(log_w: &[f64]) -> Vec<f64> {
    let top = max_of(log_w);
    log_w
        .iter()
        .map(|x| (x - top).exp().max(f64::MIN_POSITIVE))
        .collect()
}

/// Mean and standard error of `exp(x)` over a sample of log values.
fn exp_mean_and_se(log_w: &[f64]) -> (f64, f64) {
    let top = max_of(log_w);
    let terms: Vec<f64> = log_w.iter().map(|x| (x - top).exp()).collect();
    let n = terms.len() as f64;
    let mean = reduce::mean(&terms);
    let var = reduce::pairwise_sum_by(&terms, |e| (e - mean) * (e - mean)) / (n - 1.0).max(1.0);
    let scale = top.exp();
    (scale * mean, scale * (var / n).sqrt())
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

fn two_sided_p(z: f64) -> f64 {
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

/// Log-densities `log E_{t_k}` for every `(i, m)` at every time node.
#[derive(Debug, Clone)]
pub struct DensityWeights {
    grids: Grids,
    n_paths: usize,
    log_weights: Vec<f64>,
}

pub fn density_process(noise: &NoiseEnsemble, theta: &ThetaProcess) -> Result<DensityWeights> {
    theta.validate()?;
    let grids = *noise.grids();
    let slab = grids.index.len() * noise.n_paths();
    let mut state = TiltState::new(slab);
    let mut log_weights = Vec::with_capacity(slab * grids.time.n_nodes());
    log_weights.extend_from_slice(&state.log_density);
    for k in 0..grids.time.n_steps() {
        state.step(noise, theta, k);
        log_weights.extend_from_slice(&state.log_density);
    }
    if let Some(j) = log_weights.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: j / slab,
            index: (j % slab) / noise.n_paths(),
            path: j % noise.n_paths(),
            value: log_weights[j],
        });
    }
    Ok(DensityWeights {
        grids,
        n_paths: noise.n_paths(),
        log_weights,
    })
}

impl DensityWeights {
    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    fn slab(&self) -> usize {
        self.grids.index.len() * self.n_paths
    }

    /// `log E_{t_k}` for all `(i, m)`, index-major.
    pub fn log_weights_at(&self, k: usize) -> &[f64] {
        let s = self.slab();
        &self.log_weights[k * s..(k + 1) * s]
    }

    /// Weights at node `k` rescaled to sum to one.
    pub fn normalized_weights_at(&self, k: usize) -> Vec<f64> {
        let w = shifted_exp(self.log_weights_at(k));
        let total = reduce::pairwise_sum(&w);
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn n_effective_at(&self, k: usize) -> f64 {
        kish_effective_size(&shifted_exp(self.log_weights_at(k)))
    }

    /// Pooled mean of `E_{t_k}` and its standard error.
    pub fn pooled_mean_at(&self, k: usize) -> (f64, f64) {
        exp_mean_and_se(self.log_weights_at(k))
    }

    /// z-scores of the pooled density mean against one, for every node.
    pub fn martingale_z_scores(&self) -> Vec<f64> {
        (0..self.grids.time.n_nodes())
            .map(|k| {
                let (mean, se) = self.pooled_mean_at(k);
                z_score(mean - 1.0, se)
            })
            .collect()
    }
}

/// Monte-Carlo estimate of `E_Q[exp int_0^T theta^2 ds]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NovikovReport {
    pub estimate: f64,
    pub log_estimate: f64,
    pub std_error: f64,
    /// Share of the sum carried by the largest 1% of terms.
    pub top_share: f64,
    /// Set when the top 1% of terms carry more than half of the sum.
    pub heavy_tail: bool,
    /// Exact value where available; `None` when infinite or unknown.
    pub closed_form: Option<f64>,
}

fn novikov_from_exponents(exponents: &[f64], closed_form: Option<f64>) -> NovikovReport {
    let n = exponents.len();
    let top = max_of(exponents);
    let mut terms: Vec<f64> = exponents.iter().map(|x| (x - top).exp()).collect();
    let (estimate, std_error) = exp_mean_and_se(exponents);
    let log_estimate = top + reduce::mean(&terms).ln();
    terms.sort_by(|a, b| b.total_cmp(a));
    let n_top = n.div_ceil(100);
    let top_share = reduce::pairwise_sum(&terms[..n_top]) / reduce::pairwise_sum(&terms);
    NovikovReport {
        estimate,
        log_estimate,
        std_error,
        top_share,
        heavy_tail: top_share > 0.5,
        closed_form,
    }
}

pub fn novikov_estimate(noise: &NoiseEnsemble, theta: &ThetaProcess) -> Result<NovikovReport> {
    theta.validate()?;
    let mut state = TiltState::new(noise.n_index() * noise.n_paths());
    for k in 0..noise.n_steps() {
        state.step(noise, theta, k);
    }
    let report = novikov_from_exponents(
        &state.theta_sq,
        theta.novikov_closed_form(noise.grids().time.horizon()),
    );
    if report.heavy_tail {
        log::warn!(
            "novikov estimate is dominated by its largest terms (top 1% carry {:.0}%)",
            100.0 * report.top_share
        );
    }
    Ok(report)
}

/// `W_k = B_k - sum_{j<k} theta_j dt` for every `(i, m, k)`.
pub fn shifted_process(noise: &NoiseEnsemble, theta: &ThetaProcess) -> Result<PathEnsemble> {
    theta.validate()?;
    let mut out = PathEnsemble::zeros(*noise.grids(), noise.n_paths());
    let mut state = TiltState::new(noise.n_index() * noise.n_paths());
    for k in 0..noise.n_steps() {
        state.step(noise, theta, k);
        out.at_mut(k + 1).copy_from_slice(&state.shifted());
    }
    Ok(out)
}

/// Tuning for [`verify_girsanov`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GirsanovOptions {
    /// Family-wise level shared by the distributional checks.
    pub alpha: f64,
    /// Indices sampled for the per-index drift check.
    pub n_indices: usize,
    /// Index pairs sampled for the pairwise independence check.
    pub n_pairs: usize,
    pub n_bins: usize,
    /// Smallest acceptable Kish effective size of the terminal weights.
    pub min_effective_sample: f64,
}

impl Default for GirsanovOptions {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            n_indices: 10,
            n_pairs: 20,
            n_bins: 4,
            min_effective_sample: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GirsanovReport {
    pub theta: ThetaProcess,
    pub alpha: f64,
    /// Kish effective size of the pooled terminal weights.
    pub n_effective: f64,
    /// Smallest effective size among the leave-one-out path weights.
    pub n_effective_path_marginal: f64,
    pub weights_uniform: bool,
    pub checks: Vec<CheckResult>,
    pub novikov: NovikovReport,
    pub all_pass: bool,
}

/// Runs the Girsanov battery on `noise` under tilt `theta`.
///
/// Checks, with `alpha` split evenly over the four distributional families:
/// - `shifted_pooled_law`: weighted KS of the pooled `W_T` against `N(0, T)`.
/// - `shifted_increment_independence`: weighted chi-square on
///   `(W_T - W_{T/2}, W_{T/2})`.
/// - `individual_drift`: unweighted per-index mean of `W^u_T` equals the
///   negative expected drift (so each `W^u` alone is not a standard
///   Brownian motion when the drift is non-zero).
/// - `index_brownian_law`: each `B^u_T` weighted by the tilt's marginal on
///   paths, pooled over `u`, against `N(0, T)`.
/// - `index_pairwise_independence`: `(B^u_T, B^v_T)` under the same path
///   marginal, over random pairs.
/// - `density_mean` and `density_martingale`: pooled mean of `E_t` is one.
/// - `weight_elln`: index average of `E_T` is one path by path.
///
/// The path marginal for index `u` is `(1/(N-1)) sum_{v != u} E_T(v, m)`.
/// Leaving `u` out mimics the null mass of a single index in the continuum.
pub fn verify_girsanov(
    noise: &NoiseEnsemble,
    theta: &ThetaProcess,
    options: &GirsanovOptions,
) -> Result<GirsanovReport> {
    theta.validate()?;
    let grids = *noise.grids();
    let (n, m) = (noise.n_index(), noise.n_paths());
    if n < 3 {
        return Err(Error::InvalidArgument(
            "girsanov checks need at least 3 indices".into(),
        ));
    }
    if grids.time.n_steps() < 2 {
        return Err(Error::InvalidArgument(
            "girsanov checks need at least 2 time steps".into(),
        ));
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) || options.n_bins < 2 {
        return Err(Error::InvalidArgument(
            "alpha must lie in (0, 1) and n_bins be at least 2".into(),
        ));
    }
    let horizon = grids.time.horizon();
    let mid = grids.time.n_steps() / 2;

    let mut state = TiltState::new(n * m);
    let mut martingale_max_z: f64 = 0.0;
    let mut w_mid = Vec::new();
    for k in 0..grids.time.n_steps() {
        state.step(noise, theta, k);
        let (mean, se) = exp_mean_and_se(&state.log_density);
        martingale_max_z = martingale_max_z.max(z_score(mean - 1.0, se).abs());
        if k + 1 == mid {
            w_mid = state.shifted();
        }
    }
    if let Some(j) = state.log_density.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: grids.time.n_steps(),
            index: j / m,
            path: j % m,
            value: state.log_density[j],
        });
    }
    let w_final = state.shifted();
    let b_final = &state.level;
    let weights = shifted_exp(&state.log_density);
    let n_effective = kish_effective_size(&weights);
    if n_effective < options.min_effective_sample {
        return Err(Error::InsufficientEffectiveSample {
            n_effective,
            required: options.min_effective_sample,
        });
    }
    let weights_uniform = weights.windows(2).all(|w| w[0] == w[1]);
    let family_alpha = options.alpha / 4.0;
    let mut checks = Vec::new();

    let ks = ks_test_normal_weighted(
        &WeightedSample::new(w_final.clone(), weights.clone())?,
        0.0,
        horizon,
    )?;
    checks.push(CheckResult {
        name: "shifted_pooled_law".into(),
        statistic: ks.statistic,
        p_value: Some(ks.p_value),
        pass: !ks.reject_at(family_alpha),
        note: None,
    });

    let increments: Vec<f64> = w_final.iter().zip(&w_mid).map(|(t, s)| t - s).collect();
    let indep = pairwise_independence_check(&increments, &w_mid, options.n_bins, Some(&weights))?;
    checks.push(CheckResult {
        name: "shifted_increment_independence".into(),
        statistic: indep.chi2,
        p_value: Some(indep.p_value),
        pass: !indep.reject_at(family_alpha),
        note: None,
    });

    let mut selector = noise.key().stream(domain::SELECTION, 0);
    let chosen = sample_indices(&mut selector, n, options.n_indices.min(n)).into_vec();
    let target = -theta.expected_drift(&grids);
    let mut max_z: f64 = 0.0;
    let mut non_standard = 0;
    for &i in &chosen {
        let col = &w_final[i * m..(i + 1) * m];
        let r = moment_check(col, target, horizon)?;
        max_z = max_z.max(r.z_mean.abs());
        let z_standard = moment_check(col, 0.0, horizon)?.z_mean;
        if z_standard.abs() > 4.0 {
            non_standard += 1;
        }
    }
    checks.push(CheckResult {
        name: "individual_drift".into(),
        statistic: max_z,
        p_value: Some(two_sided_p(max_z)),
        pass: max_z <= 4.0,
        note: Some(format!(
            "target mean {target}; {non_standard} of {} indices differ from a standard Brownian mean",
            chosen.len()
        )),
    });

    let path_totals: Vec<f64> = (0..m)
        .map(|p| {
            let column: Vec<f64> = (0..n).map(|i| weights[i * m + p]).collect();
            reduce::pairwise_sum(&column)
        })
        .collect();
    let marginal = |excluded: &[usize]| -> Vec<f64> {
        let denom = (n - excluded.len()) as f64;
        (0..m)
            .map(|p| {
                let own: f64 = excluded.iter().map(|&i| weights[i * m + p]).sum();
                ((path_totals[p] - own) / denom).max(f64::MIN_POSITIVE)
            })
            .collect()
    };
    let mut index_weights = Vec::with_capacity(n * m);
    let mut min_path_n_eff = f64::INFINITY;
    for i in 0..n {
        let w = marginal(&[i]);
        min_path_n_eff = min_path_n_eff.min(kish_effective_size(&w));
        index_weights.extend(w);
    }
    let ks = ks_test_normal_weighted(
        &WeightedSample::new(b_final.clone(), index_weights)?,
        0.0,
        horizon,
    )?;
    checks.push(CheckResult {
        name: "index_brownian_law".into(),
        statistic: ks.statistic,
        p_value: Some(ks.p_value),
        pass: !ks.reject_at(family_alpha),
        note: None,
    });

    let pair_alpha = family_alpha / options.n_pairs.max(1) as f64;
    let mut min_p: f64 = 1.0;
    let mut max_chi2: f64 = 0.0;
    for _ in 0..options.n_pairs {
        let u = selector.gen_range(0..n);
        let v = (u + selector.gen_range(1..n)) % n;
        let w = marginal(&[u, v]);
        let r = pairwise_independence_check(
            &b_final[u * m..(u + 1) * m],
            &b_final[v * m..(v + 1) * m],
            options.n_bins,
            Some(&w),
        )?;
        min_p = min_p.min(r.p_value);
        max_chi2 = max_chi2.max(r.chi2);
    }
    checks.push(CheckResult {
        name: "index_pairwise_independence".into(),
        statistic: max_chi2,
        p_value: Some(min_p),
        pass: min_p >= pair_alpha,
        note: Some(format!(
            "{} pairs, per-pair level {pair_alpha:e}",
            options.n_pairs
        )),
    });

    let (mean, se) = exp_mean_and_se(&state.log_density);
    let z = z_score(mean - 1.0, se);
    checks.push(CheckResult {
        name: "density_mean".into(),
        statistic: z,
        p_value: Some(two_sided_p(z)),
        pass: z.abs() <= 4.0,
        note: Some(format!("pooled mean {mean} with standard error {se}")),
    });
    checks.push(CheckResult {
        name: "density_martingale".into(),
        statistic: martingale_max_z,
        p_value: None,
        pass: martingale_max_z <= 4.0,
        note: Some("largest |z| of the pooled density mean over all time nodes".into()),
    });

    // path-by-path index averages of E_T, in absolute scale
    let scale = max_of(&state.log_density).exp();
    let pooled_var = se * se * (n * m) as f64;
    let bound = 4.0 * (pooled_var / n as f64).sqrt();
    let within = path_totals
        .iter()
        .filter(|&&total| (scale * total / n as f64 - 1.0).abs() <= bound)
        .count();
    let fraction = within as f64 / m as f64;
    checks.push(CheckResult {
        name: "weight_elln".into(),
        statistic: fraction,
        p_value: None,
        pass: fraction >= 0.99,
        note: Some(format!(
            "share of paths whose index-averaged density is within {bound:e} of one"
        )),
    });

    let novikov = novikov_from_exponents(&state.theta_sq, theta.novikov_closed_form(horizon));
    if novikov.heavy_tail {
        log::warn!(
            "novikov estimate is heavy-tailed; the density may fail to be a true martingale"
        );
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(GirsanovReport {
        theta: *theta,
        alpha: options.alpha,
        n_effective,
        n_effective_path_marginal: min_path_n_eff,
        weights_uniform,
        checks,
        novikov,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate_epi_brownian;
    use crate::stattest::ks_test_normal;

    fn noise(t: f64, k: usize, n: usize, m: usize, seed: u64) -> NoiseEnsemble {
        generate_epi_brownian(Grids::new(t, k, n).unwrap(), m, seed).unwrap()
    }

    #[test]
    fn zero_tilt_gives_unit_density() {
        let e = noise(1.0, 8, 4, 50, 1);
        let d = density_process(&e, &ThetaProcess::Constant { c: 0.0 }).unwrap();
        for k in 0..=8 {
            assert!(d.log_weights_at(k).iter().all(|&x| x == 0.0));
        }
        assert_eq!(d.pooled_mean_at(8), (1.0, 0.0));
        assert_eq!(d.martingale_z_scores(), vec![0.0; 9]);
        let n = novikov_estimate(&e, &ThetaProcess::Constant { c: 0.0 }).unwrap();
        assert_eq!(n.estimate, 1.0);
    }

    #[test]
    fn constant_tilt_telescopes() {
        let (c, t) = (0.7, 1.0);
        let e = noise(t, 64, 8, 200, 2);
        let d = density_process(&e, &ThetaProcess::Constant { c }).unwrap();
        let b_t = e.levels_at(64).unwrap();
        for (log_e, b) in d.log_weights_at(64).iter().zip(&b_t) {
            let direct = c * b - 0.5 * c * c * t;
            assert!((log_e - direct).abs() <= 1e-12, "{log_e} vs {direct}");
        }
    }

    #[test]
    fn density_has_unit_mean() {
        let e = noise(1.0, 16, 100, 1000, 3);
        let d = density_process(&e, &ThetaProcess::Constant { c: 1.0 }).unwrap();
        let (mean, se) = d.pooled_mean_at(16);
        assert!((mean - 1.0).abs() <= 4.0 * se, "{mean} +- {se}");
        assert!(d.martingale_z_scores().iter().all(|z| z.abs() <= 4.0));
        let w = d.normalized_weights_at(16);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn shifted_process_kinds() {
        let e = noise(1.0, 10, 3, 20, 4);
        let b = e.brownian_paths();
        let w0 = shifted_process(&e, &ThetaProcess::Constant { c: 0.0 }).unwrap();
        assert_eq!(w0.data(), b.data());
        let c = 0.5;
        let wc = shifted_process(&e, &ThetaProcess::Constant { c }).unwrap();
        for (x, y) in wc.at(10).iter().zip(b.at(10)) {
            assert!((x - (y - c)).abs() < 1e-14);
        }
        // brute force: W_T = B_T - kappa sum_k B_k dt
        let kappa = 0.1;
        let wk = shifted_process(&e, &ThetaProcess::AdaptedLinear { kappa }).unwrap();
        let dt = 0.1;
        for i in 0..3 {
            for p in 0..20 {
                let mut level = 0.0;
                let mut integral = 0.0;
                for k in 0..10 {
                    integral += kappa * level * dt;
                    level += e.increment(i, p, k);
                }
                assert!((wk.get(i, p, 10) - (level - integral)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn novikov_constant_and_adapted() {
        let e = noise(1.0, 64, 50, 1000, 5);
        for c in [0.5, 1.0] {
            let r = novikov_estimate(&e, &ThetaProcess::Constant { c }).unwrap();
            let exact = (c * c).exp();
            assert!((r.estimate - exact).abs() <= 4.0 * r.std_error + 1e-12 * exact);
            assert!(!r.heavy_tail);
        }
        let theta = ThetaProcess::AdaptedLinear { kappa: 0.5 };
        let r = novikov_estimate(&e, &theta).unwrap();
        let exact = theta.novikov_closed_form(1.0).unwrap();
        assert!((r.estimate / exact - 1.0).abs() <= 0.1, "{r:?} vs {exact}");
        assert!(!r.heavy_tail);
    }

    #[test]
    fn divergent_novikov_is_flagged() {
        let theta = ThetaProcess::AdaptedLinear { kappa: 3.0 };
        assert_eq!(theta.novikov_closed_form(1.0), None);
        let r = novikov_estimate(&noise(1.0, 64, 20, 500, 6), &theta).unwrap();
        assert!(r.heavy_tail, "{r:?}");
    }

    #[test]
    fn closed_forms() {
        let t = ThetaProcess::TimeAffine {
            intercept: 1.0,
            slope: 0.0,
        };
        assert!((t.novikov_closed_form(2.0).unwrap() - 2f64.exp()).abs() < 1e-14);
        let g = Grids::new(1.0, 4, 2).unwrap();
        let affine = ThetaProcess::TimeAffine {
            intercept: 0.0,
            slope: 1.0,
        };
        // left Riemann sum of t over four steps
        assert!((affine.expected_drift(&g) - 0.375).abs() < 1e-15);
        assert_eq!(
            ThetaProcess::AdaptedLinear { kappa: 1.0 }.expected_drift(&g),
            0.0
        );
    }

    #[test]
    fn zero_tilt_report_passes_trivially() {
        let e = noise(1.0, 16, 16, 500, 7);
        let r = verify_girsanov(
            &e,
            &ThetaProcess::Constant { c: 0.0 },
            &GirsanovOptions::default(),
        )
        .unwrap();
        assert!(r.weights_uniform);
        assert!(r.all_pass, "{r:#?}");
        assert_eq!(r.n_effective, (16 * 500) as f64);
    }

    #[test]
    fn constant_tilt_report() {
        let e = noise(1.0, 32, 64, 1500, 8);
        let r = verify_girsanov(
            &e,
            &ThetaProcess::Constant { c: 0.5 },
            &GirsanovOptions::default(),
        )
        .unwrap();
        assert!(r.all_pass, "{r:#?}");
        let drift = r
            .checks
            .iter()
            .find(|c| c.name == "individual_drift")
            .unwrap();
        assert!(drift.note.as_deref().unwrap().contains("10 of 10"));
    }

    #[test]
    fn starved_weights_are_refused() {
        let e = noise(1.0, 16, 4, 100, 9);
        let err = verify_girsanov(
            &e,
            &ThetaProcess::Constant { c: 0.5 },
            &GirsanovOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientEffectiveSample { .. }));
    }

    #[test]
    fn individual_law_is_invariant() {
        // fixed-index W^u: unweighted and path-marginal weighted KS agree
        let (c, t, n, m) = (0.5, 1.0, 32, 2000);
        let e = noise(t, 16, n, m, 10);
        let theta = ThetaProcess::Constant { c };
        let w = shifted_process(&e, &theta).unwrap();
        let d = density_process(&e, &theta).unwrap();
        let log_t = d.log_weights_at(16);
        for i in 0..20 {
            let col = w.index_slice(i, 16).to_vec();
            let marginal: Vec<f64> = (0..m)
                .map(|p| {
                    (0..n)
                        .filter(|&v| v != i)
                        .map(|v| log_t[v * m + p].exp())
                        .sum::<f64>()
                        / (n - 1) as f64
                })
                .collect();
            let plain = ks_test_normal(&col, -c * t, t).unwrap();
            let weighted =
                ks_test_normal_weighted(&WeightedSample::new(col, marginal).unwrap(), -c * t, t)
                    .unwrap();
            assert_eq!(plain.reject_at(0.01), weighted.reject_at(0.01), "index {i}");
        }
    }
}
