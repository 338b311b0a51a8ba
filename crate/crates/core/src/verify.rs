//! Test batteries for Brownian families: the pooled process is a Brownian
//! motion, each member is one, members are pairwise independent, and the
//! sign-flip family that breaks the converse.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{pooled_increments, NoiseEnsemble};
use crate::rng::domain;
use crate::stattest::{ks_test_normal, moment_check, pairwise_independence_check, CheckResult};

/// Tuning shared by the Brownian batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryOptions {
    /// Family-wise level of the goodness-of-fit checks.
    pub alpha: f64,
    /// Family-wise level of the pairwise independence checks.
    pub alpha_independence: f64,
    /// Disjoint time intervals for the pooled battery.
    pub n_intervals: usize,
    /// Indices sampled for the per-index battery.
    pub n_indices: usize,
    /// Index pairs sampled for the per-index battery.
    pub n_pairs: usize,
    pub n_bins: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            alpha_independence: 0.001,
            n_intervals: 5,
            n_indices: 20,
            n_pairs: 50,
            n_bins: 4,
        }
    }
}

impl BatteryOptions {
    pub fn validate(&self) -> Result<()> {
        let level_ok = |a: f64| a > 0.0 && a < 1.0;
        if !level_ok(self.alpha) || !level_ok(self.alpha_independence) {
            return Err(Error::InvalidArgument(
                "significance levels must lie in (0, 1)".into(),
            ));
        }
        if self.n_intervals == 0 || self.n_indices == 0 || self.n_pairs == 0 || self.n_bins < 2 {
            return Err(Error::InvalidArgument(
                "battery sizes must be positive and n_bins at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// A named list of checks; `pass` is true when every check passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl BatteryReport {
    fn new(name: &str, checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            name: name.into(),
            checks,
            pass,
        }
    }
}

/// Boundaries of `n` consecutive intervals covering `0..=n_steps`.
pub fn interval_bounds(n_steps: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > n_steps {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n_steps} steps into {n} non-empty intervals"
        )));
    }
    Ok((0..=n).map(|j| j * n_steps / n).collect())
}

/// Pooled increments over disjoint intervals each follow `N(0, length)`,
/// and increments of neighbouring intervals are independent.
pub fn pooled_brownian_battery(
    noise: &NoiseEnsemble,
    options: &BatteryOptions,
) -> Result<BatteryReport> {
    options.validate()?;
    let time = noise.grids().time;
    let bounds = interval_bounds(time.n_steps(), options.n_intervals)?;
    let n_ks = options.n_intervals as f64;
    let mut checks = Vec::new();
    let mut samples = Vec::new();
    for w in bounds.windows(2) {
        let (s, t) = (w[0], w[1]);
        let length = time.node(t) - time.node(s);
        let inc = pooled_increments(noise, s, t)?;
        let ks = ks_test_normal(&inc, 0.0, length)?;
        let moments = moment_check(&inc, 0.0, length)?;
        checks.push(CheckResult {
            name: format!("pooled_increment_law[{s},{t})"),
            statistic: ks.statistic,
            p_value: Some(ks.p_value),
            pass: !ks.reject_at(options.alpha / n_ks),
            note: Some(format!(
                "z_mean {:.3}, z_var {:.3}",
                moments.z_mean, moments.z_var
            )),
        });
        samples.push(inc);
    }
    let n_pairs = (samples.len() - 1).max(1) as f64;
    for (j, pair) in samples.windows(2).enumerate() {
        let r = pairwise_independence_check(&pair[0], &pair[1], options.n_bins, None)?;
        checks.push(CheckResult {
            name: format!("pooled_increment_independence[{j},{}]", j + 1),
            statistic: r.chi2,
            p_value: Some(r.p_value),
            pass: !r.reject_at(options.alpha / n_pairs),
            note: None,
        });
    }
    Ok(BatteryReport::new("pooled_brownian", checks))
}

/// Sampled indices are each Brownian (level at the mid node and the
/// increment from there to the horizon), and sampled pairs of terminal
/// levels are independent.
pub fn index_brownian_battery(
    noise: &NoiseEnsemble,
    options: &BatteryOptions,
) -> Result<BatteryReport> {
    options.validate()?;
    let (n, m) = (noise.n_index(), noise.n_paths());
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the per-index battery needs at least 2 indices".into(),
        ));
    }
    let time = noise.grids().time;
    let mid = time.n_steps() / 2;
    if mid == 0 {
        return Err(Error::InvalidArgument(
            "the per-index battery needs at least 2 time steps".into(),
        ));
    }
    let first = noise.levels_at(mid)?;
    let second = pooled_increments(noise, mid, time.n_steps())?;
    let terminal: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a + b).collect();
    let (t_mid, rest) = (time.node(mid), time.horizon() - time.node(mid));

    let mut selector = noise.key().stream(domain::SELECTION, 1);
    let chosen = sample_indices(&mut selector, n, options.n_indices.min(n)).into_vec();
    let per_test = options.alpha / (2 * chosen.len()) as f64;
    let mut checks = Vec::new();
    for &i in &chosen {
        let slice = |v: &[f64]| v[i * m..(i + 1) * m].to_vec();
        let a = ks_test_normal(&slice(&first), 0.0, t_mid)?;
        let b = ks_test_normal(&slice(&second), 0.0, rest)?;
        let worst = if a.p_value <= b.p_value { a } else { b };
        checks.push(CheckResult {
            name: format!("index_law[{i}]"),
            statistic: worst.statistic,
            p_value: Some(worst.p_value),
            pass: !a.reject_at(per_test) && !b.reject_at(per_test),
            note: None,
        });
    }
    let per_pair = options.alpha_independence / options.n_pairs as f64;
    for _ in 0..options.n_pairs {
        let u = selector.gen_range(0..n);
        let v = (u + selector.gen_range(1..n)) % n;
        let r = pairwise_independence_check(
            &terminal[u * m..(u + 1) * m],
            &terminal[v * m..(v + 1) * m],
            options.n_bins,
            None,
        )?;
        checks.push(CheckResult {
            name: format!("index_pair_independence[{u},{v}]"),
            statistic: r.chi2,
            p_value: Some(r.p_value),
            pass: !r.reject_at(per_pair),
            note: None,
        });
    }
    Ok(BatteryReport::new("index_brownian", checks))
}

/// Terminal values of the sign-flip family, index-major.
pub fn sign_flip_terminal(noise: &NoiseEnsemble) -> Result<Vec<f64>> {
    let nodes = noise.grids().index.nodes();
    let m = noise.n_paths();
    let mut b = noise.levels_at(noise.n_steps())?;
    for (j, x) in b.iter_mut().enumerate() {
        *x = if nodes[j / m] >= 0.5 {
            x.abs()
        } else {
            -x.abs()
        };
    }
    Ok(b)
}

/// p-value below which a single index counts as non-Brownian.
pub const COUNTEREXAMPLE_REJECTION: f64 = 1e-6;

/// The sign-flip family at the horizon: every index must be rejected as
/// `N(0, T)` while the pooled sample is accepted.
pub fn counterexample_battery(
    noise: &NoiseEnsemble,
    options: &BatteryOptions,
) -> Result<BatteryReport> {
    options.validate()?;
    let (n, m) = (noise.n_index(), noise.n_paths());
    let horizon = noise.grids().time.horizon();
    let x = sign_flip_terminal(noise)?;
    let mut checks = Vec::new();
    for i in 0..n {
        let r = ks_test_normal(&x[i * m..(i + 1) * m], 0.0, horizon)?;
        checks.push(CheckResult {
            name: format!("index_rejected[{i}]"),
            statistic: r.statistic,
            p_value: Some(r.p_value),
            pass: r.p_value < COUNTEREXAMPLE_REJECTION,
            note: None,
        });
    }
    let pooled = ks_test_normal(&x, 0.0, horizon)?;
    let note = (n % 2 == 1)
        .then(|| "odd number of indices: the pooled law is not an even mixture".to_string());
    checks.push(CheckResult {
        name: "pooled_accepted".into(),
        statistic: pooled.statistic,
        p_value: Some(pooled.p_value),
        pass: !pooled.reject_at(options.alpha),
        note,
    });
    Ok(BatteryReport::new("counterexample", checks))
}

/// Equal-width histogram with a reference normal density per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub reference: Vec<f64>,
}

impl Histogram {
    /// Bins `values` (optionally weighted) on `mean +- 4 sd` and compares
    /// with the `N(mean, var)` bin averages.
    pub fn normal_reference(
        values: &[f64],
        weights: Option<&[f64]>,
        n_bins: usize,
        mean: f64,
        var: f64,
    ) -> Self {
        let sd = var.sqrt();
        let (lo, hi) = (mean - 4.0 * sd, mean + 4.0 * sd);
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|j| lo + j as f64 * width).collect();
        let mut mass = vec![0.0; n_bins];
        let mut total = 0.0;
        for (j, &v) in values.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[j]);
            total += w;
            if v >= lo && v < hi {
                mass[(((v - lo) / width) as usize).min(n_bins - 1)] += w;
            }
        }
        let density = mass.iter().map(|c| c / (total * width)).collect();
        let cdf = |x: f64| crate::stattest::normal_cdf((x - mean) / sd);
        let reference = edges
            .windows(2)
            .map(|e| (cdf(e[1]) - cdf(e[0])) / width)
            .collect();
        Self {
            edges,
            density,
            reference,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,density,reference_density\n");
        for (j, (d, r)) in self.density.iter().zip(&self.reference).enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[j],
                self.edges[j + 1],
                d,
                r
            ));
        }
        out
    }
}
