//! Graphon SDE systems written as a single equation on the discretized
//! extension space,
//!
//! ```text
//! dTheta_t = b(Theta_t, W[Phi_t]) dt + sigma(Theta_t) dB_t,   Phi_t(u) = E[Theta_t(u, .)]
//! ```
//!
//! Two solvers are provided. [`solve_coupled`] advances all particles
//! together and replaces the expectation by the path average at every step.
//! [`solve_picard`] iterates the fixed-point map that freezes the mean flow,
//! solves the (then decoupled) SDE and returns the new path average. Driven
//! by the same noise they approximate the same object and cross-check each
//! other; [`mean_flow_ode_oracle`] gives a noise-free reference for linear
//! drifts.

mod coefficients;
mod elln;
mod initial;
mod oracle;

pub use coefficients::{Coefficients, Diffusion, Drift};
pub use elln::{elln_check, elln_check_slab, elln_scaling, EllnReport, EllnScaling};
pub use initial::InitialCondition;
pub use oracle::mean_flow_ode_oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::graphon::{build_quadrature_kernel, Graphon, QuadratureKernel};
use crate::grid::Grids;
use crate::noise::NoiseEnsemble;
use crate::reduce;

/// `Phi[i][k]`: expectation over paths of the state at index `i`, node `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFlow {
    grids: Grids,
    values: Vec<f64>,
}

impl MeanFlow {
    pub fn zeros(grids: Grids) -> Self {
        Self {
            grids,
            values: vec![0.0; grids.index.len() * grids.time.n_nodes()],
        }
    }

    /// The flow `Phi_t(u) = column[u]` for every `t`.
    pub fn constant_in_time(grids: Grids, column: &[f64]) -> Result<Self> {
        let mut flow = Self::zeros(grids);
        for k in 0..grids.time.n_nodes() {
            flow.set_column(k, column)?;
        }
        Ok(flow)
    }

    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn n_index(&self) -> usize {
        self.grids.index.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.grids.time.n_nodes()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n_nodes() + k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        let nodes = self.n_nodes();
        self.values[i * nodes + k] = v;
    }

    /// Values of all indices at node `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_index()).map(|i| self.get(i, k)).collect()
    }

    pub fn set_column(&mut self, k: usize, column: &[f64]) -> Result<()> {
        if column.len() != self.n_index() {
            return Err(Error::DimensionMismatch {
                expected: self.n_index(),
                actual: column.len(),
            });
        }
        for (i, &v) in column.iter().enumerate() {
            self.set(i, k, v);
        }
        Ok(())
    }

    /// Trajectory `t -> Phi_t(u_i)`.
    pub fn row(&self, i: usize) -> &[f64] {
        let nodes = self.n_nodes();
        &self.values[i * nodes..(i + 1) * nodes]
    }

    /// Path averages of an ensemble at every node.
    pub fn from_paths(paths: &PathEnsemble) -> Self {
        let mut flow = Self::zeros(*paths.grids());
        for k in 0..paths.n_nodes() {
            for (i, v) in paths.index_means(k).into_iter().enumerate() {
                flow.set(i, k, v);
            }
        }
        flow
    }

    fn check_same_shape(&self, other: &MeanFlow) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                actual: other.values.len(),
            });
        }
        Ok(())
    }

    /// Distances to another flow on the same grids.
    pub fn distance(&self, other: &MeanFlow) -> Result<FlowDistance> {
        self.check_same_shape(other)?;
        let lambda = self.grids.index.weight();
        let dt = self.grids.time.dt();
        let mut sup: f64 = 0.0;
        let mut sup_sq_per_index = Vec::with_capacity(self.n_index());
        let mut integrated_per_index = Vec::with_capacity(self.n_index());
        for i in 0..self.n_index() {
            let diffs: Vec<f64> = self
                .row(i)
                .iter()
                .zip(other.row(i))
                .map(|(a, b)| a - b)
                .collect();
            let row_sup = diffs.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
            sup = sup.max(row_sup);
            sup_sq_per_index.push(lambda * row_sup * row_sup);
            // trapezoid in time
            let sq: Vec<f64> = diffs.iter().map(|d| d * d).collect();
            let inner = reduce::pairwise_sum(&sq) - 0.5 * (sq[0] + sq[sq.len() - 1]);
            integrated_per_index.push(lambda * dt * inner);
        }
        Ok(FlowDistance {
            sup,
            path_sup_l2: reduce::pairwise_sum(&sup_sq_per_index).sqrt(),
            time_integrated_l2: reduce::pairwise_sum(&integrated_per_index).sqrt(),
        })
    }

    /// CSV with one row per time node and one column per index node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for u in self.grids.index.nodes() {
            out.push_str(&format!(",u={u}"));
        }
        out.push('\n');
        for k in 0..self.n_nodes() {
            out.push_str(&format!("{}", self.grids.time.node(k)));
            for i in 0..self.n_index() {
                out.push_str(&format!(",{}", self.get(i, k)));
            }
            out.push('\n');
        }
        out
    }
}

/// Three norms of the difference between two mean flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDistance {
    /// `max_{i,k} |diff|`, the stopping metric.
    pub sup: f64,
    /// `sqrt( sum_i lambda_i sup_k |diff|^2 )`, sup in time inside the index integral.
    pub path_sup_l2: f64,
    /// `sqrt( int_0^T sum_i lambda_i |diff|^2 dt )`, the Gronwall-type norm.
    pub time_integrated_l2: f64,
}

/// One Euler-Maruyama step given the already aggregated interaction
/// `W[phi_k](u_i)` for each index.
fn step_with_interaction(
    state: &[f64],
    interaction: &[f64],
    coeffs: &Coefficients,
    increments: &[f64],
    dt: f64,
    n_paths: usize,
    step: usize,
) -> Result<Vec<f64>> {
    let next: Vec<f64> = state
        .par_iter()
        .zip(increments.par_iter())
        .enumerate()
        .map(|(j, (&x, &db))| {
            let m = interaction[j / n_paths];
            x + coeffs.drift(x, m) * dt + coeffs.diffusion(x) * db
        })
        .collect();
    if let Some(j) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step,
            index: j / n_paths,
            path: j % n_paths,
            value: next[j],
        });
    }
    Ok(next)
}

/// Advances the state slab (index-major, `n_paths` per index) by one step:
/// `x + b(x, W[phi](u_i)) dt + sigma(x) dB`.
#[allow(clippy::too_many_arguments)]
pub fn euler_step(
    state: &[f64],
    phi: &[f64],
    coeffs: &Coefficients,
    kernel: &QuadratureKernel,
    increments: &[f64],
    dt: f64,
    n_paths: usize,
    step: usize,
) -> Result<Vec<f64>> {
    let expected = kernel.len() * n_paths;
    for len in [state.len(), increments.len()] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: len,
            });
        }
    }
    let interaction = kernel.apply(phi)?;
    step_with_interaction(state, &interaction, coeffs, increments, dt, n_paths, step)
}

fn slab_index_means(slab: &[f64], n_paths: usize) -> Vec<f64> {
    slab.par_chunks(n_paths).map(reduce::mean).collect()
}

fn check_noise(grids: &Grids, noise: &NoiseEnsemble) -> Result<()> {
    if noise.grids() != grids {
        return Err(Error::InvalidArgument(
            "noise ensemble was generated on different grids".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CoupledSolution {
    pub paths: PathEnsemble,
    pub mean_flow: MeanFlow,
}

/// Runs the particle system, handing every stored slab to `keep` as
/// `(node, slab)`. Returns the realized mean flow.
fn run_coupled(
    grids: &Grids,
    coeffs: &Coefficients,
    graphon: &Graphon,
    initial: &InitialCondition,
    noise: &NoiseEnsemble,
    mut keep: impl FnMut(usize, &[f64]),
) -> Result<MeanFlow> {
    check_noise(grids, noise)?;
    coeffs.validate()?;
    initial.validate(&grids.index)?;
    let kernel = build_quadrature_kernel(graphon, &grids.index)?;
    let n_paths = noise.n_paths();
    let dt = grids.time.dt();
    let mut mean_flow = MeanFlow::zeros(*grids);
    let mut state = initial.sample(&grids.index, n_paths, noise.key());
    keep(0, &state);
    for k in 0..grids.time.n_steps() {
        let phi = slab_index_means(&state, n_paths);
        mean_flow.set_column(k, &phi)?;
        let increments = noise.increments_at(k);
        state = euler_step(&state, &phi, coeffs, &kernel, &increments, dt, n_paths, k)?;
        keep(k + 1, &state);
    }
    mean_flow.set_column(grids.time.n_steps(), &slab_index_means(&state, n_paths))?;
    Ok(mean_flow)
}

/// Particle solver: at each step the path average per index is computed
/// first, aggregated through the graphon, then every particle is advanced.
pub fn solve_coupled(
    grids: &Grids,
    coeffs: &Coefficients,
    graphon: &Graphon,
    initial: &InitialCondition,
    noise: &NoiseEnsemble,
) -> Result<CoupledSolution> {
    let mut paths = PathEnsemble::zeros(*grids, noise.n_paths());
    let mean_flow = run_coupled(grids, coeffs, graphon, initial, noise, |k, slab| {
        paths.at_mut(k).copy_from_slice(slab)
    })?;
    Ok(CoupledSolution { paths, mean_flow })
}

/// Same dynamics as [`solve_coupled`] but keeps only the terminal slab
/// (index-major), for runs whose full ensemble would not fit in memory.
pub fn solve_coupled_terminal(
    grids: &Grids,
    coeffs: &Coefficients,
    graphon: &Graphon,
    initial: &InitialCondition,
    noise: &NoiseEnsemble,
) -> Result<(Vec<f64>, MeanFlow)> {
    let last = grids.time.n_steps();
    let mut terminal = Vec::new();
    let mean_flow = run_coupled(grids, coeffs, graphon, initial, noise, |k, slab| {
        if k == last {
            terminal = slab.to_vec();
        }
    })?;
    Ok((terminal, mean_flow))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    /// Paths of the last frozen-flow solve; their path average is `mean_flow`.
    pub paths: PathEnsemble,
    pub mean_flow: MeanFlow,
    pub iterations: usize,
    /// Distance between successive iterates, one entry per iteration.
    pub residuals: Vec<FlowDistance>,
    pub converged: bool,
}

/// Solves the SDE with the interaction frozen at `flow`, writing the paths
/// into `paths` and returning their mean flow.
fn solve_frozen(
    kernel: &QuadratureKernel,
    coeffs: &Coefficients,
    flow: &MeanFlow,
    initial_slab: &[f64],
    noise: &NoiseEnsemble,
    paths: &mut PathEnsemble,
) -> Result<MeanFlow> {
    let grids = *paths.grids();
    let n_paths = noise.n_paths();
    let dt = grids.time.dt();
    let mut out = MeanFlow::zeros(grids);
    paths.at_mut(0).copy_from_slice(initial_slab);
    for k in 0..grids.time.n_steps() {
        out.set_column(k, &slab_index_means(paths.at(k), n_paths))?;
        let interaction = kernel.apply(&flow.column(k))?;
        let increments = noise.increments_at(k);
        let next = step_with_interaction(
            paths.at(k),
            &interaction,
            coeffs,
            &increments,
            dt,
            n_paths,
            k,
        )?;
        paths.at_mut(k + 1).copy_from_slice(&next);
    }
    let last = grids.time.n_steps();
    out.set_column(last, &slab_index_means(paths.at(last), n_paths))?;
    Ok(out)
}

/// Fixed-point iteration on mean flows. Starts from the initial path
/// average held constant in time and stops when successive iterates differ
/// by less than `tol` in sup norm, or after `max_iter` iterations.
///
/// When the drift ignores the interaction (or the graphon is zero) the
/// map is constant, so its first image is the fixed point and the
/// iteration stops after one step.
pub fn solve_picard(
    grids: &Grids,
    coeffs: &Coefficients,
    graphon: &Graphon,
    initial: &InitialCondition,
    noise: &NoiseEnsemble,
    settings: PicardSettings,
) -> Result<PicardSolution> {
    if settings.tol.is_nan() || settings.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive, got {}",
            settings.tol
        )));
    }
    if settings.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    check_noise(grids, noise)?;
    coeffs.validate()?;
    initial.validate(&grids.index)?;
    let kernel = build_quadrature_kernel(graphon, &grids.index)?;
    let n_paths = noise.n_paths();
    let initial_slab = initial.sample(&grids.index, n_paths, noise.key());
    let mut flow = MeanFlow::constant_in_time(*grids, &slab_index_means(&initial_slab, n_paths))?;
    let mut paths = PathEnsemble::zeros(*grids, n_paths);
    let constant_map = !coeffs.is_interacting() || graphon.is_zero();

    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..settings.max_iter {
        let next = solve_frozen(&kernel, coeffs, &flow, &initial_slab, noise, &mut paths)?;
        let dist = next.distance(&flow)?;
        log::debug!(
            "picard iteration {}: sup residual {:e}",
            residuals.len() + 1,
            dist.sup
        );
        residuals.push(dist);
        flow = next;
        if constant_map || dist.sup < settings.tol {
            converged = true;
            break;
        }
    }
    Ok(PicardSolution {
        paths,
        mean_flow: flow,
        iterations: residuals.len(),
        residuals,
        converged,
    })
}

/// Monte-Carlo standard error of each mean-flow entry, `sd / sqrt(M)`.
pub fn mean_flow_std_errors(paths: &PathEnsemble) -> MeanFlow {
    let mut se = MeanFlow::zeros(*paths.grids());
    let m = paths.n_paths() as f64;
    for k in 0..paths.n_nodes() {
        for i in 0..paths.n_index() {
            let xs = paths.index_slice(i, k);
            let mean = reduce::mean(xs);
            let var = reduce::pairwise_sum_by(xs, |x| (x - mean) * (x - mean)) / (m - 1.0).max(1.0);
            se.set(i, k, (var / m).sqrt());
        }
    }
    se
}
