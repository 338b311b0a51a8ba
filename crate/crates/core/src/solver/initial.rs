use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::IndexGrid;
use crate::rng::{domain, RngKey};

/// Law of the state at time zero, possibly depending on the index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Constant {
        x0: f64,
    },
    /// `x0(u) = intercept + slope * u`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `x0(u) = offset + amplitude * sin(2 pi frequency u)`
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Independent `N(mean, var)` draws for every `(i, m)`.
    IidNormal {
        mean: f64,
        var: f64,
    },
}

impl InitialCondition {
    pub fn validate(&self, grid: &IndexGrid) -> Result<()> {
        let params: &[f64] = match self {
            InitialCondition::Constant { x0 } => &[*x0],
            InitialCondition::Affine { intercept, slope } => &[*intercept, *slope],
            InitialCondition::Sine {
                offset,
                amplitude,
                frequency,
            } => &[*offset, *amplitude, *frequency],
            InitialCondition::IidNormal { mean, var } => {
                if *var < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "initial variance {var} is negative"
                    )));
                }
                &[*mean, *var]
            }
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "initial condition parameters must be finite".into(),
            ));
        }
        // square integrability on the discretized index space
        let means: Vec<f64> = grid.nodes().iter().map(|&u| self.index_mean(u)).collect();
        let norm = crate::stattest::weighted_l2_norm(&means, &grid.weights())?;
        if !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "initial condition is not square integrable".into(),
            ));
        }
        Ok(())
    }

    /// `E[Theta_0(u, .)]`.
    pub fn index_mean(&self, u: f64) -> f64 {
        match *self {
            InitialCondition::Constant { x0 } => x0,
            InitialCondition::Affine { intercept, slope } => intercept + slope * u,
            InitialCondition::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (std::f64::consts::TAU * frequency * u).sin(),
            InitialCondition::IidNormal { mean, .. } => mean,
        }
    }

    /// Samples `Theta_0` for every `(i, m)`, index-major.
    pub fn sample(&self, grid: &IndexGrid, n_paths: usize, key: RngKey) -> Vec<f64> {
        let nodes = grid.nodes();
        match *self {
            InitialCondition::IidNormal { mean, var } => {
                let sd = var.sqrt();
                (0..grid.len() * n_paths)
                    .into_par_iter()
                    .map(|j| {
                        mean + sd
                            * key.normal_at(domain::INITIAL_CONDITION, j / n_paths, j % n_paths, 0)
                    })
                    .collect()
            }
            _ => nodes
                .iter()
                .flat_map(|&u| std::iter::repeat_n(self.index_mean(u), n_paths))
                .collect(),
        }
    }
}
