//! Uniform discretizations of the time horizon and of the index space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_k = k * T / K` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        if n_steps >= u32::MAX as usize {
            return Err(Error::InvalidGrid(format!("n_steps {n_steps} too large")));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Node `t_k`; the last node is exactly `T`.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.node(k)).collect()
    }

    /// The grid with `factor` times as many steps on the same horizon.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.n_steps * factor)
    }
}

/// Midpoint grid `u_i = (i + 1/2) / N` on `[0, 1]` with weights `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexGrid {
    n_index: usize,
}

impl IndexGrid {
    pub fn new(n_index: usize) -> Result<Self> {
        if n_index == 0 {
            return Err(Error::InvalidGrid("n_index must be at least 1".into()));
        }
        if n_index >= u32::MAX as usize {
            return Err(Error::InvalidGrid(format!("n_index {n_index} too large")));
        }
        Ok(Self { n_index })
    }

    pub fn len(&self) -> usize {
        self.n_index
    }

    pub fn is_empty(&self) -> bool {
        self.n_index == 0
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_index as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_index).map(|i| self.node(i)).collect()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.n_index as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.weight(); self.n_index]
    }
}

/// Time and index grids together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub time: TimeGrid,
    pub index: IndexGrid,
}

impl Grids {
    pub fn new(horizon: f64, n_steps: usize, n_index: usize) -> Result<Self> {
        Ok(Self {
            time: TimeGrid::new(horizon, n_steps)?,
            index: IndexGrid::new(n_index)?,
        })
    }
}
