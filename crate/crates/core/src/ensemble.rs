//! Dense `(index, path, time)` arrays.

use crate::error::{Error, Result};
use crate::grid::Grids;
use crate::reduce;

/// A process sampled on `N` indices, `M` paths and `K + 1` time nodes.
///
/// Storage is time-major: all `(i, m)` values of node `k` are contiguous,
/// ordered by index then path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grids: Grids,
    n_paths: usize,
    data: Vec<f64>,
}

impl PathEnsemble {
    pub fn zeros(grids: Grids, n_paths: usize) -> Self {
        let len = grids.index.len() * n_paths * grids.time.n_nodes();
        Self {
            grids,
            n_paths,
            data: vec![0.0; len],
        }
    }

    /// Builds an ensemble from time-major data.
    pub fn from_time_major(grids: Grids, n_paths: usize, data: Vec<f64>) -> Result<Self> {
        let expected = grids.index.len() * n_paths * grids.time.n_nodes();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            grids,
            n_paths,
            data,
        })
    }

    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn n_index(&self) -> usize {
        self.grids.index.len()
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_nodes(&self) -> usize {
        self.grids.time.n_nodes()
    }

    fn slab(&self) -> usize {
        self.n_index() * self.n_paths
    }

    pub fn get(&self, i: usize, m: usize, k: usize) -> f64 {
        self.data[k * self.slab() + i * self.n_paths + m]
    }

    /// All `(i, m)` values at node `k`, index-major.
    pub fn at(&self, k: usize) -> &[f64] {
        let s = self.slab();
        &self.data[k * s..(k + 1) * s]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        let s = self.slab();
        &mut self.data[k * s..(k + 1) * s]
    }

    /// The `M` path values of index `i` at node `k`.
    pub fn index_slice(&self, i: usize, k: usize) -> &[f64] {
        let start = k * self.slab() + i * self.n_paths;
        &self.data[start..start + self.n_paths]
    }

    /// One trajectory `(x_0, ..., x_K)`.
    pub fn path(&self, i: usize, m: usize) -> Vec<f64> {
        (0..self.n_nodes()).map(|k| self.get(i, m, k)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Path averages per index at node `k` (an estimate of the mean flow).
    pub fn index_means(&self, k: usize) -> Vec<f64> {
        (0..self.n_index())
            .map(|i| reduce::mean(self.index_slice(i, k)))
            .collect()
    }

    /// Average over both axes at node `k`.
    pub fn pooled_mean(&self, k: usize) -> f64 {
        reduce::mean(self.at(k))
    }

    /// Applies `f` elementwise, keeping the layout.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let s = self.slab();
        let n_paths = self.n_paths;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(pos, &x)| f((pos % s) / n_paths, x))
            .collect();
        Self {
            grids: self.grids,
            n_paths,
            data,
        }
    }

    /// `sqrt( mean over (i, m) of sup_k |x|^2 )`, the path-space L2 norm.
    pub fn path_space_norm(&self) -> f64 {
        let s = self.slab();
        let mut sup = vec![0.0f64; s];
        for k in 0..self.n_nodes() {
            for (acc, &x) in sup.iter_mut().zip(self.at(k)) {
                *acc = acc.max(x * x);
            }
        }
        reduce::mean(&sup).sqrt()
    }
}
