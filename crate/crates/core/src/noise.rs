//! Families of independent Brownian motions indexed by the index grid, and
//! the sign-flip counterexamples built from them.
//!
//! A [`NoiseEnsemble`] does not store its increments. Each increment
//! `dB(i, m, k)` is regenerated on demand from the master seed and the
//! counter `(i, m, k)`, so any subset can be produced in any order, on any
//! number of threads, with identical bits.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::grid::{Grids, IndexGrid};
use crate::rng::{domain, RngKey};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEnsemble {
    grids: Grids,
    n_paths: usize,
    key: RngKey,
}

/// Creates the e.p.i. Brownian family for `grids` with `n_paths` sample paths.
pub fn generate_epi_brownian(grids: Grids, n_paths: usize, seed: u64) -> Result<NoiseEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if n_paths >= u32::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "n_paths {n_paths} too large"
        )));
    }
    Ok(NoiseEnsemble {
        grids,
        n_paths,
        key: RngKey::new(seed),
    })
}

impl NoiseEnsemble {
    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn n_index(&self) -> usize {
        self.grids.index.len()
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.grids.time.n_steps()
    }

    pub fn seed(&self) -> u64 {
        self.key.seed()
    }

    pub fn key(&self) -> RngKey {
        self.key
    }

    /// `dB(i, m, k) ~ N(0, dt)`, the increment over `[t_k, t_{k+1}]`.
    #[inline]
    pub fn increment(&self, i: usize, m: usize, k: usize) -> f64 {
        self.grids.time.dt().sqrt() * self.key.normal_at(domain::BROWNIAN, i, m, k)
    }

    /// Increments of step `k` for all `(i, m)`, index-major.
    pub fn increments_at(&self, k: usize) -> Vec<f64> {
        let m_paths = self.n_paths;
        (0..self.n_index() * m_paths)
            .into_par_iter()
            .map(|j| self.increment(j / m_paths, j % m_paths, k))
            .collect()
    }

    /// Sum of increments over steps `[s_idx, t_idx)` for every `(i, m)`,
    /// accumulated in step order.
    fn interval_sums(&self, s_idx: usize, t_idx: usize) -> Vec<f64> {
        let m_paths = self.n_paths;
        (0..self.n_index() * m_paths)
            .into_par_iter()
            .map(|j| {
                let (i, m) = (j / m_paths, j % m_paths);
                let mut acc = 0.0;
                for k in s_idx..t_idx {
                    acc += self.increment(i, m, k);
                }
                acc
            })
            .collect()
    }

    /// `B_{t_k}` for all `(i, m)`; equals node `k` of [`Self::brownian_paths`].
    pub fn levels_at(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n_steps() {
            return Err(Error::InvalidArgument(format!(
                "time index {k} beyond n_steps {}",
                self.n_steps()
            )));
        }
        Ok(self.interval_sums(0, k))
    }

    /// Full Brownian paths, `B_0 = 0` and `B_{k+1} = B_k + dB_k`.
    pub fn brownian_paths(&self) -> PathEnsemble {
        let mut out = PathEnsemble::zeros(self.grids, self.n_paths);
        for k in 0..self.n_steps() {
            let inc = self.increments_at(k);
            let prev = out.at(k).to_vec();
            out.at_mut(k + 1)
                .par_iter_mut()
                .zip(prev.par_iter().zip(inc.par_iter()))
                .for_each(|(next, (b, d))| *next = b + d);
        }
        out
    }

    /// Header describing this ensemble in dump files.
    pub fn header(&self) -> EnsembleHeader {
        EnsembleHeader {
            n_index: self.n_index() as u64,
            n_paths: self.n_paths as u64,
            n_steps: self.n_steps() as u64,
            horizon: self.grids.time.horizon(),
            seed: self.seed(),
        }
    }

    /// All increments in row-major `(i, m, k)` order.
    pub fn dense_increments(&self) -> Vec<f64> {
        let (m_paths, k_steps) = (self.n_paths, self.n_steps());
        (0..self.n_index() * m_paths * k_steps)
            .into_par_iter()
            .map(|j| {
                let row = j / k_steps;
                self.increment(row / m_paths, row % m_paths, j % k_steps)
            })
            .collect()
    }

    /// Binary dump: `EPIB`, format version, header, then little-endian f64
    /// increments in row-major `(i, m, k)` order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let h = self.header();
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&h.n_index.to_le_bytes())?;
        w.write_all(&h.n_paths.to_le_bytes())?;
        w.write_all(&h.n_steps.to_le_bytes())?;
        w.write_all(&h.horizon.to_le_bytes())?;
        w.write_all(&h.seed.to_le_bytes())?;
        for x in self.dense_increments() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// CSV dump: a `#` header line, then one row of `K` increments per `(i, m)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let h = self.header();
        writeln!(
            w,
            "# N={},M={},K={},T={},seed={}",
            h.n_index, h.n_paths, h.n_steps, h.horizon, h.seed
        )?;
        let k_steps = self.n_steps();
        let dense = self.dense_increments();
        for row in dense.chunks(k_steps) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

const DUMP_MAGIC: &[u8; 4] = b"EPIB";
const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHeader {
    pub n_index: u64,
    pub n_paths: u64,
    pub n_steps: u64,
    pub horizon: f64,
    pub seed: u64,
}

/// Reads a binary dump written by [`NoiseEnsemble::write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> Result<(EnsembleHeader, Vec<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Malformed("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != DUMP_VERSION {
        return Err(Error::Malformed("unsupported dump version".into()));
    }
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let header = EnsembleHeader {
        n_index: u64::from_le_bytes(next(&mut r)?),
        n_paths: u64::from_le_bytes(next(&mut r)?),
        n_steps: u64::from_le_bytes(next(&mut r)?),
        horizon: f64::from_le_bytes(next(&mut r)?),
        seed: u64::from_le_bytes(next(&mut r)?),
    };
    let n = (header.n_index * header.n_paths * header.n_steps) as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64::from_le_bytes(next(&mut r)?));
    }
    Ok((header, values))
}

/// `B_t - B_s` over all `(i, m)`, flattened index-major.
pub fn pooled_increments(noise: &NoiseEnsemble, s_idx: usize, t_idx: usize) -> Result<Vec<f64>> {
    if s_idx >= t_idx || t_idx > noise.n_steps() {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= s_idx < t_idx <= {}, got s_idx={s_idx}, t_idx={t_idx}",
            noise.n_steps()
        )));
    }
    Ok(noise.interval_sums(s_idx, t_idx))
}

/// `X^u = |B^u|` for `u >= 1/2` and `X^u = -|B^u|` for `u < 1/2`, applied
/// to the level at every time node.
pub fn sign_flip_counterexample(noise: &NoiseEnsemble) -> PathEnsemble {
    let nodes = noise.grids().index.nodes();
    noise
        .brownian_paths()
        .map(|i, b| if nodes[i] >= 0.5 { b.abs() } else { -b.abs() })
}

/// Values of a family of random variables at a single time, index-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub grid: IndexGrid,
    pub n_paths: usize,
    pub values: Vec<f64>,
}

impl CrossSection {
    pub fn index_slice(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_paths..(i + 1) * self.n_paths]
    }

    pub fn pooled(&self) -> &[f64] {
        &self.values
    }
}

/// Draws `sqrt(t) |Z|` at indices `u >= 1/2` and `-sqrt(t) |Z|` below, with
/// `Z` standard normal.
pub fn half_gaussian_mixture_sample(
    grid: IndexGrid,
    n_paths: usize,
    t: f64,
    seed: u64,
) -> Result<CrossSection> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t must be positive, got {t}"
        )));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let key = RngKey::new(seed);
    let nodes = grid.nodes();
    let sd = t.sqrt();
    let values = (0..grid.len() * n_paths)
        .into_par_iter()
        .map(|j| {
            let (i, m) = (j / n_paths, j % n_paths);
            let z = key.normal_at(domain::HALF_GAUSSIAN, i, m, 0).abs() * sd;
            if nodes[i] >= 0.5 {
                z
            } else {
                -z
            }
        })
        .collect();
    Ok(CrossSection {
        grid,
        n_paths,
        values,
    })
}
