//! Graphon kernels and the interaction operator they induce on the index
//! space, `W[eta](u) = ∫ w(u, v) eta(v) dv`.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::IndexGrid;
use crate::rng::{domain, RngKey};

/// A symmetric kernel `w: [0,1]^2 -> [0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Graphon {
    /// `w(u, v) = p`.
    Constant { p: f64 },
    /// `w(u, v) = u * v`.
    Product,
    /// `w(u, v) = min(u, v)`.
    Min,
    /// Block-constant kernel over a uniform partition of `[0,1]` into
    /// `matrix.len()` cells.
    Piecewise { matrix: Vec<Vec<f64>> },
}

impl Graphon {
    pub fn constant(p: f64) -> Result<Self> {
        let g = Graphon::Constant { p };
        g.validate()?;
        Ok(g)
    }

    pub fn piecewise(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let g = Graphon::Piecewise { matrix };
        g.validate()?;
        Ok(g)
    }

    /// Reads a piecewise kernel from CSV: `n` rows of `n` comma-separated values.
    pub fn piecewise_from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut matrix = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|e| {
                        Error::Malformed(format!("line {}: {cell:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
        }
        Self::piecewise(matrix)
    }

    pub fn piecewise_from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::piecewise_from_csv(std::io::BufReader::new(file))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Graphon::Constant { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidGraphon(format!(
                        "constant p={p} outside [0,1]"
                    )));
                }
            }
            Graphon::Product | Graphon::Min => {}
            Graphon::Piecewise { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(Error::InvalidGraphon("empty piecewise matrix".into()));
                }
                for (r, row) in matrix.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::InvalidGraphon(format!(
                            "row {r} has {} entries, expected {n}",
                            row.len()
                        )));
                    }
                    for (c, &v) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::InvalidGraphon(format!(
                                "entry ({r},{c})={v} outside [0,1]"
                            )));
                        }
                        if v.to_bits() != matrix[c][r].to_bits() {
                            return Err(Error::InvalidGraphon(format!(
                                "matrix not symmetric at ({r},{c})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            Graphon::Constant { p } => *p,
            Graphon::Product => u * v,
            Graphon::Min => u.min(v),
            Graphon::Piecewise { matrix } => {
                let n = matrix.len();
                let cell = |x: f64| ((x * n as f64) as usize).min(n - 1);
                matrix[cell(u)][cell(v)]
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Graphon::Constant { .. } => "constant",
            Graphon::Product => "product",
            Graphon::Min => "min",
            Graphon::Piecewise { .. } => "piecewise",
        }
    }

    /// True when `w` vanishes identically, in which case the interaction
    /// term carries no information about the mean flow.
    pub fn is_zero(&self) -> bool {
        match self {
            Graphon::Constant { p } => *p == 0.0,
            Graphon::Piecewise { matrix } => matrix.iter().flatten().all(|&v| v == 0.0),
            Graphon::Product | Graphon::Min => false,
        }
    }
}

/// The graphon evaluated on an index grid, `K_ij = w(u_i, u_j)`, together
/// with the quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureKernel {
    n: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
}

/// Evaluates `w` once per unordered pair so the matrix is exactly symmetric.
pub fn build_quadrature_kernel(graphon: &Graphon, grid: &IndexGrid) -> Result<QuadratureKernel> {
    graphon.validate()?;
    let n = grid.len();
    let nodes = grid.nodes();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let w = graphon.eval(nodes[i], nodes[j]);
            values[i * n + j] = w;
            values[j * n + i] = w;
        }
    }
    Ok(QuadratureKernel {
        n,
        values,
        weights: grid.weights(),
    })
}

impl QuadratureKernel {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `out_i = sum_j K_ij eta_j lambda_j`.
    pub fn apply(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if eta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: eta.len(),
            });
        }
        let weighted: Vec<f64> = eta.iter().zip(&self.weights).map(|(e, w)| e * w).collect();
        Ok((0..self.n)
            .map(|i| {
                let row = self.row(i);
                let terms: Vec<f64> = row.iter().zip(&weighted).map(|(k, x)| k * x).collect();
                crate::reduce::pairwise_sum(&terms)
            })
            .collect())
    }
}

/// Applies the discretized interaction operator.
pub fn apply_w(kernel: &QuadratureKernel, eta: &[f64]) -> Result<Vec<f64>> {
    kernel.apply(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormReport {
    pub trials: usize,
    pub max_ratio: f64,
}

/// Largest observed `||W eta|| / ||eta||` in the lambda-weighted L2 norm.
///
/// The first probe is the all-ones vector, the remaining `trials - 1` are
/// standard normal vectors drawn from the given seed.
pub fn operator_norm_check(
    kernel: &QuadratureKernel,
    trials: usize,
    seed: u64,
) -> Result<OperatorNormReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let key = RngKey::new(seed);
    let n = kernel.len();
    let weights = kernel.weights().to_vec();
    let mut max_ratio: f64 = 0.0;
    for t in 0..trials {
        let eta: Vec<f64> = if t == 0 {
            vec![1.0; n]
        } else {
            let mut s = key.stream(domain::TEST_VECTOR, t as u64);
            (0..n).map(|_| s.next_normal()).collect()
        };
        let out = kernel.apply(&eta)?;
        let denom = crate::stattest::weighted_l2_norm(&eta, &weights)?;
        if denom == 0.0 {
            continue;
        }
        let ratio = crate::stattest::weighted_l2_norm(&out, &weights)? / denom;
        max_ratio = max_ratio.max(ratio);
    }
    Ok(OperatorNormReport { trials, max_ratio })
}
