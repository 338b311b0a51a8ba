use super::{Coefficients, Drift, InitialCondition, MeanFlow};
use crate::error::{Error, Result};
use crate::graphon::{build_quadrature_kernel, Graphon};
use crate::grid::Grids;

const REFINEMENT: usize = 10;

/// Mean flow of a linear-drift system from the integro-ODE
/// `phi' = a phi + c W[phi] + d`, integrated with classical RK4 on a grid
/// ten times finer than `grids.time` and sampled back at its nodes.
pub fn mean_flow_ode_oracle(
    grids: &Grids,
    coeffs: &Coefficients,
    graphon: &Graphon,
    initial: &InitialCondition,
) -> Result<MeanFlow> {
    let (a, c, d) = match coeffs.drift {
        Drift::Linear { a, c, d } => (a, c, d),
        Drift::LipschitzTanh { .. } => {
            return Err(Error::OracleUndefined(
                "the mean-flow ODE is closed only for linear drift".into(),
            ))
        }
    };
    let kernel = build_quadrature_kernel(graphon, &grids.index)?;
    let rhs = |phi: &[f64]| -> Result<Vec<f64>> {
        let w = kernel.apply(phi)?;
        Ok(phi
            .iter()
            .zip(&w)
            .map(|(p, wp)| a * p + c * wp + d)
            .collect())
    };
    let axpy = |x: &[f64], h: f64, k: &[f64]| -> Vec<f64> {
        x.iter().zip(k).map(|(xi, ki)| xi + h * ki).collect()
    };

    let mut flow = MeanFlow::zeros(*grids);
    let mut phi: Vec<f64> = grids
        .index
        .nodes()
        .iter()
        .map(|&u| initial.index_mean(u))
        .collect();
    flow.set_column(0, &phi)?;
    let h = grids.time.dt() / REFINEMENT as f64;
    for k in 0..grids.time.n_steps() {
        for _ in 0..REFINEMENT {
            let k1 = rhs(&phi)?;
            let k2 = rhs(&axpy(&phi, 0.5 * h, &k1))?;
            let k3 = rhs(&axpy(&phi, 0.5 * h, &k2))?;
            let k4 = rhs(&axpy(&phi, h, &k3))?;
            for j in 0..phi.len() {
                phi[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        flow.set_column(k + 1, &phi)?;
    }
    Ok(flow)
}
