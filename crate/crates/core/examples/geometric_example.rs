//! Euler-Maruyama on `d theta = theta dt + sqrt(2) theta dB` against the
//! exact solution `theta_0 exp(sqrt(2) B_T)` driven by the same noise.

use std::f64::consts::{E, SQRT_2};

use fubini_sde::graphon::Graphon;
use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::reduce;
use fubini_sde::solver::{solve_coupled_terminal, Coefficients, InitialCondition};

fn main() -> fubini_sde::error::Result<()> {
    let coeffs = Coefficients::linear(1.0, 0.0, 0.0, SQRT_2, 0.0)?;
    let ic = InitialCondition::Constant { x0: 1.0 };
    for n_steps in [64, 128, 256, 512] {
        let grids = Grids::new(1.0, n_steps, 32)?;
        let noise = generate_epi_brownian(grids, 1000, 5)?;
        let (terminal, _) = solve_coupled_terminal(&grids, &coeffs, &Graphon::Min, &ic, &noise)?;
        let levels = noise.levels_at(n_steps)?;
        let sq: Vec<f64> = terminal
            .iter()
            .zip(&levels)
            .map(|(x, b)| (x - (SQRT_2 * b).exp()).powi(2))
            .collect();
        println!(
            "K={n_steps:<4} strong RMS error {:.4}  pooled mean {:.4} (exact {E:.4})",
            reduce::mean(&sq).sqrt(),
            reduce::mean(&terminal)
        );
    }
    Ok(())
}
