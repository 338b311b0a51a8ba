//! Solves a linear graphon SDE with the particle solver and with Picard
//! iteration on the mean flow, then compares both to the integro-ODE for
//! the mean.

use fubini_sde::graphon::Graphon;
use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::solver::{
    mean_flow_ode_oracle, solve_coupled, solve_picard, Coefficients, InitialCondition,
    PicardSettings,
};

fn main() -> fubini_sde::error::Result<()> {
    let grids = Grids::new(1.0, 128, 32)?;
    let noise = generate_epi_brownian(grids, 1000, 3)?;
    let coeffs = Coefficients::linear(0.2, 1.0, 0.1, 0.3, 0.2)?;
    let graphon = Graphon::constant(0.8)?;
    let ic = InitialCondition::Affine {
        intercept: 0.5,
        slope: 1.0,
    };

    let picard = solve_picard(
        &grids,
        &coeffs,
        &graphon,
        &ic,
        &noise,
        PicardSettings::default(),
    )?;
    for (k, r) in picard.residuals.iter().enumerate() {
        println!("iteration {:>2}: sup residual {:.3e}", k + 1, r.sup);
    }
    let coupled = solve_coupled(&grids, &coeffs, &graphon, &ic, &noise)?;
    let oracle = mean_flow_ode_oracle(&grids, &coeffs, &graphon, &ic)?;
    println!(
        "picard vs coupled: {:.3e}",
        picard.mean_flow.distance(&coupled.mean_flow)?.sup
    );
    println!(
        "picard vs ODE:     {:.3e}",
        picard.mean_flow.distance(&oracle)?.sup
    );
    Ok(())
}
