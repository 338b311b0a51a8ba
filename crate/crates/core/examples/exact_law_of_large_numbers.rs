//! Path-by-path index averages of an independent family concentrate on the
//! pooled mean at rate `1/sqrt(N)`.

use fubini_sde::graphon::Graphon;
use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::solver::{
    elln_check_slab, elln_scaling, solve_coupled_terminal, Coefficients, InitialCondition,
};

fn main() -> fubini_sde::error::Result<()> {
    let coeffs = Coefficients::linear(-1.0, 0.0, 0.0, 0.0, 1.0)?;
    let ic = InitialCondition::Constant { x0: 1.0 };
    let mut reports = Vec::new();
    for n_index in [16, 64, 256] {
        let grids = Grids::new(1.0, 16, n_index)?;
        let noise = generate_epi_brownian(grids, 2000, 9)?;
        let (terminal, _) = solve_coupled_terminal(&grids, &coeffs, &Graphon::Min, &ic, &noise)?;
        let r = elln_check_slab(&terminal, n_index, 2000, 16)?;
        println!(
            "N={n_index:<4} p95 deviation {:.4}  max {:.4}",
            r.p95_deviation, r.max_deviation
        );
        reports.push(r);
    }
    for w in reports.windows(2) {
        let s = elln_scaling(&w[0], &w[1]);
        println!(
            "N {} -> {}: ratio {:.3} (expected {})",
            s.coarse_n, s.fine_n, s.ratio, s.expected_ratio
        );
    }
    Ok(())
}
