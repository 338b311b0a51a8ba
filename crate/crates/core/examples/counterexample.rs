//! `X^u = B^u sign(B^u)` on one half of the indices and `-|B^u|` on the
//! other: every pooled cross-section is Gaussian although no single index is.

use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::verify::{counterexample_battery, BatteryOptions};

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 32, 10)?, 10_000, 11)?;
    let report = counterexample_battery(&noise, &BatteryOptions::default())?;
    for check in &report.checks {
        println!(
            "{:<28} D={:.4} p={:.3e} {}",
            check.name,
            check.statistic,
            check.p_value.unwrap_or(f64::NAN),
            if check.pass {
                "as expected"
            } else {
                "UNEXPECTED"
            }
        );
    }
    Ok(())
}
