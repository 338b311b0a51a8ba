//! Generates an independent Brownian family and checks that the pooled
//! increments, and each sampled index on its own, behave like a standard
//! Brownian motion.

use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::verify::{index_brownian_battery, pooled_brownian_battery, BatteryOptions};

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 256, 64)?, 2000, 7)?;
    let options = BatteryOptions::default();
    for report in [
        pooled_brownian_battery(&noise, &options)?,
        index_brownian_battery(&noise, &options)?,
    ] {
        println!(
            "{}: {}",
            report.name,
            if report.pass { "pass" } else { "fail" }
        );
        for check in &report.checks {
            let p = check.p_value.map_or("-".to_string(), |p| format!("{p:.4}"));
            println!("  {:<40} stat={:<9.4} p={p}", check.name, check.statistic);
        }
    }
    Ok(())
}
