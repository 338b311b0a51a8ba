//! Constant tilt `theta = 0.5`: reweights the Brownian family by the
//! exponential density and runs the change-of-measure checks.

use fubini_sde::girsanov::{verify_girsanov, GirsanovOptions, ThetaProcess};
use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 256, 64)?, 4000, 21)?;
    let report = verify_girsanov(
        &noise,
        &ThetaProcess::Constant { c: 0.5 },
        &GirsanovOptions::default(),
    )?;
    println!("effective sample size {:.0}", report.n_effective);
    for check in &report.checks {
        println!(
            "{:<34} stat={:>9.4} p={:<10} {}",
            check.name,
            check.statistic,
            check.p_value.map_or("-".into(), |p| format!("{p:.4}")),
            if check.pass { "pass" } else { "fail" }
        );
    }
    println!("all pass: {}", report.all_pass);
    Ok(())
}
