//! Importance-weighted KS test: normal draws tilted by `exp(c x - c^2/2)`
//! follow `N(c, 1)` under the weights, but not `N(0, 1)`.

use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::stattest::{ks_test_normal_weighted, WeightedSample};

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 1, 1)?, 20_000, 8)?;
    let x = noise.levels_at(1)?;
    let c = 0.7;
    let w: Vec<f64> = x.iter().map(|v| (c * v - 0.5 * c * c).exp()).collect();
    let sample = WeightedSample::new(x, w)?;
    println!("Kish effective size {:.0}", sample.n_effective());
    for (label, mean) in [("N(c, 1)", c), ("N(0, 1)", 0.0)] {
        let r = ks_test_normal_weighted(&sample, mean, 1.0)?;
        println!("vs {label}: D={:.4} p={:.3e}", r.statistic, r.p_value);
    }
    Ok(())
}
