//! Monte-Carlo estimates of `E exp(int theta^2 ds)` against closed forms,
//! including a tilt beyond the blow-up point.

use fubini_sde::girsanov::{novikov_estimate, ThetaProcess};
use fubini_sde::grid::Grids;
use fubini_sde::noise::generate_epi_brownian;

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 256, 32)?, 2000, 4)?;
    let tilts = [
        ThetaProcess::Constant { c: 0.5 },
        ThetaProcess::Constant { c: 1.0 },
        ThetaProcess::TimeAffine {
            intercept: 0.2,
            slope: 0.6,
        },
        ThetaProcess::AdaptedLinear { kappa: 0.5 },
        ThetaProcess::AdaptedLinear { kappa: 1.0 },
        ThetaProcess::AdaptedLinear { kappa: 3.0 },
    ];
    for theta in tilts {
        let r = novikov_estimate(&noise, &theta)?;
        println!(
            "{theta:?}: estimate {:.4} +- {:.4}, closed form {:?}, heavy tail {}",
            r.estimate, r.std_error, r.closed_form, r.heavy_tail
        );
    }
    Ok(())
}
