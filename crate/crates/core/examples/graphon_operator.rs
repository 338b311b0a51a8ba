//! Discretizes each graphon kind, applies the interaction operator and
//! checks its norm bound and the midpoint-rule integrals.

use fubini_sde::graphon::{build_quadrature_kernel, operator_norm_check, Graphon};
use fubini_sde::grid::IndexGrid;

fn main() -> fubini_sde::error::Result<()> {
    let graphons = [
        Graphon::constant(0.5)?,
        Graphon::Product,
        Graphon::Min,
        Graphon::piecewise(vec![vec![1.0, 0.3], vec![0.3, 0.8]])?,
    ];
    let grid = IndexGrid::new(64)?;
    for g in &graphons {
        let kernel = build_quadrature_kernel(g, &grid)?;
        let report = operator_norm_check(&kernel, 1000, 1)?;
        println!(
            "{:<10} max |W eta| / |eta| = {:.6}",
            g.kind_name(),
            report.max_ratio
        );
    }
    for n in [32, 64, 128] {
        let grid = IndexGrid::new(n)?;
        let u = grid.nodes();
        let out = build_quadrature_kernel(&Graphon::Product, &grid)?.apply(&u)?;
        let err = u
            .iter()
            .zip(&out)
            .map(|(u, w)| (w - u / 3.0).abs())
            .fold(0.0, f64::max);
        println!("N={n:<4} product graphon, eta(v)=v: max error vs u/3 = {err:.3e}");
    }
    Ok(())
}
