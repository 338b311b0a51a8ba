//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero
//! exit if any criterion fails or exceeds its time budget.

use std::time::{Duration, Instant};

use fubini_sde::cli::{execute, Command};
use fubini_sde::config::{RunConfig, SolverMode};
use fubini_sde::girsanov::{novikov_estimate, verify_girsanov, GirsanovOptions, ThetaProcess};
use fubini_sde::graphon::{build_quadrature_kernel, operator_norm_check, Graphon};
use fubini_sde::grid::{Grids, IndexGrid};
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::reduce;
use fubini_sde::solver::{elln_check_slab, elln_scaling, EllnReport};

use fubini_sde::solver::{
    mean_flow_ode_oracle, mean_flow_std_errors, solve_coupled, solve_coupled_terminal,
    solve_picard, Coefficients, InitialCondition, PicardSettings,
};
use fubini_sde::verify::{
    counterexample_battery, index_brownian_battery, pooled_brownian_battery, BatteryOptions,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn checks_summary(checks: &[fubini_sde::stattest::CheckResult]) -> String {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    let min_p = checks
        .iter()
        .filter_map(|c| c.p_value)
        .fold(1.0_f64, f64::min);
    format!(
        "{} checks, min p {min_p:.3e}, failed {failed:?}",
        checks.len()
    )
}

fn pooled_brownian() -> Outcome {
    let noise = generate_epi_brownian(
        Grids::new(1.0, 256, 64).map_err(|e| e.to_string())?,
        2000,
        1001,
    )
    .map_err(|e| e.to_string())?;
    let report =
        pooled_brownian_battery(&noise, &BatteryOptions::default()).map_err(|e| e.to_string())?;
    Ok((report.pass, checks_summary(&report.checks)))
}

fn index_brownian() -> Outcome {
    let noise = generate_epi_brownian(
        Grids::new(1.0, 256, 64).map_err(|e| e.to_string())?,
        2000,
        1002,
    )
    .map_err(|e| e.to_string())?;
    let options = BatteryOptions {
        n_indices: 20,
        n_pairs: 50,
        ..BatteryOptions::default()
    };
    let report = index_brownian_battery(&noise, &options).map_err(|e| e.to_string())?;
    Ok((report.pass, checks_summary(&report.checks)))
}

fn counterexample() -> Outcome {
    let noise = generate_epi_brownian(
        Grids::new(1.0, 32, 10).map_err(|e| e.to_string())?,
        10_000,
        1003,
    )
    .map_err(|e| e.to_string())?;
    let report =
        counterexample_battery(&noise, &BatteryOptions::default()).map_err(|e| e.to_string())?;
    Ok((report.pass, checks_summary(&report.checks)))
}

fn quadrature_error(n: usize) -> Result<(f64, f64), String> {
    let grid = IndexGrid::new(n).map_err(|e| e.to_string())?;
    let u = grid.nodes();
    let product = build_quadrature_kernel(&Graphon::Product, &grid).map_err(|e| e.to_string())?;
    let out = product.apply(&u).map_err(|e| e.to_string())?;
    let e_product = u
        .iter()
        .zip(&out)
        .map(|(u, w)| (w - u / 3.0).abs())
        .fold(0.0, f64::max);
    let min = build_quadrature_kernel(&Graphon::Min, &grid).map_err(|e| e.to_string())?;
    let out = min.apply(&vec![1.0; n]).map_err(|e| e.to_string())?;
    let e_min = u
        .iter()
        .zip(&out)
        .map(|(u, w)| (w - (u - u * u / 2.0)).abs())
        .fold(0.0, f64::max);
    Ok((e_product, e_min))
}

fn operator_bound() -> Outcome {
    let graphons = [
        Graphon::constant(0.7).map_err(|e| e.to_string())?,
        Graphon::Product,
        Graphon::Min,
        Graphon::piecewise(vec![
            vec![0.9, 0.2, 0.1],
            vec![0.2, 0.6, 0.4],
            vec![0.1, 0.4, 1.0],
        ])
        .map_err(|e| e.to_string())?,
    ];
    let grid = IndexGrid::new(64).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for g in &graphons {
        let kernel = build_quadrature_kernel(g, &grid).map_err(|e| e.to_string())?;
        worst = worst.max(
            operator_norm_check(&kernel, 1000, 1004)
                .map_err(|e| e.to_string())?
                .max_ratio,
        );
    }
    let (p64, m64) = quadrature_error(64)?;
    let (p128, m128) = quadrature_error(128)?;
    let (rp, rm) = (p64 / p128, m64 / m128);
    let pass = worst <= 1.0 + 1e-12 && rp >= 3.5 && rm >= 3.5;
    Ok((
        pass,
        format!("max norm ratio {worst:.6}, error ratio product {rp:.3}, min {rm:.3}"),
    ))
}

fn gbm_strong_rms(n_steps: usize, seed: u64) -> Result<(f64, f64, f64), String> {
    let grids = Grids::new(1.0, n_steps, 64).map_err(|e| e.to_string())?;
    let noise = generate_epi_brownian(grids, 1000, seed).map_err(|e| e.to_string())?;
    let coeffs = Coefficients::linear(1.0, 0.0, 0.0, std::f64::consts::SQRT_2, 0.0)
        .map_err(|e| e.to_string())?;
    let ic = InitialCondition::Constant { x0: 1.0 };
    let (terminal, _) = solve_coupled_terminal(&grids, &coeffs, &Graphon::Min, &ic, &noise)
        .map_err(|e| e.to_string())?;
    let levels = noise.levels_at(n_steps).map_err(|e| e.to_string())?;
    let sq: Vec<f64> = terminal
        .iter()
        .zip(&levels)
        .map(|(x, b)| (x - (std::f64::consts::SQRT_2 * b).exp()).powi(2))
        .collect();
    let mean = reduce::mean(&terminal);
    let var = reduce::mean(
        &terminal
            .iter()
            .map(|x| (x - mean).powi(2))
            .collect::<Vec<_>>(),
    );
    let se = (var / (terminal.len() - 1) as f64).sqrt();
    Ok((reduce::mean(&sq).sqrt(), mean, se))
}

fn gbm_example() -> Outcome {
    let mut ratios = Vec::new();
    let mut pooled = (0.0, 0.0);
    for seed in 0..5 {
        let (coarse, _, _) = gbm_strong_rms(256, 2000 + seed)?;
        let (fine, mean, se) = gbm_strong_rms(512, 3000 + seed)?;
        ratios.push(coarse / fine);
        if seed == 0 {
            pooled = (mean, se);
        }
    }
    let ratio = reduce::mean(&ratios);
    let z = (pooled.0 - std::f64::consts::E) / pooled.1;
    let pass = (1.25..=1.65).contains(&ratio) && z.abs() <= 4.0;
    Ok((
        pass,
        format!(
            "mean RMS ratio {ratio:.3} (per seed {ratios:.3?}), pooled mean {:.4} z {z:.2}",
            pooled.0
        ),
    ))
}

fn picard_benchmark() -> Outcome {
    let grids = Grids::new(1.0, 256, 64).map_err(|e| e.to_string())?;
    let noise = generate_epi_brownian(grids, 2000, 1006).map_err(|e| e.to_string())?;
    let coeffs = Coefficients::linear(0.2, 1.0, 0.1, 0.3, 0.2).map_err(|e| e.to_string())?;
    let graphon = Graphon::constant(0.8).map_err(|e| e.to_string())?;
    let ic = InitialCondition::Affine {
        intercept: 0.5,
        slope: 1.0,
    };
    let settings = PicardSettings::default();
    let picard = solve_picard(&grids, &coeffs, &graphon, &ic, &noise, settings)
        .map_err(|e| e.to_string())?;
    let sup: Vec<f64> = picard.residuals.iter().map(|r| r.sup).collect();
    let ratios: Vec<f64> = sup.windows(2).map(|w| w[1] / w[0]).collect();
    let geometric = ratios.len() >= 2 && ratios.iter().skip(2).all(|r| *r < 1.0);

    let coupled =
        solve_coupled(&grids, &coeffs, &graphon, &ic, &noise).map_err(|e| e.to_string())?;
    let se = mean_flow_std_errors(&picard.paths);
    let max_se = (0..se.n_index())
        .flat_map(|i| se.row(i).to_vec())
        .fold(0.0, f64::max);
    let diff = picard
        .mean_flow
        .distance(&coupled.mean_flow)
        .map_err(|e| e.to_string())?
        .sup;
    let threshold = 5.0 * (max_se + settings.tol);

    let oracle = mean_flow_ode_oracle(&grids, &coeffs, &graphon, &ic).map_err(|e| e.to_string())?;
    let last = grids.time.n_steps();
    let max_z = (0..grids.index.len())
        .map(|i| (picard.mean_flow.get(i, last) - oracle.get(i, last)).abs() / se.get(i, last))
        .fold(0.0, f64::max);
    let pass = picard.converged && geometric && diff <= threshold && max_z <= 4.0;
    Ok((
        pass,
        format!(
            "{} iterations, sup ratios {ratios:.3?}, coupled diff {diff:.2e} <= {threshold:.2e}, oracle max |z| {max_z:.2}",
            picard.iterations
        ),
    ))
}

fn elln_terminal_report(n_index: usize) -> Result<EllnReport, String> {
    let grids = Grids::new(1.0, 16, n_index).map_err(|e| e.to_string())?;
    let noise = generate_epi_brownian(grids, 2000, 1007).map_err(|e| e.to_string())?;
    let coeffs = Coefficients::linear(-1.0, 0.0, 0.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let ic = InitialCondition::Constant { x0: 1.0 };
    let (terminal, _) = solve_coupled_terminal(&grids, &coeffs, &Graphon::Min, &ic, &noise)
        .map_err(|e| e.to_string())?;
    elln_check_slab(&terminal, n_index, 2000, 16).map_err(|e| e.to_string())
}

fn elln() -> Outcome {
    let coarse = elln_terminal_report(64)?;
    let fine = elln_terminal_report(256)?;
    let scaling = elln_scaling(&coarse, &fine);
    Ok((
        scaling.pass,
        format!(
            "p95 deviation {:.4} -> {:.4}, ratio {:.3} in [{}, {}]",
            coarse.p95_deviation, fine.p95_deviation, scaling.ratio, scaling.lower, scaling.upper
        ),
    ))
}

fn girsanov() -> Outcome {
    let noise = generate_epi_brownian(
        Grids::new(1.0, 256, 64).map_err(|e| e.to_string())?,
        4000,
        1008,
    )
    .map_err(|e| e.to_string())?;
    let report = verify_girsanov(
        &noise,
        &ThetaProcess::Constant { c: 0.5 },
        &GirsanovOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok((
        report.all_pass,
        format!(
            "n_eff {:.0}, {}",
            report.n_effective,
            checks_summary(&report.checks)
        ),
    ))
}

fn novikov() -> Outcome {
    let noise = generate_epi_brownian(
        Grids::new(1.0, 256, 64).map_err(|e| e.to_string())?,
        2000,
        1009,
    )
    .map_err(|e| e.to_string())?;
    let mut pass = true;
    let mut details = Vec::new();
    for c in [0.5, 1.0] {
        let r =
            novikov_estimate(&noise, &ThetaProcess::Constant { c }).map_err(|e| e.to_string())?;
        let exact: f64 = (c * c).exp();
        let ok = (r.estimate - exact).abs() <= 4.0 * r.std_error + 1e-12 * exact;
        pass &= ok;
        details.push(format!("c={c}: {:.6} vs {exact:.6}", r.estimate));
    }
    let theta = ThetaProcess::AdaptedLinear { kappa: 0.5 };
    let r = novikov_estimate(&noise, &theta).map_err(|e| e.to_string())?;
    let exact = theta
        .novikov_closed_form(1.0)
        .ok_or("closed form undefined")?;
    let rel = (r.estimate - exact).abs() / exact;
    pass &= rel <= 0.10;
    details.push(format!(
        "kappa=0.5: {:.4} vs {exact:.4} (rel {rel:.4})",
        r.estimate
    ));
    Ok((pass, details.join(", ")))
}

fn determinism() -> Outcome {
    let mut config = RunConfig::default();
    config.grids.n_index = 32;
    config.grids.n_steps = 64;
    config.n_paths = 500;
    config.verify.counterexample = true;
    config.solver.mode = SolverMode::Picard;
    config.graphon = Graphon::constant(0.5).map_err(|e| e.to_string())?;
    config.coefficients =
        Coefficients::linear(-0.5, 0.8, 0.1, 0.3, 0.2).map_err(|e| e.to_string())?;
    let mut decoupled = config.clone();
    decoupled.coefficients =
        Coefficients::linear(-0.5, 0.0, 0.1, 0.3, 0.2).map_err(|e| e.to_string())?;
    let runs = [
        (Command::VerifyBm, &config),
        (Command::Simulate { dump_paths: true }, &config),
        (Command::Girsanov, &config),
        (Command::Counterexample, &config),
        (Command::Elln, &decoupled),
    ];
    let mut identical = true;
    let mut n_files = 0;
    for (command, cfg) in runs {
        let outputs: Vec<_> = [1, 4]
            .into_iter()
            .map(|threads| {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap();
                pool.install(|| execute(command, cfg))
                    .map_err(|f| f.error.to_string())
            })
            .collect::<Result<_, _>>()?;
        n_files += outputs[0].files.len();
        identical &= outputs[0] == outputs[1];
    }
    Ok((
        identical,
        format!("{n_files} files compared across 1 and 4 workers"),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 pooled Brownian law", pooled_brownian, 30),
        ("2 per-index Brownian law", index_brownian, 60),
        ("3 counterexample", counterexample, 20),
        ("4 operator bound", operator_bound, 5),
        ("5 geometric example", gbm_example, 60),
        ("6 Picard fixed point", picard_benchmark, 120),
        ("7 exact law of large numbers", elln, 30),
        ("8 Girsanov", girsanov, 60),
        ("9 Novikov", novikov, 30),
        ("10 determinism", determinism, 10),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {name}: {} ({:.1} s of {budget} s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
