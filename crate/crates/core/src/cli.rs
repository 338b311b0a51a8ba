//! Command-line front end. Every command reads a [`RunConfig`], runs one
//! suite and writes its outputs into a directory.
//!
//! Exit codes: 0 when every check passes, 1 on a verification failure
//! (including divergence and starved importance weights), 2 on usage or
//! configuration errors.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig, SolverMode};
use crate::error::{Error, Result};
use crate::girsanov::verify_girsanov;
use crate::noise::{generate_epi_brownian, NoiseEnsemble};
use crate::reduce;
use crate::solver::{
    elln_check_slab, elln_scaling, mean_flow_ode_oracle, mean_flow_std_errors, solve_coupled,
    solve_coupled_terminal, solve_picard, Drift, MeanFlow,
};
use crate::verify::{
    counterexample_battery, index_brownian_battery, pooled_brownian_battery, sign_flip_terminal,
    Histogram,
};

/// Version stamped into every emitted JSON document.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "fubini-sde",
    version,
    about = "Simulate and verify Brownian families and graphon SDEs"
)]
pub struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Emit only this format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pooled and per-index Brownian batteries on a generated family.
    VerifyBm,
    /// Run the configured solver and write the mean flow.
    Simulate {
        /// Also write the terminal value of every particle.
        #[arg(long)]
        dump_paths: bool,
    },
    /// Girsanov battery for the configured tilt.
    Girsanov,
    /// Sign-flip family: per-index rejection with pooled acceptance.
    Counterexample,
    /// Index-average deviations at N and 4N for the decoupled system.
    Elln,
    /// Print the default configuration.
    DefaultConfig,
}

/// Files produced by a command, in emission order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutput {
    pub files: Vec<(String, String)>,
    pub pass: bool,
}

impl CommandOutput {
    fn json(&mut self, config: &RunConfig, name: &str, value: &Value) {
        if config.output.wants(OutputFormat::Json) {
            let mut text = serde_json::to_string_pretty(value).expect("report serializes");
            text.push('\n');
            self.files.push((name.into(), text));
        }
    }

    fn csv(&mut self, config: &RunConfig, name: &str, text: String) {
        if config.output.wants(OutputFormat::Csv) {
            self.files.push((name.into(), text));
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }
}

/// A command error, with whatever output was produced before it.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub partial: Option<CommandOutput>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self {
            error,
            partial: None,
        }
    }
}

pub type CommandResult = std::result::Result<CommandOutput, Failure>;

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

/// The configuration as echoed in reports, without output settings so that
/// reruns into different directories stay byte-identical.
fn config_echo(config: &RunConfig) -> Value {
    let mut v = to_value(config);
    v.as_object_mut()
        .expect("config is an object")
        .remove("output");
    v
}

fn header(kind: &str, config: &RunConfig) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("kind".into(), json!(kind));
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("config".into(), config_echo(config));
    map
}

fn noise_for(config: &RunConfig) -> Result<NoiseEnsemble> {
    generate_epi_brownian(config.grids()?, config.n_paths, config.seed)
}

fn verify_bm(config: &RunConfig) -> CommandResult {
    let noise = noise_for(config)?;
    let battery = &config.verify.battery;
    let pooled = pooled_brownian_battery(&noise, battery)?;
    let index = index_brownian_battery(&noise, battery)?;
    let counter = config
        .verify
        .counterexample
        .then(|| counterexample_battery(&noise, battery))
        .transpose()?;
    let pass = pooled.pass && index.pass && counter.as_ref().is_none_or(|c| c.pass);
    let mut report = header("verify_bm", config);
    report.insert("pooled".into(), to_value(&pooled));
    report.insert("index".into(), to_value(&index));
    if let Some(c) = &counter {
        report.insert("counterexample".into(), to_value(c));
    }
    report.insert("pass".into(), json!(pass));

    let mut out = CommandOutput {
        pass,
        ..Default::default()
    };
    out.json(config, "report.json", &Value::Object(report));
    let horizon = noise.grids().time.horizon();
    let terminal = noise.levels_at(noise.n_steps())?;
    let hist =
        Histogram::normal_reference(&terminal, None, config.verify.histogram_bins, 0.0, horizon);
    out.csv(config, "histogram_pooled_terminal.csv", hist.to_csv());
    Ok(out)
}

fn counterexample(config: &RunConfig) -> CommandResult {
    let noise = noise_for(config)?;
    let battery = counterexample_battery(&noise, &config.verify.battery)?;
    let mut report = header("counterexample", config);
    report.insert("battery".into(), to_value(&battery));
    report.insert("pass".into(), json!(battery.pass));
    let mut out = CommandOutput {
        pass: battery.pass,
        ..Default::default()
    };
    out.json(config, "report.json", &Value::Object(report));

    let horizon = noise.grids().time.horizon();
    let bins = config.verify.histogram_bins;
    let x = sign_flip_terminal(&noise)?;
    out.csv(
        config,
        "histogram_pooled_terminal.csv",
        Histogram::normal_reference(&x, None, bins, 0.0, horizon).to_csv(),
    );
    let (n, m) = (noise.n_index(), noise.n_paths());
    let last = &x[(n - 1) * m..];
    out.csv(
        config,
        "histogram_last_index_terminal.csv",
        Histogram::normal_reference(last, None, bins, 0.0, horizon).to_csv(),
    );
    Ok(out)
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

/// Pooled mean and its standard error of an index-major slab.
fn pooled_mean_se(slab: &[f64]) -> (f64, f64) {
    let n = slab.len() as f64;
    let mean = reduce::mean(slab);
    let var = reduce::pairwise_sum_by(slab, |x| (x - mean) * (x - mean)) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn residuals_csv(residuals: &[crate::solver::FlowDistance]) -> String {
    let mut out = String::from("iteration,sup,path_sup_l2,time_integrated_l2\n");
    for (j, r) in residuals.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            j + 1,
            r.sup,
            r.path_sup_l2,
            r.time_integrated_l2
        ));
    }
    out
}

fn simulate(config: &RunConfig, dump_paths: bool) -> CommandResult {
    let grids = config.grids()?;
    let noise = noise_for(config)?;
    let (coeffs, graphon, ic) = (
        &config.coefficients,
        &config.graphon,
        &config.initial_condition,
    );
    let last = grids.time.n_steps();
    let mut summary = header("simulate", config);
    let mut out = CommandOutput::default();
    let mut pass = true;

    let (paths, flow) = match config.solver.mode {
        SolverMode::Coupled => {
            let sol = solve_coupled(&grids, coeffs, graphon, ic, &noise)?;
            (sol.paths, sol.mean_flow)
        }
        SolverMode::Picard => {
            let sol = solve_picard(
                &grids,
                coeffs,
                graphon,
                ic,
                &noise,
                config.solver.picard_settings(),
            )?;
            pass &= sol.converged;
            summary.insert(
                "picard".into(),
                json!({
                    "iterations": sol.iterations,
                    "converged": sol.converged,
                    "residuals": to_value(&sol.residuals),
                }),
            );
            out.csv(config, "residuals.csv", residuals_csv(&sol.residuals));
            // cross-check against the particle solver on the same noise
            let (_, coupled_flow) = solve_coupled_terminal(&grids, coeffs, graphon, ic, &noise)?;
            let se = mean_flow_std_errors(&sol.paths);
            let max_se = (0..grids.index.len())
                .flat_map(|i| (0..=last).map(move |k| (i, k)))
                .fold(0.0f64, |acc, (i, k)| acc.max(se.get(i, k)));
            let sup = sol.mean_flow.distance(&coupled_flow)?.sup;
            let threshold = 5.0 * (max_se + config.solver.tol);
            summary.insert(
                "coupled_cross_check".into(),
                json!({ "sup_difference": sup, "threshold": threshold, "within_threshold": sup <= threshold }),
            );
            log::info!(
                "picard vs coupled: sup mean-flow difference {sup:e} (threshold {threshold:e})"
            );
            (sol.paths, sol.mean_flow)
        }
    };

    let terminal = paths.at(last);
    let (mean, se) = pooled_mean_se(terminal);
    summary.insert(
        "terminal".into(),
        json!({
            "pooled_mean": mean,
            "pooled_std_error": se,
            "path_space_norm": paths.path_space_norm(),
        }),
    );
    if let Drift::Linear { .. } = coeffs.drift {
        let oracle = mean_flow_ode_oracle(&grids, coeffs, graphon, ic)?;
        summary.insert(
            "oracle".into(),
            oracle_comparison(&flow, &oracle, &mean_flow_std_errors(&paths), mean, se),
        );
    }
    summary.insert("pass".into(), json!(pass));
    out.pass = pass;
    out.json(config, "summary.json", &Value::Object(summary));
    out.csv(config, "mean_flow.csv", flow.to_csv());
    if dump_paths {
        let m = paths.n_paths();
        let mut text = String::from("index,path,value\n");
        for (j, v) in terminal.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", j / m, j % m, v));
        }
        out.csv(config, "terminal_values.csv", text);
    }
    Ok(out)
}

/// Terminal mean flow against the noise-free ODE for linear drifts.
fn oracle_comparison(
    flow: &MeanFlow,
    oracle: &MeanFlow,
    se: &MeanFlow,
    pooled: f64,
    pooled_se: f64,
) -> Value {
    let last = flow.n_nodes() - 1;
    let mut max_abs: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for i in 0..flow.n_index() {
        let diff = flow.get(i, last) - oracle.get(i, last);
        max_abs = max_abs.max(diff.abs());
        max_z = max_z.max(z_score(diff, se.get(i, last)).abs());
    }
    let pooled_oracle = reduce::mean(&oracle.column(last));
    json!({
        "kind": "mean_flow_ode",
        "terminal_max_abs_difference": max_abs,
        "terminal_max_abs_z": max_z,
        "pooled_terminal_mean": pooled_oracle,
        "pooled_z": z_score(pooled - pooled_oracle, pooled_se),
    })
}

fn girsanov(config: &RunConfig) -> CommandResult {
    let Some(g) = &config.girsanov else {
        return Err(Error::InvalidArgument(
            "the girsanov command needs a girsanov section with a theta".into(),
        )
        .into());
    };
    let noise = noise_for(config)?;
    let mut report = header("girsanov", config);
    let mut out = CommandOutput::default();
    match verify_girsanov(&noise, &g.theta, &g.options) {
        Ok(r) => {
            if r.weights_uniform {
                log::info!("tilt is zero: all importance weights are equal");
            }
            out.pass = r.all_pass;
            report.insert("report".into(), to_value(&r));
            report.insert("pass".into(), json!(r.all_pass));
        }
        Err(e @ Error::InsufficientEffectiveSample { .. }) => {
            report.insert("error".into(), json!(e.to_string()));
            report.insert("pass".into(), json!(false));
            out.json(config, "report.json", &Value::Object(report));
            return Err(Failure {
                error: e,
                partial: Some(out),
            });
        }
        Err(e) => return Err(e.into()),
    }
    out.json(config, "report.json", &Value::Object(report));
    Ok(out)
}

fn elln(config: &RunConfig) -> CommandResult {
    if config.coefficients.is_interacting() && !config.graphon.is_zero() {
        return Err(Error::InvalidArgument(
            "the ELLN check needs decoupled dynamics (zero interaction coefficient)".into(),
        )
        .into());
    }
    let base = config.grids()?;
    let mut reports = Vec::new();
    for n_index in [base.index.len(), 4 * base.index.len()] {
        let grids = crate::grid::Grids::new(base.time.horizon(), base.time.n_steps(), n_index)?;
        let noise = generate_epi_brownian(grids, config.n_paths, config.seed)?;
        let (terminal, _) = solve_coupled_terminal(
            &grids,
            &config.coefficients,
            &config.graphon,
            &config.initial_condition,
            &noise,
        )?;
        reports.push(elln_check_slab(
            &terminal,
            n_index,
            config.n_paths,
            grids.time.n_steps(),
        )?);
    }
    let scaling = elln_scaling(&reports[0], &reports[1]);
    let mut report = header("elln", config);
    report.insert("coarse".into(), to_value(&reports[0]));
    report.insert("fine".into(), to_value(&reports[1]));
    report.insert("scaling".into(), to_value(&scaling));
    report.insert("pass".into(), json!(scaling.pass));
    let mut out = CommandOutput {
        pass: scaling.pass,
        ..Default::default()
    };
    out.json(config, "report.json", &Value::Object(report));
    Ok(out)
}

/// Runs `command` on an already validated configuration and returns the
/// files it would write.
pub fn execute(command: Command, config: &RunConfig) -> CommandResult {
    match command {
        Command::VerifyBm => verify_bm(config),
        Command::Simulate { dump_paths } => simulate(config, dump_paths),
        Command::Girsanov => girsanov(config),
        Command::Counterexample => counterexample(config),
        Command::Elln => elln(config),
        Command::DefaultConfig => Ok(CommandOutput {
            files: Vec::new(),
            pass: true,
        }),
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    if let Some(format) = cli.format {
        config.output.formats = vec![format];
    }
    config.validate()?;
    Ok(config)
}

fn write_output(dir: &Path, out: &CommandOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in &out.files {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

/// Whether an error means the verification itself failed rather than the
/// invocation being wrong.
fn is_verification_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonFinite { .. } | Error::InsufficientEffectiveSample { .. }
    )
}

fn run_inner(cli: &Cli) -> i32 {
    if cli.command == Command::DefaultConfig {
        println!("{}", RunConfig::default().to_json());
        return EXIT_PASS;
    }
    let config = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return EXIT_USAGE;
        }
    };
    let dir = &config.output.directory;
    match execute(cli.command, &config) {
        Ok(out) => {
            if let Err(e) = write_output(dir, &out) {
                eprintln!("error: cannot write outputs to {}: {e}", dir.display());
                return EXIT_USAGE;
            }
            if out.pass {
                eprintln!("pass: outputs in {}", dir.display());
                EXIT_PASS
            } else {
                eprintln!(
                    "fail: verification failed, see outputs in {}",
                    dir.display()
                );
                EXIT_FAIL
            }
        }
        Err(Failure { error, partial }) => {
            if let Some(out) = partial {
                let _ = write_output(dir, &out);
            }
            eprintln!("error: {error}");
            if is_verification_failure(&error) {
                EXIT_FAIL
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            EXIT_USAGE
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_inner(cli)),
            Err(e) => {
                eprintln!("error: cannot start {n} workers: {e}");
                EXIT_USAGE
            }
        },
        None => run_inner(cli),
    }
}
