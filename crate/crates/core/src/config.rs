//! JSON run configuration shared by every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::girsanov::{GirsanovOptions, ThetaProcess};
use crate::graphon::Graphon;
use crate::grid::Grids;
use crate::solver::{Coefficients, InitialCondition, PicardSettings};
use crate::verify::BatteryOptions;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(alias = "T")]
    pub horizon: f64,
    pub n_steps: usize,
    pub n_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Coupled,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn picard_settings(&self) -> PicardSettings {
        PicardSettings {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GirsanovConfig {
    pub theta: ThetaProcess,
    #[serde(default)]
    pub options: GirsanovOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Also run the sign-flip counterexample battery in `verify-bm`.
    pub counterexample: bool,
    pub battery: BatteryOptions,
    /// Bins of emitted histograms.
    pub histogram_bins: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            counterexample: false,
            battery: BatteryOptions::default(),
            histogram_bins: 40,
        }
    }
}

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub grids: GridConfig,
    pub n_paths: usize,
    pub seed: u64,
    pub graphon: Graphon,
    pub coefficients: Coefficients,
    pub initial_condition: InitialCondition,
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub girsanov: Option<GirsanovConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    /// 64 indices, 2000 paths, 256 steps on `[0, 1]`, seed 42, driving the
    /// decoupled geometric example `d theta = theta dt + sqrt(2) theta dB`.
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            grids: GridConfig {
                horizon: 1.0,
                n_steps: 256,
                n_index: 64,
            },
            n_paths: 2000,
            seed: 42,
            graphon: Graphon::Min,
            coefficients: Coefficients::linear(1.0, 0.0, 0.0, std::f64::consts::SQRT_2, 0.0)
                .expect("finite coefficients"),
            initial_condition: InitialCondition::Constant { x0: 1.0 },
            solver: SolverConfig {
                mode: SolverMode::Coupled,
                tol: 1e-4,
                max_iter: 50,
            },
            girsanov: Some(GirsanovConfig {
                theta: ThetaProcess::Constant { c: 0.5 },
                options: GirsanovOptions::default(),
            }),
            verify: VerifyConfig::default(),
            output: OutputConfig {
                directory: PathBuf::from("out"),
                formats: vec![OutputFormat::Json, OutputFormat::Csv],
            },
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grids(&self) -> Result<Grids> {
        Grids::new(self.grids.horizon, self.grids.n_steps, self.grids.n_index)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            ));
        }
        self.grids()?;
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        self.graphon.validate()?;
        self.coefficients.validate()?;
        self.initial_condition.validate(&self.grids()?.index)?;
        if self.solver.tol.is_nan() || self.solver.tol <= 0.0 || self.solver.max_iter == 0 {
            return bad("solver tol and max_iter must be positive".into());
        }
        if let Some(g) = &self.girsanov {
            g.theta.validate()?;
            let o = &g.options;
            if !(o.alpha > 0.0 && o.alpha < 1.0)
                || o.n_bins < 2
                || o.n_indices == 0
                || o.n_pairs == 0
            {
                return bad("girsanov options out of range".into());
            }
        }
        self.verify.battery.validate()?;
        if self.verify.histogram_bins == 0 {
            return bad("histogram_bins must be positive".into());
        }
        if self.output.formats.is_empty() {
            return bad("at least one output format is required".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = RunConfig::default();
        c.n_paths = 0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.version = 2;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.grids.horizon = -1.0;
        assert!(c.validate().is_err());
        let text = RunConfig::default()
            .to_json()
            .replace("\"min\"", "\"triangle\"");
        assert!(RunConfig::from_json(&text).is_err());
        let text = RunConfig::default()
            .to_json()
            .replacen("\"seed\"", "\"sede\"", 1);
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn accepts_short_grid_alias_and_defaults() {
        let mut v: serde_json::Value =
            serde_json::from_str(&RunConfig::default().to_json()).unwrap();
        let grids = v["grids"].as_object_mut().unwrap();
        let t = grids.remove("horizon").unwrap();
        grids.insert("T".into(), t);
        v.as_object_mut().unwrap().remove("verify");
        v.as_object_mut().unwrap().remove("girsanov");
        let c = RunConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(c.grids.horizon, 1.0);
        assert_eq!(c.verify, VerifyConfig::default());
        assert!(c.girsanov.is_none());
    }
}
