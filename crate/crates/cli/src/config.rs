//! Run configuration: a TOML file with dotted sections.
//!
//! ```toml
//! [system]            # defaults to the reference detector/channel
//! alpha_db_per_km = 0.2
//! [model]
//! kind = "uniform"    # point | uniform | gaussian | tabulated
//! lo = 0.9
//! hi = 1.1
//! [run]
//! case = "case1r"     # case0 | case1 | case1r | case2a | case2b
//! [grid]
//! start_km = 0
//! stop_km = 150
//! step_km = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use cvqkd::cases::Direction;
use cvqkd::fluctuation::FluctuationModel;
use cvqkd::SystemParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemParams,
    pub model: ModelSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Intensity-fluctuation model descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Point,
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    /// Two-column `d density` file; relative paths resolve against the
    /// config file's directory.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    Case0,
    Case1,
    Case1r,
    Case2a,
    Case2b,
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseName::Case0 => "case0",
            CaseName::Case1 => "case1",
            CaseName::Case1r => "case1r",
            CaseName::Case2a => "case2a",
            CaseName::Case2b => "case2b",
        })
    }
}

fn reverse() -> Direction {
    Direction::Reverse
}

fn is_reverse(d: &Direction) -> bool {
    *d == Direction::Reverse
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub case: CaseName,
    /// Only case 2B supports direct reconciliation.
    #[serde(default = "reverse", skip_serializing_if = "is_reverse")]
    pub direction: Direction,
    /// Fixed case 2B cutoff; optimised per distance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
}

/// Either `start_km..=stop_km` in steps of `step_km`, or an explicit
/// `points_km` list (which may be empty).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_km: Option<Vec<f64>>,
}

fn default_seed() -> u64 {
    1
}

fn default_batches() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    /// Pulses per simulated run.
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fiber length of the simulated channel.
    #[serde(default)]
    pub distance_km: f64,
    /// Efficiency of the simulated detector when it differs from the one
    /// the estimator assumes (`system.eta`). Used to test calibration checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_eta: Option<f64>,
    /// Batch count for batch-means standard errors.
    #[serde(default = "default_batches")]
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative tabulated-model paths are
    /// rewritten against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let ModelSpec::Tabulated { path: p } = &mut cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        // scan/optimize require a grid; validate does not.
        if self.grid != GridSpec::default() {
            self.grid.points()?;
        }
        if self.run.direction == Direction::Direct && self.run.case != CaseName::Case2b {
            return Err(CliError::Config(format!(
                "direction = \"direct\" is only supported for case2b, not {}",
                self.run.case
            )));
        }
        if let Some(d) = self.run.d_max {
            if self.run.case != CaseName::Case2b {
                return Err(CliError::Config("run.d_max only applies to case2b".into()));
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::Config(format!("run.d_max must be > 0, got {d}")));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.n == 0 {
                return Err(CliError::Config("mc.n must be >= 1".into()));
            }
            if mc.batches < 2 {
                return Err(CliError::Config("mc.batches must be >= 2".into()));
            }
            if !(mc.distance_km >= 0.0 && mc.distance_km.is_finite()) {
                return Err(CliError::Config(format!(
                    "mc.distance_km must be >= 0, got {}",
                    mc.distance_km
                )));
            }
            if let Some(eta) = mc.detector_eta {
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(CliError::Config(format!(
                        "mc.detector_eta must be in (0, 1], got {eta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<FluctuationModel, CliError> {
        let model = match self {
            ModelSpec::Point => Ok(FluctuationModel::point_mass()),
            ModelSpec::Uniform { lo, hi } => FluctuationModel::uniform(*lo, *hi),
            ModelSpec::Gaussian { mean, variance } => FluctuationModel::gaussian(*mean, *variance),
            ModelSpec::Tabulated { path } => FluctuationModel::load_tabulated(path),
        };
        model.map_err(|e| CliError::Config(format!("model: {e}")))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Point => write!(f, "point"),
            ModelSpec::Uniform { lo, hi } => write!(f, "uniform(lo={lo};hi={hi})"),
            ModelSpec::Gaussian { mean, variance } => {
                write!(f, "gaussian(mean={mean};variance={variance})")
            }
            ModelSpec::Tabulated { path } => {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy())
                    .unwrap_or_default();
                write!(f, "tabulated(file={name})")
            }
        }
    }
}

impl GridSpec {
    pub fn range(start_km: f64, stop_km: f64, step_km: f64) -> Self {
        Self {
            start_km: Some(start_km),
            stop_km: Some(stop_km),
            step_km: Some(step_km),
            points_km: None,
        }
    }

    /// Distances in evaluation order. Range points are `start + i*step`, so
    /// no rounding error accumulates along the grid.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match (self.start_km, self.stop_km, self.step_km, &self.points_km) {
            (None, None, None, Some(p)) => {
                if let Some(x) = p.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                    return bad(format!("grid.points_km must be >= 0, got {x}"));
                }
                Ok(p.clone())
            }
            (Some(start), Some(stop), Some(step), None) => {
                if !(step > 0.0 && step.is_finite()) {
                    return bad(format!("grid.step_km must be > 0, got {step}"));
                }
                if !(start >= 0.0 && start.is_finite() && stop.is_finite()) {
                    return bad(format!("grid.start_km must be >= 0, got {start}"));
                }
                if start > stop {
                    return bad(format!("grid.start_km ({start}) > grid.stop_km ({stop})"));
                }
                let n = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
                Ok((0..n).map(|i| start + i as f64 * step).collect())
            }
            (None, None, None, None) => {
                bad("grid needs start_km/stop_km/step_km or points_km".into())
            }
            _ => bad("grid takes either start_km/stop_km/step_km or points_km, not both".into()),
        }
    }
}
