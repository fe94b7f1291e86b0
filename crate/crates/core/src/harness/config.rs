use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::generators::PositiveData;
use crate::weights::{Exponents, QuadratureSpec, Weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            p: 2.0,
            n: 1,
            alpha: 4.0,
            r: 2.0,
        }
    }
}

impl ExponentConfig {
    pub fn admissible(&self) -> Result<Exponents> {
        Ok(Exponents::admissible(self.p, self.n, self.alpha, self.r)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylinderConfig {
    /// top time `t0`
    pub t0: f64,
    /// spatial center `x0`; empty means the origin
    pub center: Vec<f64>,
    pub radius: f64,
    /// height constant `C`
    pub constant: f64,
}

impl Default for CylinderConfig {
    fn default() -> Self {
        CylinderConfig {
            t0: 1.0,
            center: Vec::new(),
            radius: 1.0,
            constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// cells per spatial axis
    pub cells: usize,
    pub steps: usize,
    /// quadrature refinement levels for heights and Muckenhoupt averages
    pub quadrature_levels: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cells: 32,
            steps: 64,
            quadrature_levels: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxConfig {
    /// `A = ω |η|^{p−2} η`
    Model,
    /// `A = ω |η|^{p−2} D η` with a positive diagonal `D`
    Diagonal { diag: Vec<f64> },
}

impl Default for FluxConfig {
    fn default() -> Self {
        FluxConfig::Model
    }
}

impl FluxConfig {
    pub fn label(&self) -> &'static str {
        match self {
            FluxConfig::Model => "model",
            FluxConfig::Diagonal { .. } => "diagonal",
        }
    }
}

/// Positive Dirichlet data on the parabolic boundary; the initial slice uses the
/// same function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant {
        value: f64,
    },
    /// constant-plus-bumps data drawn from the run seed
    Random,
    Explicit {
        data: PositiveData,
    },
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig::Random
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Height,
    Muckenhoupt,
    Solve,
    LogLevelset,
    MoserInverse,
    Bombieri,
    T1Doubling,
    MoserSup,
    Harnack,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Height,
        CheckName::Muckenhoupt,
        CheckName::Solve,
        CheckName::LogLevelset,
        CheckName::MoserInverse,
        CheckName::Bombieri,
        CheckName::T1Doubling,
        CheckName::MoserSup,
        CheckName::Harnack,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Height => "height",
            CheckName::Muckenhoupt => "muckenhoupt",
            CheckName::Solve => "solve",
            CheckName::LogLevelset => "log-levelset",
            CheckName::MoserInverse => "moser-inverse",
            CheckName::Bombieri => "bombieri",
            CheckName::T1Doubling => "t1-doubling",
            CheckName::MoserSup => "moser-sup",
            CheckName::Harnack => "harnack",
        }
    }
}

fn all_checks() -> Vec<CheckName> {
    CheckName::ALL.to_vec()
}

fn default_deltas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "unit_weight")]
    pub weight: WeightSpec,
    #[serde(default)]
    pub exponents: ExponentConfig,
    #[serde(default)]
    pub cylinder: CylinderConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub flux: FluxConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default = "all_checks")]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// `C1` of the secondary height; `None` means `C / 8`
    #[serde(default)]
    pub c1: Option<f64>,
    /// `δ` grid for the Moser and Bombieri checks
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
}

fn unit_weight() -> WeightSpec {
    WeightSpec::Constant { value: 1.0 }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

impl ExperimentConfig {
    /// Reads JSON (`.json`) or TOML (anything else).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.exponents.admissible()?;
        if !self.cylinder.center.is_empty() && self.cylinder.center.len() != e.n {
            return Err(Error::Config(format!(
                "center has {} coordinates, n = {}",
                self.cylinder.center.len(),
                e.n
            )));
        }
        if !(self.cylinder.radius > 0.0 && self.cylinder.constant > 0.0) {
            return Err(Error::Config("radius and constant must be positive".into()));
        }
        if e.n > 2 {
            return Err(Error::Config("the solver supports n <= 2".into()));
        }
        if self.grid.cells < 8 || self.grid.steps < 4 {
            return Err(Error::Config("need cells >= 8 and steps >= 4".into()));
        }
        if let Some(c1) = self.c1 {
            if !(c1 > 0.0) {
                return Err(Error::Config(format!("c1 must be positive, got {c1}")));
            }
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(Error::Config(
                "deltas must be a nonempty subset of (0, 1)".into(),
            ));
        }
        if let FluxConfig::Diagonal { diag } = &self.flux {
            if diag.len() != e.n || diag.iter().any(|d| !(*d > 0.0)) {
                return Err(Error::Config(
                    "diagonal flux needs n positive entries".into(),
                ));
            }
        }
        match &self.boundary {
            BoundaryConfig::Constant { value } if !(*value > 0.0) => {
                return Err(Error::Config("boundary data must be positive".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        if self.cylinder.center.is_empty() {
            vec![0.0; self.exponents.n]
        } else {
            self.cylinder.center.clone()
        }
    }

    pub fn weight(&self) -> Result<Weight> {
        self.weight.build(self.exponents.admissible()?)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::gauss(self.grid.quadrature_levels)
    }

    pub fn c1(&self) -> f64 {
        self.c1.unwrap_or(self.cylinder.constant / 8.0)
    }

    pub fn wants(&self, check: CheckName) -> bool {
        self.checks.contains(&check)
    }

    /// Doubles cells and steps `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        let mut c = self.clone();
        c.grid.cells <<= levels;
        c.grid.steps <<= levels;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.checks.len(), CheckName::ALL.len());
        assert_eq!(c.c1(), 0.125);
        c.validate().unwrap();
    }

    #[test]
    fn toml_and_json_agree() {
        let t = r#"
seed = 7
checks = ["height", "harnack"]
[weight]
kind = "radial"
beta = 1.0
[grid]
cells = 16
"#;
        let j = r#"{"seed": 7, "checks": ["height", "harnack"],
            "weight": {"kind": "radial", "beta": 1.0}, "grid": {"cells": 16}}"#;
        let a: ExperimentConfig = toml::from_str(t).unwrap();
        let b: ExperimentConfig = serde_json::from_str(j).unwrap();
        assert_eq!(a, b);
        assert!(a.wants(CheckName::Harnack) && !a.wants(CheckName::Bombieri));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut c = ExperimentConfig::default();
        c.exponents.alpha = 0.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.cylinder.center = vec![0.0, 0.0];
        assert!(c.validate().is_err());
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }
}
