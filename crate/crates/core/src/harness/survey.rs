use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExponentConfig;
use crate::error::{Error, Result};
use crate::geometry::intrinsic_height;
use crate::weights::{intrinsic_family, muckenhoupt_constant, QuadratureSpec, WeightSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyEntry {
    pub weight: WeightSpec,
    #[serde(default)]
    pub exponents: ExponentConfig,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "default_constant")]
    pub constant: f64,
}

fn default_t0() -> f64 {
    1.0
}

fn default_constant() -> f64 {
    1.0
}

/// Flat CSV row: one weight at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub weight: String,
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
    pub admissible: bool,
    pub rejection: String,
    pub muckenhoupt: f64,
    pub radius: f64,
    pub height: f64,
    pub height_over_rp: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Five catalog weights with integrable duals for `(p, n, α, r) = (2, 1, 4, 2)`.
pub fn default_catalog() -> Vec<SurveyEntry> {
    let at = |weight| SurveyEntry {
        weight,
        exponents: ExponentConfig::default(),
        t0: 1.0,
        center: vec![0.5],
        constant: 1.0,
    };
    vec![
        at(WeightSpec::Constant { value: 1.0 }),
        at(WeightSpec::PowerX { gamma: 0.25 }),
        at(WeightSpec::Radial { beta: 0.5 }),
        at(WeightSpec::PowerT { theta: 0.25 }),
        at(WeightSpec::Product {
            gamma: 0.25,
            theta: 0.25,
        }),
    ]
}

/// `count` log-spaced radii in `[lo, hi]`.
pub fn radius_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    crate::estimates::log_levels(lo, hi, count)
}

fn survey_one(entry: &SurveyEntry, radii: &[f64], spec: &QuadratureSpec) -> Vec<SurveyRow> {
    let e = entry.exponents;
    let label = entry.weight.label();
    let row =
        |admissible, rejection: String, muck, radius, h: Option<&crate::geometry::HeightSolve>| {
            SurveyRow {
                weight: label.clone(),
                p: e.p,
                n: e.n,
                alpha: e.alpha,
                r: e.r,
                admissible,
                rejection,
                muckenhoupt: muck,
                radius,
                height: h.map_or(f64::NAN, |h| h.height),
                height_over_rp: h.map_or(f64::NAN, |h| h.height / radius.powf(e.p)),
                residual: h.map_or(f64::NAN, |h| h.residual),
                iterations: h.map_or(0, |h| h.iterations),
            }
        };
    let failed = |msg: String| {
        radii
            .iter()
            .map(|&r| row(false, msg.clone(), f64::NAN, r, None))
            .collect()
    };
    let exps = match e.admissible() {
        Ok(x) => x,
        Err(err) => return failed(err.to_string()),
    };
    let w = match entry.weight.build(exps) {
        Ok(w) => w,
        Err(err) => return failed(err.to_string()),
    };
    let center = if entry.center.is_empty() {
        vec![0.0; e.n]
    } else {
        entry.center.clone()
    };
    let muck = intrinsic_family(
        &w,
        &[(entry.t0, center.clone())],
        radii,
        entry.constant,
        spec,
    )
    .and_then(|fam| muckenhoupt_constant(&w, &fam, spec))
    .map_or(f64::NAN, |m| m.constant);
    radii
        .iter()
        .map(
            |&r| match intrinsic_height(&w, entry.t0, &center, r, entry.constant, spec) {
                Ok(h) => row(true, String::new(), muck, r, Some(&h)),
                Err(err) => row(true, err.to_string(), muck, r, None),
            },
        )
        .collect()
}

/// Admissibility, Muckenhoupt constant and the `T(R)` table per weight. Failures
/// are recorded in the rows, never fatal.
pub fn run_weight_survey(
    entries: &[SurveyEntry],
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Vec<SurveyRow> {
    entries
        .par_iter()
        .map(|e| survey_one(e, radii, spec))
        .collect::<Vec<_>>()
        .concat()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryList {
    entries: Vec<SurveyEntry>,
}

/// Reads `entries = [...]` from TOML, or `{"entries": [...]}` from a `.json` file.
pub fn load_survey_entries(path: &Path) -> Result<Vec<SurveyEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let list: EntryList = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    Ok(list.entries)
}

pub fn write_survey_csv(rows: &[SurveyRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
