use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::{RunReport, Timings};
use crate::error::{Error, Result};
use crate::estimates::VerdictRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
struct VerdictRow<'a> {
    check: &'a str,
    pass: bool,
    constant: Option<f64>,
    margin: Option<f64>,
    cells: Option<usize>,
    steps: Option<usize>,
    parameters: String,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    if !dir.exists() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        log::info!("created output directory {}", dir.display());
    }
    Ok(())
}

/// Writes `verdicts` as JSON or one CSV row per verdict.
pub fn write_verdicts(verdicts: &[VerdictRecord], format: ReportFormat, path: &Path) -> Result<()> {
    match format {
        ReportFormat::Json => write_json(verdicts, path),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for v in verdicts {
                w.serialize(VerdictRow {
                    check: &v.check,
                    pass: v.pass,
                    constant: v.constant,
                    margin: v.margin,
                    cells: v.resolution.map(|r| r.cells),
                    steps: v.resolution.map(|r| r.steps),
                    parameters: v.parameters.to_string(),
                })?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
            Ok(())
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_timings(timings: &Timings, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("timings.json");
    write_json(timings, &path)?;
    Ok(path)
}

/// `report.json` (full report) or `verdicts.csv` under `dir`, plus `timings.json`.
/// The report file is byte-stable for a fixed config and seed.
pub fn emit_report(report: &RunReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = match format {
        ReportFormat::Json => {
            let p = dir.join("report.json");
            write_json(report, &p)?;
            p
        }
        ReportFormat::Csv => {
            let p = dir.join("verdicts.csv");
            write_verdicts(&report.verdicts, format, &p)?;
            p
        }
    };
    write_timings(&report.timings, dir)?;
    Ok(path)
}

/// Structured record written in place of a report when a run fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub error: String,
}

pub fn emit_error(stage: &str, err: &Error, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("error.json");
    write_json(
        &ErrorRecord {
            stage: stage.to_string(),
            error: err.to_string(),
        },
        &path,
    )?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
