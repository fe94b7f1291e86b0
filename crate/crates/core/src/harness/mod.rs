//! Configuration, the Harnack pipeline, weight surveys, reports and the
//! verification suites shared by the CLI and the acceptance tests.

mod config;
mod pipeline;
mod report;
mod survey;
pub mod verify;

pub use config::{
    BoundaryConfig, CheckName, CylinderConfig, ExperimentConfig, ExponentConfig, FluxConfig,
    GridConfig,
};
pub use pipeline::{
    boundary_data, build_flux, run_harnack_pipeline, solve_positive, ConventionRow, DoublingAudit,
    RunReport, SolveSummary, T1Report, Timings, BOMBIERI_PAIRS, DELTA1_GRID, MOSER_PAIRS,
};
pub use report::{
    emit_error, emit_report, read_report, write_json, write_timings, write_verdicts, ErrorRecord,
    ReportFormat,
};
pub use survey::{
    default_catalog, load_survey_entries, radius_grid, run_weight_survey, write_survey_csv,
    SurveyEntry, SurveyRow,
};
