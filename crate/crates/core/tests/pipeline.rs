use harnack_core::harness::{
    default_catalog, emit_report, radius_grid, read_report, run_harnack_pipeline,
    run_weight_survey, write_survey_csv, BoundaryConfig, CheckName, ExperimentConfig,
    FluxConfig, ReportFormat,
};
use harnack_core::weights::{QuadratureSpec, WeightSpec};

fn small(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed,
        ..ExperimentConfig::default()
    };
    cfg.grid.cells = 16;
    cfg.grid.steps = 32;
    cfg.grid.quadrature_levels = 4;
    cfg
}

#[test]
fn constant_data_gives_unit_ratio() {
    let mut cfg = small(0);
    cfg.boundary = BoundaryConfig::Constant { value: 3.0 };
    let rep = run_harnack_pipeline(&cfg).unwrap();
    assert!((rep.harnack.ratio - 1.0).abs() < 1e-12, "{}", rep.harnack.ratio);
    for v in &rep.verdicts {
        assert!(v.pass, "{v:?}");
    }
    assert!((rep.height.height - 1.0).abs() < 1e-12);
}

#[test]
fn radial_weight_runs_on_its_own_time_scale() {
    let mut cfg = small(3);
    cfg.weight = WeightSpec::Radial { beta: 1.0 };
    cfg.cylinder.t0 = 2.0;
    let rep = run_harnack_pipeline(&cfg).unwrap();
    let r = cfg.cylinder.radius;
    assert!((rep.height.height - r * r).abs() > 0.1, "T = {}", rep.height.height);
    assert!(rep.harnack.ratio.is_finite() && rep.harnack.ratio >= 1.0);
    assert!(rep.verdict(CheckName::Muckenhoupt).unwrap().pass);
    assert!(rep.t1.t1_over_t < 0.25);
}

#[test]
fn radial_weight_through_the_origin_is_not_converged() {
    let mut cfg = small(0);
    cfg.weight = WeightSpec::Radial { beta: 1.0 };
    cfg.checks = vec![CheckName::Height, CheckName::Muckenhoupt];
    let rep = run_harnack_pipeline(&cfg).unwrap();
    assert!(!rep.verdict(CheckName::Muckenhoupt).unwrap().pass);
}

#[test]
fn diagonal_flux_and_two_dimensions() {
    let mut cfg = small(1);
    cfg.flux = FluxConfig::Diagonal { diag: vec![2.0] };
    let rep = run_harnack_pipeline(&cfg).unwrap();
    assert!(rep.harnack.ratio.is_finite());

    let mut cfg = small(2);
    cfg.exponents.n = 2;
    cfg.exponents.alpha = 8.0;
    cfg.exponents.r = 4.0;
    cfg.grid.cells = 8;
    cfg.grid.steps = 16;
    cfg.grid.quadrature_levels = 3;
    let rep = run_harnack_pipeline(&cfg).unwrap();
    assert!(rep.harnack.ratio.is_finite() && rep.solve.min_value > 0.0);
}

#[test]
fn selected_checks_only() {
    let mut cfg = small(0);
    cfg.checks = vec![CheckName::Height, CheckName::Harnack];
    let rep = run_harnack_pipeline(&cfg).unwrap();
    let names: Vec<&str> = rep.verdicts.iter().map(|v| v.check.as_str()).collect();
    assert!(names.contains(&"harnack") && !names.contains(&"bombieri"), "{names:?}");
}

#[test]
fn report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_harnack_pipeline(&small(4)).unwrap();
    let path = emit_report(&rep, ReportFormat::Json, dir.path()).unwrap();
    let back = read_report(&path).unwrap();
    assert_eq!(back.verdicts.len(), rep.verdicts.len());
    assert_eq!(back.harnack.ratio, rep.harnack.ratio);
    let csv = emit_report(&back, ReportFormat::Csv, &dir.path().join("csv")).unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), rep.verdicts.len() + 1);
}

#[test]
fn survey_csv_has_one_row_per_weight_and_radius() {
    let dir = tempfile::tempdir().unwrap();
    let radii = radius_grid(0.05, 1.0, 10);
    let rows = run_weight_survey(&default_catalog(), &radii, &QuadratureSpec::gauss(4));
    let path = dir.path().join("survey.csv");
    write_survey_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 51);
    for r in &rows {
        assert!(r.admissible && r.height.is_finite(), "{r:?}");
    }
}
