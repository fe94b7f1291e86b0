use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use harnack_core::estimates::VerdictRecord;
use harnack_core::geometry::intrinsic_height;
use harnack_core::harness::{
    boundary_data, build_flux, default_catalog, emit_error, emit_report, load_survey_entries,
    radius_grid, read_report, run_harnack_pipeline, run_weight_survey, solve_positive, verify,
    write_json, write_survey_csv, write_timings, write_verdicts, CheckName, ExperimentConfig,
    ReportFormat, SurveyEntry, Timings,
};
use harnack_core::solver::DumpLabels;
use harnack_core::weights::{intrinsic_family, muckenhoupt_constant};
use harnack_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "harnack-lab",
    version,
    about = "Intrinsic cylinders, solver runs and Harnack/Moser checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML, or JSON by extension); defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Grid refinement levels (each doubles cells and steps)
    #[arg(long, global = true, default_value_t = 0)]
    refine: u32,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Muckenhoupt constant over the intrinsic family at the configured center
    Muckenhoupt,
    /// Intrinsic height table T(R) over ten radii up to the configured R
    Height,
    /// Solve with positive Dirichlet data and dump the field
    Solve,
    /// Moser checks on 1/u and on the T1 family
    Moser,
    /// Full Harnack pipeline
    Harnack,
    /// Randomized lemma suites and oracle checks
    VerifyLemmas,
    /// Weight survey; `--config` may point to a list of survey entries
    Survey,
    /// Re-emit an existing report.json in the requested format
    Report {
        /// report.json written by an earlier run
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Muckenhoupt => "muckenhoupt",
            Command::Height => "height",
            Command::Solve => "solve",
            Command::Moser => "moser",
            Command::Harnack => "harnack",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Survey => "survey",
            Command::Report { .. } => "report",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    cfg = cfg.refined(cli.refine);
    cfg.validate()?;
    Ok(cfg)
}

fn finish(verdicts: &[VerdictRecord], format: Format, dir: &Path, stem: &str) -> Result<bool> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    write_verdicts(verdicts, format.into(), &dir.join(format!("{stem}.{ext}")))?;
    for v in verdicts {
        println!("{:<16} {}", v.check, if v.pass { "pass" } else { "FAIL" });
    }
    Ok(verdicts.iter().all(|v| v.pass))
}

fn run(cli: &Cli) -> Result<bool> {
    let mut timings = Timings::new();
    let clock = std::time::Instant::now();
    let cfg = load_config(cli)?;
    let out = cfg.output.clone();
    let ok = match &cli.command {
        Command::Muckenhoupt => {
            let w = cfg.weight()?;
            let spec = cfg.quadrature();
            let r = cfg.cylinder.radius;
            let family = intrinsic_family(
                &w,
                &[(cfg.cylinder.t0, cfg.center())],
                &radius_grid(r / 16.0, r, 10),
                cfg.cylinder.constant,
                &spec,
            )?;
            let rep = muckenhoupt_constant(&w, &family, &spec)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            write_json(&rep, &out.join("muckenhoupt.json"))?;
            let v = VerdictRecord::new("muckenhoupt", rep.constant.is_finite() && rep.converged)
                .constant(rep.constant);
            finish(&[v], cli.format, &out, "verdicts")?
        }
        Command::Height => {
            let w = cfg.weight()?;
            let spec = cfg.quadrature();
            let r = cfg.cylinder.radius;
            let radii = radius_grid(r / 16.0, r, 10);
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let path = out.join("heights.csv");
            let mut table = String::from("R,T,residual,iterations\n");
            let mut worst: f64 = 0.0;
            for &rad in &radii {
                let h = intrinsic_height(
                    &w,
                    cfg.cylinder.t0,
                    &cfg.center(),
                    rad,
                    cfg.cylinder.constant,
                    &spec,
                )?;
                worst = worst.max(h.residual.abs());
                table.push_str(&format!(
                    "{rad},{},{},{}\n",
                    h.height, h.residual, h.iterations
                ));
            }
            std::fs::write(&path, table).map_err(|e| Error::Io { path, source: e })?;
            let v = VerdictRecord::new("height", worst <= 1e-8).constant(worst);
            finish(&[v], cli.format, &out, "verdicts")?
        }
        Command::Solve => {
            let w = cfg.weight()?;
            let h = intrinsic_height(
                &w,
                cfg.cylinder.t0,
                &cfg.center(),
                cfg.cylinder.radius,
                cfg.cylinder.constant,
                &cfg.quadrature(),
            )?;
            let q = h.cylinder(cfg.cylinder.t0, &cfg.center(), cfg.cylinder.radius);
            let data = boundary_data(&cfg, &q);
            let (u, summary) = solve_positive(
                &q,
                cfg.grid.cells,
                cfg.grid.steps,
                w.exponents.p,
                build_flux(&cfg, &w)?.as_ref(),
                &data,
            )?;
            u.write_dump(
                &out,
                "field",
                &DumpLabels {
                    weight: w.label.clone(),
                    flux: cfg.flux.label().to_string(),
                },
            )?;
            write_json(&summary, &out.join("solve.json"))?;
            let v = VerdictRecord::new("solve", summary.min_value > 0.0)
                .constant(summary.min_value)
                .resolution(summary.resolution);
            finish(&[v], cli.format, &out, "verdicts")?
        }
        Command::Moser | Command::Harnack => {
            let mut cfg = cfg.clone();
            if matches!(cli.command, Command::Moser) {
                cfg.checks = vec![CheckName::MoserInverse, CheckName::MoserSup];
            }
            let rep = run_harnack_pipeline(&cfg)?;
            let path = emit_report(&rep, cli.format.into(), &out)?;
            log::info!("wrote {}", path.display());
            for v in &rep.verdicts {
                println!("{:<16} {}", v.check, if v.pass { "pass" } else { "FAIL" });
            }
            timings.extend(rep.timings.clone());
            rep.pass()
        }
        Command::VerifyLemmas => {
            let verdicts = verify::lemma_suites(cfg.seed)?;
            finish(&verdicts, cli.format, &out, "lemmas")?
        }
        Command::Survey => {
            let entries: Vec<SurveyEntry> = match &cli.config {
                Some(p) => load_survey_entries(p)?,
                None => default_catalog(),
            };
            let rows = run_weight_survey(&entries, &radius_grid(0.05, 1.0, 10), &cfg.quadrature());
            write_survey_csv(&rows, &out.join("survey.csv"))?;
            println!("{} rows", rows.len());
            true
        }
        Command::Report { input } => {
            let rep = read_report(input)?;
            emit_report(&rep, cli.format.into(), &out)?;
            rep.pass()
        }
    };
    timings.insert("total".into(), clock.elapsed().as_secs_f64());
    write_timings(&timings, &out)?;
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            if let Err(w) = emit_error(cli.command.name(), &e, &out) {
                eprintln!("could not write error record: {w}");
            }
            ExitCode::from(2)
        }
    }
}
