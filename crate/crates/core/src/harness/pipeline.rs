use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{BoundaryConfig, CheckName, ExperimentConfig, FluxConfig};
use crate::error::Result;
use crate::estimates::generators::PositiveData;
use crate::estimates::{
    bombieri_check, ess_sup, harnack_check, log_levelset_check, median_level, moser_check,
    BombieriInput, BombieriReport, Extremum, HarnackReport, LogLevelReport, MoserReport,
    Resolution, VerdictRecord, BOMBIERI_C_THETA,
};
use crate::geometry::{harnack_cylinders, intrinsic_height, Cylinder, HeightSolve};
use crate::solver::{
    model_flux, solve, BoundaryCondition, BoundaryKind, DiagonalFlux, Field, Flux, Grid,
    SolverOptions,
};
use crate::weights::{
    doubling_estimate, intrinsic_family, muckenhoupt_constant, DoublingReport, MuckenhouptReport,
    Weight,
};

/// `(s, τ)` pairs used on every Moser family.
pub const MOSER_PAIRS: [(f64, f64); 2] = [(0.5, 1.0), (0.75, 1.0)];
/// `(s, r)` pairs of the Bombieri check.
pub const BOMBIERI_PAIRS: [(f64, f64); 3] = [(0.5, 0.75), (0.5, 1.0), (0.75, 1.0)];
/// `δ1` grid of the doubling audit.
pub const DELTA1_GRID: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];

/// Wall-clock seconds per stage. Kept out of the report so reports stay byte-stable.
pub type Timings = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub resolution: Resolution,
    pub regularization: f64,
    pub max_newton_iterations: usize,
    pub min_damping: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub data: PositiveData,
}

/// One `δ1` row of the `T1 < T/4` audit under both exponent conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionRow {
    pub delta1: f64,
    pub c2: f64,
    /// `C2 (1/4)^{p−1+δ1}`
    pub derived_bound: f64,
    /// `C2 (1/4)^{1/p′+δ1/p}`
    pub stated_bound: f64,
    pub c1_below_derived: bool,
    pub c1_below_stated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingAudit {
    pub inner: Cylinder,
    pub outer: Cylinder,
    pub doubling: DoublingReport,
    pub rows: Vec<ConventionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Report {
    pub c1_initial: f64,
    pub c1: f64,
    pub halved: bool,
    /// `T1` for each `C1` tried, in order
    pub heights: Vec<f64>,
    pub t1: f64,
    pub t1_over_t: f64,
    pub confirmed: bool,
    pub cylinder: Cylinder,
    pub audit: DoublingAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub weight: String,
    pub height: HeightSolve,
    pub cylinder: Cylinder,
    pub muckenhoupt: MuckenhouptReport,
    pub solve: SolveSummary,
    pub median: f64,
    pub log_levelset: LogLevelReport,
    pub moser_inverse: Vec<MoserReport>,
    pub bombieri: BombieriReport,
    pub argmax: Extremum,
    pub t1: T1Report,
    pub moser_sup: Vec<MoserReport>,
    pub harnack: HarnackReport,
    pub verdicts: Vec<VerdictRecord>,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, check: CheckName) -> Option<&VerdictRecord> {
        self.verdicts.iter().find(|v| v.check == check.as_str())
    }
}

struct Clock {
    start: Instant,
    timings: Timings,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings
            .insert(stage.to_string(), (now - self.start).as_secs_f64());
        self.start = now;
    }
}

pub fn build_flux(cfg: &ExperimentConfig, w: &Weight) -> Result<Box<dyn Flux>> {
    Ok(match &cfg.flux {
        FluxConfig::Model => Box::new(model_flux(w)),
        FluxConfig::Diagonal { diag } => Box::new(DiagonalFlux::new(w, diag.clone())?),
    })
}

/// Dirichlet data of a run; random data is drawn from the config seed.
pub fn boundary_data(cfg: &ExperimentConfig, q: &Cylinder) -> PositiveData {
    match &cfg.boundary {
        BoundaryConfig::Constant { value } => PositiveData::constant(*value),
        BoundaryConfig::Random => PositiveData::random(q, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
        BoundaryConfig::Explicit { data } => data.clone(),
    }
}

/// Solves on `q` with positive Dirichlet data `data`, which also gives the initial slice.
pub fn solve_positive(
    q: &Cylinder,
    cells: usize,
    steps: usize,
    p: f64,
    flux: &dyn Flux,
    data: &PositiveData,
) -> Result<(Field, SolveSummary)> {
    let grid = Grid::new(q.clone(), cells, steps, BoundaryKind::Dirichlet)?;
    let d = data.clone();
    let bc = BoundaryCondition::dirichlet(move |t, x| d.eval(t, x));
    let tb = q.t_bottom();
    let opts = SolverOptions {
        positivity: true,
        ..SolverOptions::default()
    };
    let sol = solve(&grid, &|x| data.eval(tb, x), &bc, p, flux, &opts)?.into_result()?;
    let values = &sol.field.values;
    let summary = SolveSummary {
        resolution: Resolution::from(&grid),
        regularization: sol.regularization,
        max_newton_iterations: sol
            .reports
            .iter()
            .map(|r| r.newton_iterations)
            .max()
            .unwrap_or(0),
        min_damping: sol
            .reports
            .iter()
            .map(|r| r.min_damping)
            .fold(1.0, f64::min),
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        max_value: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        data: data.clone(),
    };
    Ok((sol.field, summary))
}

fn max_finite(reports: &[MoserReport]) -> (f64, bool) {
    let c = reports.iter().map(|r| r.implied_c).fold(0.0, f64::max);
    (c, reports.iter().all(|r| r.implied_c.is_finite()))
}

fn doubling_audit(
    w: &Weight,
    q: &Cylinder,
    argmax_t: f64,
    c1: f64,
    spec: &crate::weights::QuadratureSpec,
) -> Result<DoublingAudit> {
    let e = w.exponents;
    let inner = Cylinder::new(argmax_t, q.x0.clone(), q.radius, 0.25 * q.height)?;
    let doubling = doubling_estimate(w, &inner, q, e.alpha, &DELTA1_GRID, spec)?;
    let rows = doubling
        .entries
        .iter()
        .map(|d| {
            let derived_bound = d.c2 * 0.25f64.powf(e.p - 1.0 + d.delta1);
            let stated_bound = d.c2 * 0.25f64.powf(1.0 / e.p_prime + d.delta1 / e.p);
            ConventionRow {
                delta1: d.delta1,
                c2: d.c2,
                derived_bound,
                stated_bound,
                c1_below_derived: c1 < derived_bound,
                c1_below_stated: c1 < stated_bound,
            }
        })
        .collect();
    Ok(DoublingAudit {
        inner,
        outer: q.clone(),
        doubling,
        rows,
    })
}

/// Runs height → Muckenhoupt → solve → median normalization → log level sets →
/// Moser on `1/u` → Bombieri → argmax → `T1` with its doubling audit → Moser on
/// the `T1` family → Harnack ratio.
pub fn run_harnack_pipeline(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut clock = Clock {
        start: Instant::now(),
        timings: Timings::new(),
    };
    let w = cfg.weight()?;
    let e = w.exponents;
    let spec = cfg.quadrature();
    let x0 = cfg.center();
    let (t0, radius, c) = (cfg.cylinder.t0, cfg.cylinder.radius, cfg.cylinder.constant);
    let mut verdicts = Vec::new();
    let mut push = |check: CheckName, v: VerdictRecord| {
        if cfg.wants(check) {
            verdicts.push(v);
        }
    };

    let height = intrinsic_height(&w, t0, &x0, radius, c, &spec)?;
    let q = height.cylinder(t0, &x0, radius);
    push(
        CheckName::Height,
        VerdictRecord::new("height", height.residual.abs() <= 1e-8)
            .parameters(json!({"t0": t0, "center": x0, "radius": radius, "C": c}))
            .constant(height.height)
            .margin(1e-8 - height.residual.abs()),
    );
    clock.lap("height");

    let family = intrinsic_family(
        &w,
        &[(t0, x0.clone()), (t0 - 0.5 * q.height, x0.clone())],
        &[radius, 0.5 * radius, 0.25 * radius],
        c,
        &spec,
    )?;
    let muck = muckenhoupt_constant(&w, &family, &spec)?;
    push(
        CheckName::Muckenhoupt,
        VerdictRecord::new("muckenhoupt", muck.constant.is_finite() && muck.converged)
            .parameters(json!({"family": family.len(), "levels": spec.levels}))
            .constant(muck.constant),
    );
    clock.lap("muckenhoupt");

    let flux = build_flux(cfg, &w)?;
    let data = boundary_data(cfg, &q);
    let (u, summary) = solve_positive(
        &q,
        cfg.grid.cells,
        cfg.grid.steps,
        e.p,
        flux.as_ref(),
        &data,
    )?;
    push(
        CheckName::Solve,
        VerdictRecord::new("solve", summary.min_value > 0.0)
            .parameters(json!({"flux": cfg.flux.label(), "seed": cfg.seed}))
            .constant(summary.min_value)
            .resolution(summary.resolution),
    );
    clock.lap("solve");

    let (lower, _) = harnack_cylinders(&q);
    let median = median_level(&u, &lower)?;
    let un = u.map(|v| v / median);
    let log = log_levelset_check(&un, &q, None)?;
    push(
        CheckName::LogLevelset,
        VerdictRecord::new("log-levelset", log.constant.is_finite())
            .parameters(json!({"median": median, "levels": log.ks.len()}))
            .constant(log.constant)
            .resolution(log.resolution),
    );

    let inv = un.map(|v| 1.0 / v);
    let moser_inverse = moser_check(&inv, &q, &e, &cfg.deltas, &MOSER_PAIRS)?;
    let (ci, fi) = max_finite(&moser_inverse);
    push(
        CheckName::MoserInverse,
        VerdictRecord::new("moser-inverse", fi)
            .parameters(json!({"deltas": cfg.deltas, "pairs": MOSER_PAIRS}))
            .constant(ci)
            .resolution(Resolution::from(&u.grid)),
    );

    let lebesgue = Weight::unit(e);
    let bombieri = bombieri_check(
        &BombieriInput {
            u: &inv,
            q: &q,
            w: &lebesgue,
            theta: 1.0 / e.l_minus_one(),
            deltas: cfg.deltas.clone(),
        },
        &BOMBIERI_PAIRS,
        BOMBIERI_C_THETA,
    )?;
    let bmargin = bombieri
        .pairs
        .iter()
        .map(|p| p.margin)
        .fold(f64::INFINITY, f64::min);
    push(
        CheckName::Bombieri,
        VerdictRecord::new("bombieri", bombieri.pass)
            .parameters(json!({"theta": bombieri.theta, "c1": bombieri.c1, "c2": bombieri.c2}))
            .constant(bombieri.c_theta)
            .margin(bmargin)
            .resolution(Resolution::from(&u.grid)),
    );
    clock.lap("infimum");

    let argmax = ess_sup(&un, &lower)?;
    let c1_initial = cfg.c1();
    let mut c1 = c1_initial;
    let mut heights = Vec::new();
    let mut audit;
    loop {
        let t1 = intrinsic_height(&w, argmax.t, &x0, radius, c1, &spec)?.height;
        heights.push(t1);
        audit = doubling_audit(&w, &q, argmax.t, c1, &spec)?;
        if t1 < 0.25 * q.height || heights.len() == 2 {
            break;
        }
        log::warn!(
            "T1 = {t1:e} >= T/4 = {:e}; halving C1 = {c1}",
            0.25 * q.height
        );
        c1 *= 0.5;
    }
    let t1 = *heights.last().expect("one height");
    let confirmed = t1 < 0.25 * q.height;
    let q1 = Cylinder::new(argmax.t, x0.clone(), radius, t1)?;
    push(
        CheckName::T1Doubling,
        VerdictRecord::new("t1-doubling", confirmed)
            .parameters(json!({
                "c1_initial": c1_initial,
                "c1": c1,
                "halved": heights.len() > 1,
                "derived_convention_holds": audit.rows.iter().any(|r| r.c1_below_derived),
                "stated_convention_holds": audit.rows.iter().any(|r| r.c1_below_stated),
            }))
            .constant(t1 / q.height)
            .margin(0.25 - t1 / q.height),
    );
    let t1_report = T1Report {
        c1_initial,
        c1,
        halved: heights.len() > 1,
        heights,
        t1,
        t1_over_t: t1 / q.height,
        confirmed,
        cylinder: q1.clone(),
        audit,
    };

    // (1/4, 1/2) and (3/8, 1/2) on the T1 family
    let half = q1.scaled(0.5);
    let inside = half.t_bottom() >= q.t_bottom() - 1e-12;
    let moser_sup = if inside {
        moser_check(&un, &half, &e, &cfg.deltas, &MOSER_PAIRS)?
    } else {
        Vec::new()
    };
    let (cs, fs) = max_finite(&moser_sup);
    let mut record = VerdictRecord::new("moser-sup", inside && fs)
        .parameters(json!({"deltas": cfg.deltas, "pairs": [[0.25, 0.5], [0.375, 0.5]], "t1": t1}))
        .constant(cs)
        .resolution(Resolution::from(&u.grid));
    if !inside {
        record = record.note(format!("T1 family {half} leaves the solved cylinder {q}"));
    }
    push(CheckName::MoserSup, record);
    clock.lap("supremum");

    let harnack = harnack_check(&u, &q)?;
    let normalized = harnack_check(&un, &q)?;
    let consistent = (normalized.ratio - harnack.ratio).abs() <= 1e-12 * harnack.ratio;
    push(
        CheckName::Harnack,
        VerdictRecord::new("harnack", harnack.ratio.is_finite() && consistent)
            .parameters(json!({
                "sup_lower": harnack.sup_lower.value,
                "inf_upper": harnack.inf_upper.value,
            }))
            .constant(harnack.ratio)
            .resolution(harnack.resolution),
    );
    clock.lap("harnack");

    Ok(RunReport {
        config: cfg.clone(),
        weight: w.label.clone(),
        height,
        cylinder: q,
        muckenhoupt: muck,
        solve: summary,
        median,
        log_levelset: log,
        moser_inverse,
        bombieri,
        argmax,
        t1: t1_report,
        moser_sup,
        harnack,
        verdicts,
        timings: clock.timings,
    })
}
