//! Oracle runs and randomized lemma suites, shared by `harnack-lab verify-lemmas`
//! and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{BoundaryConfig, CheckName, ExperimentConfig};
use super::pipeline::run_harnack_pipeline;
use crate::error::Result;
use crate::estimates::generators::{iteration_sample, mamedov_field, BumpSum, MamedovClass};
use crate::estimates::{
    interpolation_check, iteration_check, mamedov_check, steklov_average, steklov_errors,
    BombieriReport, BoxFunction, IterationVerdict, VerdictRecord,
};
use crate::geometry::Cylinder;
use crate::solver::{
    model_flux, p_eigenpair_1d, solve, BoundaryCondition, BoundaryKind, Field, Grid, SolverOptions,
};
use crate::weights::{Exponents, Weight};

/// `t^{−1/2} exp(−x²/(4t))`
pub fn heat_kernel(t: f64, x: f64) -> f64 {
    t.sqrt().recip() * (-x * x / (4.0 * t)).exp()
}

fn unit(p: f64, alpha: f64, r: f64) -> Weight {
    Weight::unit(Exponents::admissible(p, 1, alpha, r).expect("admissible"))
}

/// Implicit heat run on `q` with exact Dirichlet data and initial slice.
pub fn heat_field(q: &Cylinder, cells: usize, steps: usize) -> Result<Field> {
    let g = Grid::new(q.clone(), cells, steps, BoundaryKind::Dirichlet)?;
    let bc = BoundaryCondition::dirichlet(|t, x| heat_kernel(t, x[0]));
    let tb = q.t_bottom();
    let w = unit(2.0, 4.0, 2.0);
    let sol = solve(
        &g,
        &|x| heat_kernel(tb, x[0]),
        &bc,
        2.0,
        &model_flux(&w),
        &SolverOptions::default(),
    )?
    .into_result()?;
    Ok(sol.field)
}

fn max_error(u: &Field, exact: impl Fn(f64, &[f64]) -> f64) -> f64 {
    let g = &u.grid;
    let mut err: f64 = 0.0;
    for m in 0..g.levels() {
        for k in 0..g.nodes() {
            err = err.max((u.at(m, k) - exact(g.time(m), &g.position(k))).abs());
        }
    }
    err
}

/// Cylinder of the convergence study: `x ∈ (−1, 1)`, `t ∈ (0.25, 0.35)`.
pub fn heat_study_cylinder() -> Cylinder {
    Cylinder::new(0.35, vec![0.0], 1.0, 0.1).expect("valid cylinder")
}

/// Intrinsic `C = 1` cylinder `(−1, 1) × (0.25, 1.25)` used by the estimate checks.
pub fn heat_intrinsic_cylinder() -> Cylinder {
    Cylinder::new(1.25, vec![0.0], 1.0, 1.0).expect("valid cylinder")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub resolutions: Vec<(usize, usize)>,
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})`
    pub orders: Vec<f64>,
}

fn orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / ratio.ln())
        .collect()
}

/// Max-norm error of the heat run at each `(cells, steps)`; resolutions should
/// refine by a factor two in one direction.
pub fn heat_convergence(resolutions: &[(usize, usize)]) -> Result<ConvergenceStudy> {
    let q = heat_study_cylinder();
    let errors = resolutions
        .par_iter()
        .map(|&(c, s)| {
            Ok(max_error(&heat_field(&q, c, s)?, |t, x| {
                heat_kernel(t, x[0])
            }))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceStudy {
        resolutions: resolutions.to_vec(),
        orders: orders(&errors, 2.0),
        errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableRun {
    pub cells: usize,
    pub steps: usize,
    pub lambda: f64,
    pub error: f64,
    /// `5 (h + Δt) ‖u‖∞`
    pub bound: f64,
}

/// `p = 3`: `u = exp(−λ t) φ(x)` on `(0, 1) × (0, 0.5)` against the shooting eigenpair.
pub fn p3_separable(cells: usize, steps: usize) -> Result<SeparableRun> {
    let p = 3.0;
    let w = unit(p, 16.0, 16.0);
    let eig = p_eigenpair_1d(p, (0.0, 1.0), 1e-12)?;
    let lambda = eig.lambda;
    let q = Cylinder::new(0.5, vec![0.5], 0.5, 0.5)?;
    let g = Grid::new(q, cells, steps, BoundaryKind::Dirichlet)?;
    let bc = BoundaryCondition::dirichlet(|_, _| 0.0);
    let phi = eig.clone();
    let sol = solve(
        &g,
        &move |x| phi.eval(x[0]),
        &bc,
        p,
        &model_flux(&w),
        &SolverOptions::default(),
    )?
    .into_result()?;
    let error = max_error(&sol.field, |t, x| (-lambda * t).exp() * eig.eval(x[0]));
    Ok(SeparableRun {
        cells,
        steps,
        lambda,
        error,
        bound: 5.0 * (g.h() + g.dt()) * sol.field.max_abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub total: usize,
    pub passed: usize,
    /// suite-specific worst value (smallest margin or largest drift)
    pub worst: f64,
    pub detail: serde_json::Value,
}

impl SuiteSummary {
    pub fn pass(&self) -> bool {
        self.passed == self.total
    }

    pub fn verdict(&self) -> VerdictRecord {
        VerdictRecord::new(self.name.clone(), self.pass())
            .parameters(json!({"total": self.total, "passed": self.passed, "detail": self.detail}))
            .margin(self.worst)
    }
}

/// Random fields split evenly between the two structural classes, `s ∈ (1/2, 1)`.
pub fn mamedov_suite(seed: u64, count: usize) -> Result<SuiteSummary> {
    let q = Cylinder::new(1.0, vec![0.0], 1.0, 1.0)?;
    let g = Grid::new(q.clone(), 48, 48, BoundaryKind::Dirichlet)?;
    let verdicts = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let class = if i % 2 == 0 {
                MamedovClass::LateralVanishing
            } else {
                MamedovClass::TimeNondecreasing
            };
            let s = rng.gen_range(0.55..0.95);
            let v = mamedov_field(&g, s, class, &mut rng);
            mamedov_check(&v, &q, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = verdicts
        .iter()
        .map(|v| v.rhs + v.slack - v.lhs)
        .fold(f64::INFINITY, f64::min);
    Ok(SuiteSummary {
        name: "mamedov".into(),
        total: count,
        passed: verdicts.iter().filter(|v| v.pass).count(),
        worst,
        detail: json!({"grid": [g.cells, g.steps]}),
    })
}

/// Back-propagated samples with random `(α, A, β)`.
pub fn iteration_suite(seed: u64, count: usize) -> Result<SuiteSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let alpha = rng.gen_range(0.0..0.9);
        let a = rng.gen_range(0.1..10.0);
        let beta = rng.gen_range(0.5..3.0);
        let (ts, f) = iteration_sample(&mut rng, alpha, a, beta, (1.0, 2.0), 40);
        if let IterationVerdict::Checked {
            worst_margin, pass, ..
        } = iteration_check(&ts, &f, alpha, a, beta)?
        {
            passed += usize::from(pass);
            worst = worst.min(worst_margin);
        }
    }
    Ok(SuiteSummary {
        name: "iteration".into(),
        total: count,
        passed,
        worst,
        detail: json!({"points": 40}),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSuite {
    pub sizes: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// `(max − min) / min` of the per-size maxima
    pub drift: f64,
}

/// `n = 2`, `p = 2`, `q = 3/2`: max ratio over `per_size` random bump sums on each
/// box `(−size, size)²`, drawn independently per size.
pub fn interpolation_suite(
    seed: u64,
    sizes: &[f64],
    per_size: usize,
) -> Result<InterpolationSuite> {
    let max_ratios = sizes
        .iter()
        .enumerate()
        .map(|(j, &size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 * j as u64));
            let shapes: Vec<BumpSum> = (0..per_size)
                .map(|_| BumpSum::random(2, &mut rng))
                .collect();
            let ratios = shapes
                .par_iter()
                .map(|b| {
                    let f = |x: &[f64]| b.eval(x, size);
                    let bf = BoxFunction {
                        lo: vec![-size; 2],
                        hi: vec![size; 2],
                        f: &f,
                        cells: 24,
                    };
                    interpolation_check(&bf, 1.5, 2.0).map(|r| r.ratio)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ratios.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = max_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = max_ratios.iter().copied().fold(0.0, f64::max);
    Ok(InterpolationSuite {
        sizes: sizes.to_vec(),
        max_ratios,
        drift: (hi - lo) / lo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteklovSuite {
    pub hs: Vec<f64>,
    pub gradient_weighted: Vec<f64>,
    pub sup_lp: Vec<f64>,
    pub monotone: bool,
}

/// Steklov errors of the intrinsic heat run over `h ∈ {T/8, T/16, T/32}`.
pub fn steklov_suite(cells: usize, steps: usize) -> Result<SteklovSuite> {
    let q = heat_intrinsic_cylinder();
    let v = heat_field(&q, cells, steps)?;
    let w = unit(2.0, 4.0, 2.0);
    let hs: Vec<f64> = [8.0, 16.0, 32.0].iter().map(|d| q.height / d).collect();
    let errs = hs
        .iter()
        .map(|&h| steklov_errors(&v, &steklov_average(&v, h)?, h, &w, 2.0))
        .collect::<Result<Vec<_>>>()?;
    let gradient_weighted: Vec<f64> = errs.iter().map(|e| e.gradient_weighted).collect();
    let sup_lp: Vec<f64> = errs.iter().map(|e| e.sup_lp).collect();
    let dec = |x: &[f64]| x.windows(2).all(|w| w[1] < w[0]);
    Ok(SteklovSuite {
        monotone: dec(&gradient_weighted) && dec(&sup_lp),
        hs,
        gradient_weighted,
        sup_lp,
    })
}

/// Unit-weight reference configuration with random positive data from `seed`.
pub fn reference_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        boundary: BoundaryConfig::Random,
        ..ExperimentConfig::default()
    }
}

/// Bombieri reports of the reference family (seeds `0..runs`).
pub fn bombieri_reference(runs: u64) -> Result<Vec<BombieriReport>> {
    (0..runs)
        .into_par_iter()
        .map(|seed| run_harnack_pipeline(&reference_config(seed)).map(|r| r.bombieri))
        .collect()
}

/// Smallest `C_θ` that makes every pair of every reference run hold.
pub fn calibrate_c_theta(runs: u64) -> Result<f64> {
    Ok(bombieri_reference(runs)?
        .iter()
        .flat_map(|r| r.pairs.iter().map(|p| p.required_c_theta))
        .fold(0.0, f64::max))
}

pub fn bombieri_suite(runs: u64) -> Result<SuiteSummary> {
    let reports = bombieri_reference(runs)?;
    let worst = reports
        .iter()
        .flat_map(|r| r.pairs.iter().map(|p| p.margin))
        .fold(f64::INFINITY, f64::min);
    Ok(SuiteSummary {
        name: "bombieri".into(),
        total: reports.len(),
        passed: reports.iter().filter(|r| r.pass).count(),
        worst,
        detail: json!({"c_theta": reports.first().map(|r| r.c_theta)}),
    })
}

/// Every lemma suite at its acceptance size, as verdict records.
pub fn lemma_suites(seed: u64) -> Result<Vec<VerdictRecord>> {
    let mut out = vec![
        mamedov_suite(seed, 200)?.verdict(),
        iteration_suite(seed, 100)?.verdict(),
        bombieri_suite(5)?.verdict(),
    ];
    let interp = interpolation_suite(seed, &[1.0, 4.0, 16.0], 100)?;
    out.push(
        VerdictRecord::new("interpolation", interp.drift <= 0.10)
            .parameters(json!({"sizes": interp.sizes, "max_ratios": interp.max_ratios}))
            .constant(interp.max_ratios.iter().copied().fold(0.0, f64::max))
            .margin(0.10 - interp.drift),
    );
    let st = steklov_suite(64, 256)?;
    out.push(
        VerdictRecord::new("steklov", st.monotone).parameters(json!({
            "h": st.hs,
            "gradient_weighted": st.gradient_weighted,
            "sup_lp": st.sup_lp,
        })),
    );
    Ok(out)
}

/// Checks of a pipeline run the CLI `moser` subcommand reports.
pub const MOSER_CHECKS: [CheckName; 2] = [CheckName::MoserInverse, CheckName::MoserSup];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(iteration_suite(1, 10).unwrap().pass());
        assert!(mamedov_suite(1, 10).unwrap().pass());
        let st = steklov_suite(32, 64).unwrap();
        assert!(st.monotone, "{st:?}");
    }

    #[test]
    fn coarse_heat_error_is_small() {
        let s = heat_convergence(&[(16, 64)]).unwrap();
        assert!(s.errors[0] < 0.05);
    }
}
