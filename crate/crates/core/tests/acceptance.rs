//! Acceptance criteria 1–10. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p harnack-core --test acceptance`.

use std::time::{Duration, Instant};

use harnack_core::estimates::{moser_check, MoserReport};
use harnack_core::geometry::{intrinsic_height, intrinsic_height_supform, Cylinder};
use harnack_core::harness::{
    default_catalog, emit_report, radius_grid, run_harnack_pipeline, verify, CheckName,
    ExperimentConfig, ReportFormat, MOSER_PAIRS,
};
use harnack_core::solver::{
    discrete_mass, model_flux, solve, weak_residual, BoundaryCondition, BoundaryKind, Grid,
    SolverOptions, TestFunction,
};
use harnack_core::weights::{
    intrinsic_family, muckenhoupt_constant, Exponents, QuadratureSpec, Weight, WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn exps() -> Exponents {
    Exponents::admissible(2.0, 1, 4.0, 2.0).unwrap()
}

fn c1_exponent_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut count, mut worst, mut min_l) = (0, 0.0f64, f64::INFINITY);
    while count < 1000 {
        let p = rng.gen_range(1.05..6.0);
        let n = rng.gen_range(1..=4usize);
        let alpha = (n as f64 + p) / p * rng.gen_range(1.0..20.0);
        let r = n as f64 * (p - 1.0) / p * rng.gen_range(1.0..20.0);
        if let Ok(e) = Exponents::admissible(p, n, alpha, r) {
            count += 1;
            worst = worst.max((e.l_minus_one() - e.l_minus_one_closed()).abs());
            min_l = min_l.min(e.l);
        }
    }
    (
        worst <= 1e-12 && min_l > 1.0,
        format!("max |ΔL| = {worst:.2e}, min L = {min_l:.6}"),
    )
}

fn c2_intrinsic_height() -> Outcome {
    let spec = QuadratureSpec::gauss(4);
    let mut exact = 0.0f64;
    for (p, c, r) in [(2.0, 1.0, 0.3), (3.0, 0.5, 1.7), (1.5, 2.0, 1.0)] {
        let e = Exponents::admissible(p, 1, 16.0, 16.0).unwrap();
        let h = intrinsic_height(&Weight::unit(e), 1.0, &[0.0], r, c, &spec).unwrap();
        exact = exact
            .max(h.residual.abs())
            .max((h.height - c * r.powf(p)).abs() / (c * r.powf(p)));
    }
    let mut forms = 0.0f64;
    for entry in default_catalog() {
        let w = entry.weight.build(exps()).unwrap();
        for r in radius_grid(0.05, 1.0, 10) {
            let a = intrinsic_height(&w, entry.t0, &entry.center, r, 1.0, &spec).unwrap();
            let b = intrinsic_height_supform(&w, entry.t0, &entry.center, r, 1.0, &spec).unwrap();
            forms = forms.max((a.height - b).abs() / a.height);
        }
    }
    (
        exact <= 1e-10 && forms <= 1e-8,
        format!("unit residual {exact:.2e}, root vs sup {forms:.2e} (5 weights × 10 radii)"),
    )
}

fn family(w: &Weight, spec: &QuadratureSpec) -> Vec<Cylinder> {
    let centers: Vec<(f64, Vec<f64>)> = (0..10)
        .map(|i| (1.5 + 0.2 * i as f64, vec![-1.0 + 0.25 * i as f64]))
        .collect();
    intrinsic_family(w, &centers, &radius_grid(0.1, 1.0, 5), 1.0, spec).unwrap()
}

fn c3_muckenhoupt() -> Outcome {
    let spec = QuadratureSpec::gauss(4);
    let unit = Weight::unit(exps());
    let fam = family(&unit, &spec);
    let cu = muckenhoupt_constant(&unit, &fam, &spec).unwrap().constant;
    let radial = WeightSpec::Radial { beta: 1.0 }.build(exps()).unwrap();
    let fam = family(&radial, &spec);
    let a = muckenhoupt_constant(&radial, &fam, &spec).unwrap();
    let b = muckenhoupt_constant(&radial, &fam, &spec.refined(1)).unwrap();
    let drift = (a.constant - b.constant).abs() / a.constant;
    (
        fam.len() == 50 && (cu - 1.0).abs() <= 1e-6 && a.constant.is_finite() && drift <= 0.05,
        format!(
            "unit {cu:.9} over {} cylinders; radial {:.6} → {:.6} (drift {drift:.2e})",
            fam.len(),
            a.constant,
            b.constant
        ),
    )
}

fn c4_solver_oracles() -> Outcome {
    let space = verify::heat_convergence(&[(16, 32768), (32, 32768), (64, 32768)]).unwrap();
    let time = verify::heat_convergence(&[(1024, 16), (1024, 32), (1024, 64)]).unwrap();
    let sep: Vec<_> = [(32, 32), (64, 64), (128, 128)]
        .iter()
        .map(|&(c, s)| verify::p3_separable(c, s).unwrap())
        .collect();
    let so = space.orders.iter().copied().fold(f64::INFINITY, f64::min);
    let to = time.orders.iter().copied().fold(f64::INFINITY, f64::min);
    let sep_ok = sep.iter().all(|s| s.error <= s.bound);
    (
        so >= 1.9 && to >= 0.9 && sep_ok,
        format!(
            "space orders {:?}, time orders {:?}, p=3 err/bound {:?}",
            rounded(&space.orders),
            rounded(&time.orders),
            sep.iter()
                .map(|s| format!("{:.3}", s.error / s.bound))
                .collect::<Vec<_>>()
        ),
    )
}

fn rounded(x: &[f64]) -> Vec<String> {
    x.iter().map(|v| format!("{v:.3}")).collect()
}

fn c5_structural() -> Outcome {
    let opts = SolverOptions::default();
    // homogeneity, p = 3, radial weight, Dirichlet data scaled with u0
    let p = 3.0;
    let e3 = Exponents::admissible(p, 1, 16.0, 16.0).unwrap();
    let w = WeightSpec::Radial { beta: 1.0 }.build(e3).unwrap();
    let flux = model_flux(&w);
    let q = Cylinder::new(1.5, vec![0.2], 1.0, 0.5).unwrap();
    let g = Grid::new(q.clone(), 32, 32, BoundaryKind::Dirichlet).unwrap();
    let u0 = |x: &[f64]| 1.0 + 0.5 * (3.0 * x[0]).sin();
    let base = solve(&g, &u0, &BoundaryCondition::dirichlet(move |_, x| u0(x)), p, &flux, &opts)
        .unwrap()
        .into_result()
        .unwrap();
    let mut homog = 0.0f64;
    for lambda in [1e-3, 7.5] {
        let s = solve(
            &g,
            &move |x| lambda * u0(x),
            &BoundaryCondition::dirichlet(move |_, x| lambda * u0(x)),
            p,
            &flux,
            &opts,
        )
        .unwrap()
        .into_result()
        .unwrap();
        let scale = lambda * base.field.max_abs();
        for (a, b) in base.field.values.iter().zip(&s.field.values) {
            homog = homog.max((lambda * a - b).abs() / scale);
        }
    }
    // constants under every boundary kind
    let mut fixed = 0.0f64;
    for (pp, n, bc) in [
        (2.0, 1, BoundaryCondition::dirichlet(|_, _| 2.5)),
        (3.0, 1, BoundaryCondition::Neumann),
        (1.6, 2, BoundaryCondition::Periodic),
        (2.5, 2, BoundaryCondition::dirichlet(|_, _| 2.5)),
    ] {
        let e = Exponents::admissible(pp, n, 16.0, 16.0).unwrap();
        let w = WeightSpec::PowerX { gamma: 0.5 }.build(e).unwrap();
        let g = Grid::new(
            Cylinder::new(1.0, vec![0.3; n], 1.0, 0.5).unwrap(),
            12,
            6,
            bc.kind(),
        )
        .unwrap();
        let s = solve(&g, &|_| 2.5, &bc, pp, &model_flux(&w), &opts)
            .unwrap()
            .into_result()
            .unwrap();
        for v in &s.field.values {
            fixed = fixed.max((v - 2.5).abs() / 2.5);
        }
    }
    // comparison on random ordered pairs
    let mut violations = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10 {
        let pp = [1.7, 2.0, 3.0][trial % 3];
        let e = Exponents::admissible(pp, 1, 16.0, 16.0).unwrap();
        let w = WeightSpec::Radial { beta: 1.0 }.build(e).unwrap();
        let g = Grid::new(q.clone(), 32, 16, BoundaryKind::Dirichlet).unwrap();
        let (a, b, c, d) = (
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.0..0.5),
            rng.gen_range(1.0..5.0),
            rng.gen_range(0.0..0.5),
        );
        let lo = move |x: &[f64]| a + b * (c * x[0]).sin();
        let hi = move |x: &[f64]| lo(x) + d * (1.0 + (2.0 * c * x[0]).cos());
        let sl = solve(&g, &lo, &BoundaryCondition::dirichlet(move |_, x| lo(x)), pp, &model_flux(&w), &opts)
            .unwrap()
            .into_result()
            .unwrap();
        let sh = solve(&g, &hi, &BoundaryCondition::dirichlet(move |_, x| hi(x)), pp, &model_flux(&w), &opts)
            .unwrap()
            .into_result()
            .unwrap();
        violations += sl
            .field
            .values
            .iter()
            .zip(&sh.field.values)
            .filter(|(l, h)| **l > **h + 1e-12)
            .count();
    }
    // periodic mass
    let pp = 2.5;
    let e = Exponents::admissible(pp, 2, 16.0, 16.0).unwrap();
    let w = WeightSpec::Product {
        gamma: 0.3,
        theta: 0.5,
    }
    .build(e)
    .unwrap();
    let g = Grid::new(
        Cylinder::new(1.0, vec![0.1, 0.2], 1.0, 0.3).unwrap(),
        12,
        8,
        BoundaryKind::Periodic,
    )
    .unwrap();
    let s = solve(
        &g,
        &|x| 1.0 + 0.5 * (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).cos(),
        &BoundaryCondition::Periodic,
        pp,
        &model_flux(&w),
        &opts,
    )
    .unwrap()
    .into_result()
    .unwrap();
    let m0 = discrete_mass(&s.field, 0, pp);
    let mass = (1..g.levels())
        .map(|m| (discrete_mass(&s.field, m, pp) - m0).abs() / m0.abs())
        .fold(0.0, f64::max);
    (
        homog <= 1e-8 && fixed <= 1e-14 && violations == 0 && mass <= 1e-10,
        format!(
            "homogeneity {homog:.2e}, constants {fixed:.2e}, comparison violations {violations}, mass drift {mass:.2e}"
        ),
    )
}

fn c6_weak_formulation() -> Outcome {
    let w = WeightSpec::Radial { beta: 1.0 }.build(exps()).unwrap();
    let flux = model_flux(&w);
    let q = Cylinder::new(2.0, vec![0.0], 1.0, 0.5).unwrap();
    let u0 = |t: f64, x: &[f64]| 1.0 + 0.5 * (2.0 * x[0] + t).cos();
    let runs: Vec<_> = [(16usize, 16usize), (32, 64), (64, 256)]
        .iter()
        .map(|&(c, s)| {
            let g = Grid::new(q.clone(), c, s, BoundaryKind::Dirichlet).unwrap();
            let tb = q.t_bottom();
            solve(
                &g,
                &move |x| u0(tb, x),
                &BoundaryCondition::dirichlet(u0),
                2.0,
                &flux,
                &SolverOptions::default(),
            )
            .unwrap()
            .into_result()
            .unwrap()
            .field
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_order = f64::INFINITY;
    for _ in 0..20 {
        let v = TestFunction::random_signed(&q, &mut rng);
        let r: Vec<f64> = runs
            .iter()
            .map(|u| weak_residual(u, 2.0, &flux, &v).unwrap().abs())
            .collect();
        let decreasing = r.windows(2).all(|x| x[1] < x[0]);
        let order = (r[0] / r[2]).log2() / 2.0;
        min_order = min_order.min(if decreasing { order } else { f64::NEG_INFINITY });
    }
    (
        min_order >= 1.0,
        format!("20 test functions, Δt ∝ h², min observed order in h {min_order:.3}"),
    )
}

fn theorem_constants(reports: &[MoserReport], deltas: &[f64]) -> Vec<f64> {
    deltas
        .iter()
        .map(|d| {
            reports
                .iter()
                .filter(|r| r.delta == *d)
                .map(|r| r.constant)
                .fold(0.0, f64::max)
        })
        .collect()
}

fn c7_moser() -> Outcome {
    let deltas = [0.25, 0.5, 0.75];
    let q = verify::heat_intrinsic_cylinder();
    let coarse = verify::heat_field(&q, 32, 256).unwrap();
    let fine = verify::heat_field(&q, 64, 1024).unwrap();
    let rc = moser_check(&coarse, &q, &exps(), &deltas, &MOSER_PAIRS).unwrap();
    let rf = moser_check(&fine, &q, &exps(), &deltas, &MOSER_PAIRS).unwrap();
    let finite = rc.iter().chain(&rf).all(|r| r.implied_c.is_finite() && r.implied_c > 0.0);
    let cc = theorem_constants(&rc, &deltas);
    let cf = theorem_constants(&rf, &deltas);
    let spread = cf.iter().copied().fold(0.0, f64::max) / cf.iter().copied().fold(f64::INFINITY, f64::min);
    let drift = cc
        .iter()
        .zip(&cf)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    let literal: Vec<f64> = deltas
        .iter()
        .map(|d| rf.iter().filter(|r| r.delta == *d).map(|r| r.implied_c).fold(0.0, f64::max))
        .collect();
    let literal_spread = literal.iter().copied().fold(0.0, f64::max)
        / literal.iter().copied().fold(f64::INFINITY, f64::min);
    let mut invariance = 0.0f64;
    for lambda in [1e-3, 3.7] {
        let rl = moser_check(&fine.map(|v| lambda * v), &q, &exps(), &deltas, &MOSER_PAIRS).unwrap();
        for (a, b) in rf.iter().zip(&rl) {
            invariance = invariance.max((a.implied_c - b.implied_c).abs() / a.implied_c);
        }
    }
    (
        finite && spread <= 2.0 && drift <= 0.15 && invariance <= 1e-12,
        format!(
            "C (inside the 1/δ power) per δ {:?}: spread {spread:.3}, refinement drift {drift:.2e}; \
             λ-invariance {invariance:.1e}; spread of the outside-power impliedC {literal_spread:.2e}",
            cf.iter().map(|c| format!("{c:.4e}")).collect::<Vec<_>>()
        ),
    )
}

fn c8_harnack() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (label, weight, t0) in [
        ("unit", WeightSpec::Constant { value: 1.0 }, 1.0),
        ("radial", WeightSpec::Radial { beta: 1.0 }, 2.0),
    ] {
        let mut worst_drift = 0.0f64;
        let mut worst_t1 = 0.0f64;
        let mut ratios = Vec::new();
        for seed in 0..5 {
            let mut cfg = verify::reference_config(seed);
            cfg.weight = weight.clone();
            cfg.cylinder.t0 = t0;
            let a = run_harnack_pipeline(&cfg).unwrap();
            let b = run_harnack_pipeline(&cfg.refined(1)).unwrap();
            let (ra, rb) = (a.harnack.ratio, b.harnack.ratio);
            worst_drift = worst_drift.max((ra - rb).abs() / ra);
            for r in [&a, &b] {
                worst_t1 = worst_t1.max(r.t1.t1_over_t);
                ok &= r.verdict(CheckName::T1Doubling).is_some_and(|v| v.pass);
                ok &= r.harnack.ratio.is_finite();
            }
            ratios.push(ra);
        }
        ok &= worst_drift <= 0.10 && worst_t1 < 0.25;
        lines.push(format!(
            "{label}: ratios {:?}, refinement drift {worst_drift:.2e}, max T1/T {worst_t1:.3}",
            rounded(&ratios)
        ));
    }
    (ok, lines.join("; "))
}

fn c9_lemmas() -> Outcome {
    let v = verify::lemma_suites(0).unwrap();
    (
        v.iter().all(|r| r.pass),
        v.iter()
            .map(|r| format!("{} {}", r.check, if r.pass { "ok" } else { "FAILED" }))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig {
        seed: 11,
        ..ExperimentConfig::default()
    };
    cfg.weight = WeightSpec::Radial { beta: 1.0 };
    cfg.cylinder.t0 = 2.0;
    let mut same = true;
    for format in [ReportFormat::Json, ReportFormat::Csv] {
        let a = emit_report(&run_harnack_pipeline(&cfg).unwrap(), format, &dir.path().join("a")).unwrap();
        let b = emit_report(&run_harnack_pipeline(&cfg).unwrap(), format, &dir.path().join("b")).unwrap();
        same &= std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
    }
    (same, "JSON and CSV reports byte-identical across repeat runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("1 exponent algebra", c1_exponent_algebra, Duration::from_secs(1)),
        ("2 intrinsic height", c2_intrinsic_height, Duration::from_secs(30)),
        ("3 muckenhoupt engine", c3_muckenhoupt, Duration::from_secs(120)),
        ("4 solver oracles", c4_solver_oracles, Duration::from_secs(300)),
        ("5 structural invariants", c5_structural, Duration::from_secs(120)),
        ("6 weak formulation", c6_weak_formulation, Duration::from_secs(120)),
        ("7 moser", c7_moser, Duration::from_secs(180)),
        ("8 harnack pipeline", c8_harnack, Duration::from_secs(600)),
        ("9 lemma suites", c9_lemmas, Duration::from_secs(180)),
        ("10 determinism", c10_determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let (ok, detail) = run();
        let took = start.elapsed();
        let pass = ok && took <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {detail} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
