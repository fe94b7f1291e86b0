use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{cells, ess_sup, integrate, log_levels, Resolution};
use crate::error::{Error, Result};
use crate::geometry::{subcylinder, Cylinder};
use crate::weights::quadrature::{cylinder_integral, QuadratureSpec};
use crate::weights::{Exponents, Weight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserReport {
    pub delta: f64,
    pub s: f64,
    pub tau: f64,
    /// ess sup of `u` over `Q^s`
    pub lhs: f64,
    /// `((1/|Q|) ∬_{Q^τ} u^δ)^{1/δ}`
    pub rhs_core: f64,
    /// `lhs (τ − s)^{1/(δ(L−1))} / rhs_core`
    pub implied_c: f64,
    /// `implied_c^δ`, the constant multiplying the average inside the `1/δ` power
    pub constant: f64,
    pub resolution: Resolution,
}

fn check_pair(s: f64, tau: f64) -> Result<()> {
    if !(0.5..1.0).contains(&s) || !(tau > s && tau <= 1.0) {
        return Err(Error::precondition(format!(
            "need 1/2 <= s < tau <= 1, got s={s}, tau={tau}"
        )));
    }
    Ok(())
}

fn subcylinder_closed(q: &Cylinder, s: f64) -> Result<Cylinder> {
    if s == 0.5 {
        Ok(q.scaled(0.5))
    } else {
        subcylinder(q, s)
    }
}

/// Evaluates the Moser bound for every `(δ, s, τ)` combination.
pub fn moser_check(
    u: &crate::solver::Field,
    q: &Cylinder,
    exps: &Exponents,
    deltas: &[f64],
    pairs: &[(f64, f64)],
) -> Result<Vec<MoserReport>> {
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::precondition(format!(
            "delta must lie in (0, 1), got {d}"
        )));
    }
    for &(s, tau) in pairs {
        check_pair(s, tau)?;
    }
    let outer = subcylinder_closed(q, pairs.iter().map(|p| p.1).fold(0.5, f64::max))?;
    if let Some(c) = cells(&u.grid, &outer)
        .iter()
        .find(|c| u.at(c.level, c.node) < 0.0)
    {
        return Err(Error::precondition(format!(
            "u is negative ({}) at level {}, node {}",
            u.at(c.level, c.node),
            c.level,
            c.node
        )));
    }
    let lm1 = exps.l_minus_one();
    let vol = q.normalized_volume();
    let jobs: Vec<(f64, f64, f64)> = deltas
        .iter()
        .flat_map(|&d| pairs.iter().map(move |&(s, t)| (d, s, t)))
        .collect();
    jobs.par_iter()
        .map(|&(delta, s, tau)| {
            let lhs = ess_sup(u, &subcylinder_closed(q, s)?)?.value;
            let avg = integrate(u, &subcylinder_closed(q, tau)?, |v| v.powf(delta)) / vol;
            let rhs_core = avg.powf(1.0 / delta);
            let implied_c = lhs * (tau - s).powf(1.0 / (delta * lm1)) / rhs_core;
            Ok(MoserReport {
                delta,
                s,
                tau,
                lhs,
                rhs_core,
                implied_c,
                constant: implied_c.powf(delta),
                resolution: Resolution::from(&u.grid),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetProfile {
    pub ks: Vec<f64>,
    /// `y(k) = ∬_{Q^τ} (u − k − M_τ ξ)_+`
    pub y: Vec<f64>,
    /// `|Ω^k| = |{u − k − M_τ ξ > 0}|`
    pub measures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub s: f64,
    pub tau: f64,
    pub m_tau: f64,
    pub profile: LevelSetProfile,
    /// `‖ω‖_{L^α(Q)} ‖σ‖_{L^r(Q)}^{n(p−1)/(n+p)} / R^p`
    pub b: f64,
    /// `B^{1/(p(L−1))} |Q|`, equal to 1 for the unit weight
    pub b_identity: f64,
    /// minimal `C` with `y(k) ≤ C B^{1/p} M_τ (τ − s)^{−1} |Ω^k|^L` on every level
    pub constant: f64,
    pub attaining_k: Option<f64>,
    /// `|Ω^{k+1}| ≤ −Δy/Δk ≤ |Ω^k|` on consecutive levels
    pub derivative_consistent: bool,
    /// `y` had to be made non-increasing
    pub smoothed: bool,
    pub resolution: Resolution,
}

/// `B` from normalized `L^α`, `L^r` norms of `ω`, `σ` on `q`.
pub fn b_quantity(w: &Weight, q: &Cylinder, spec: &QuadratureSpec) -> Result<f64> {
    let e = w.exponents;
    let n = e.n as f64;
    let scale = 0.5f64.powi(e.n as i32);
    let dist = |t: f64, x: &[f64]| w.distance_to_singular(t, x);
    let clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)> = w.singular.is_some().then_some(&dist);
    let om =
        cylinder_integral(&|t, x: &[f64]| w.omega(t, x).powf(e.alpha), q, spec, clip)?.integral;
    let sg = cylinder_integral(&|t, x: &[f64]| w.sigma(t, x).powf(e.r), q, spec, clip)?.integral;
    let om_norm = (scale * om).powf(1.0 / e.alpha);
    let sg_norm = (scale * sg).powf(1.0 / e.r);
    Ok(om_norm * sg_norm.powf(n * (e.p - 1.0) / (n + e.p)) / q.radius.powf(e.p))
}

/// Piecewise-linear cutoff: 0 on `Q^s`, 1 on the parabolic boundary of `Q^τ`.
pub fn cutoff(q: &Cylinder, s: f64, tau: f64, t: f64, x: &[f64]) -> f64 {
    let gap = tau - s;
    let dx = x
        .iter()
        .zip(&q.x0)
        .map(|(x, c)| ((x - c).abs() - s * q.radius) / (gap * q.radius))
        .fold(f64::NEG_INFINITY, f64::max);
    let dt = ((q.t0 - s * q.height) - t) / (gap * q.height);
    dx.max(dt).clamp(0.0, 1.0)
}

pub const LEVELS: usize = 64;

pub fn levelset_profile_check(
    u: &crate::solver::Field,
    q: &Cylinder,
    s: f64,
    tau: f64,
    w: &Weight,
    spec: &QuadratureSpec,
) -> Result<LevelSetReport> {
    check_pair(s, tau)?;
    let exps = w.exponents;
    let qt = subcylinder_closed(q, tau)?;
    let m_tau = ess_sup(u, &qt)?.value;
    if !(m_tau > 0.0) {
        return Err(Error::precondition("sup of u over Q^tau must be positive"));
    }
    let data: Vec<(f64, f64)> = cells(&u.grid, &qt)
        .iter()
        .map(|c| {
            let t = u.grid.time(c.level);
            let x = u.grid.position(c.node);
            (
                c.measure,
                u.at(c.level, c.node) - m_tau * cutoff(q, s, tau, t, &x),
            )
        })
        .collect();
    let top = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Err(Error::precondition("u - M_tau xi is nowhere positive"));
    }
    let ks = log_levels(1e-3 * top, top * (1.0 - 1e-3), LEVELS);
    let mut y: Vec<f64> = ks
        .iter()
        .map(|&k| data.iter().map(|(w, v)| w * (v - k).max(0.0)).sum())
        .collect();
    let measures: Vec<f64> = ks
        .iter()
        .map(|&k| data.iter().filter(|(_, v)| *v > k).map(|(w, _)| w).sum())
        .collect();
    let mut smoothed = false;
    for i in 1..y.len() {
        if y[i] > y[i - 1] {
            y[i] = y[i - 1];
            smoothed = true;
        }
    }
    let derivative_consistent = (0..ks.len() - 1).all(|i| {
        let fd = -(y[i + 1] - y[i]) / (ks[i + 1] - ks[i]);
        let slack = 1e-9 * measures[0].max(f64::MIN_POSITIVE);
        fd >= measures[i + 1] - slack && fd <= measures[i] + slack
    });

    let b = b_quantity(w, q, spec)?;
    let lm1 = exps.l_minus_one();
    let l = 1.0 + lm1;
    let b_identity = b.powf(1.0 / (exps.p * lm1)) * q.normalized_volume();
    let mut constant: f64 = 0.0;
    let mut attaining_k = None;
    for ((k, yk), om) in ks.iter().zip(&y).zip(&measures) {
        if *yk <= 0.0 || *om <= 0.0 {
            continue;
        }
        let c = yk * (tau - s) / (b.powf(1.0 / exps.p) * m_tau * om.powf(l));
        if c > constant {
            constant = c;
            attaining_k = Some(*k);
        }
    }
    Ok(LevelSetReport {
        s,
        tau,
        m_tau,
        profile: LevelSetProfile { ks, y, measures },
        b,
        b_identity,
        constant,
        attaining_k,
        derivative_consistent,
        smoothed,
        resolution: Resolution::from(&u.grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{BoundaryKind, Field, Grid};

    fn exps() -> Exponents {
        Exponents::admissible(2.0, 1, 4.0, 2.0).unwrap()
    }

    fn constant_field(c: f64) -> (Field, Cylinder) {
        let q = Cylinder::new(1.0, vec![0.0], 1.0, 1.0).unwrap();
        let g = Grid::new(q.clone(), 32, 32, BoundaryKind::Dirichlet).unwrap();
        (Field::from_fn(g, move |_, _| c), q)
    }

    #[test]
    fn constant_solution_moser() {
        let (u, q) = constant_field(1.0);
        let reps = moser_check(
            &u,
            &q,
            &exps(),
            &[0.25, 0.5, 0.75],
            &[(0.5, 1.0), (0.75, 1.0)],
        )
        .unwrap();
        for r in reps {
            assert_eq!(r.lhs, 1.0);
            assert!((r.rhs_core - 1.0).abs() < 1e-12);
            let expect = (r.tau - r.s).powf(1.0 / (r.delta * 0.125));
            assert!((r.implied_c - expect).abs() <= 1e-12 * expect);
            assert!(r.implied_c <= 1.0);
        }
    }

    #[test]
    fn moser_rejects_negative_data_and_bad_pairs() {
        let (u, q) = constant_field(-1.0);
        assert!(moser_check(&u, &q, &exps(), &[0.5], &[(0.5, 1.0)]).is_err());
        let (u, q) = constant_field(1.0);
        assert!(moser_check(&u, &q, &exps(), &[0.5], &[(0.8, 0.7)]).is_err());
        assert!(moser_check(&u, &q, &exps(), &[1.0], &[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn cutoff_hits_both_ends() {
        let q = Cylinder::new(0.0, vec![0.0], 1.0, 1.0).unwrap();
        assert_eq!(cutoff(&q, 0.5, 1.0, -0.1, &[0.2]), 0.0);
        assert_eq!(cutoff(&q, 0.5, 1.0, -0.1, &[1.0]), 1.0);
        assert_eq!(cutoff(&q, 0.5, 1.0, -1.0, &[0.0]), 1.0);
        assert!((cutoff(&q, 0.5, 1.0, -0.75, &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_weight_b_identity() {
        let w = Weight::unit(exps());
        for r in [0.3, 1.0, 2.5] {
            let q = Cylinder::new(0.0, vec![1.0], r, r * r).unwrap();
            let b = b_quantity(&w, &q, &QuadratureSpec::midpoint(2)).unwrap();
            let id = b.powf(1.0 / (2.0 * 0.125)) * q.normalized_volume();
            assert!((id - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_profile_is_linear_with_exact_derivative() {
        let (u, q) = constant_field(2.0);
        let w = Weight::unit(exps());
        let rep =
            levelset_profile_check(&u, &q, 0.5, 1.0, &w, &QuadratureSpec::midpoint(2)).unwrap();
        assert!(rep.derivative_consistent && !rep.smoothed);
        assert!(rep.constant.is_finite() && rep.constant > 0.0);
        // y(k) = ∬ (2 − k − 2ξ)_+ is convex in k with slope −|Ω^k|
        let p = &rep.profile;
        for i in 0..p.ks.len() - 1 {
            let fd = -(p.y[i + 1] - p.y[i]) / (p.ks[i + 1] - p.ks[i]);
            let slack = 1e-9 * p.measures[0];
            assert!(fd <= p.measures[i] + slack && fd >= p.measures[i + 1] - slack);
        }
    }
}
