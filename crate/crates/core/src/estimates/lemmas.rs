use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::sampling::cells;
use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::solver::{BoundaryKind, Field, Grid};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum IterationVerdict {
    /// hypothesis fails at `(s, t)` on the grid
    NotApplicable { s: f64, t: f64, excess: f64 },
    Checked {
        c: f64,
        lambda: f64,
        /// `min (c A/(t − s)^β − f(s))` over the grid
        worst_margin: f64,
        pass: bool,
    },
}

/// `c(α, β) = (1 − λ)^{−β} / (1 − α λ^{−β})` at the midpoint `λ` of
/// `(α^{1/β}, 1)`, with that `λ`. `α = 0` gives `(1, 0)`.
pub fn iteration_constant(alpha: f64, beta: f64) -> (f64, f64) {
    if alpha == 0.0 {
        return (1.0, 0.0);
    }
    let l = 0.5 * (alpha.powf(1.0 / beta) + 1.0);
    ((1.0 - l).powf(-beta) / (1.0 - alpha * l.powf(-beta)), l)
}

/// Lemma on `f(s) ≤ α f(t) + A/(t − s)^β` sampled at increasing points `ts`.
pub fn iteration_check(
    ts: &[f64],
    f: &[f64],
    alpha: f64,
    a: f64,
    beta: f64,
) -> Result<IterationVerdict> {
    if ts.len() != f.len() || ts.len() < 2 {
        return Err(Error::precondition("need matching samples, at least two"));
    }
    if !(0.0..1.0).contains(&alpha) || !(a > 0.0) || !(beta > 0.0) {
        return Err(Error::precondition("need alpha in [0, 1), A > 0, beta > 0"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts[0] < 0.0 {
        return Err(Error::precondition(
            "sample points must be increasing and nonnegative",
        ));
    }
    let tol = 1e-12;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let rhs = alpha * f[j] + a / (ts[j] - ts[i]).powf(beta);
            if f[i] > rhs + tol * rhs.abs().max(1.0) {
                return Ok(IterationVerdict::NotApplicable {
                    s: ts[i],
                    t: ts[j],
                    excess: f[i] - rhs,
                });
            }
        }
    }
    let (c, lambda) = iteration_constant(alpha, beta);
    let mut worst = f64::INFINITY;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            worst = worst.min(c * a / (ts[j] - ts[i]).powf(beta) - f[i]);
        }
    }
    Ok(IterationVerdict::Checked {
        c,
        lambda,
        worst_margin: worst,
        pass: worst >= -tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MamedovVerdict {
    pub s: f64,
    pub lhs: f64,
    pub gradient_term: f64,
    pub top_term: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Spatial gradient at a node by central differences (one-sided on faces).
fn gradient(v: &Field, m: usize, node: usize) -> Vec<f64> {
    let g = &v.grid;
    let idx = g.index(node);
    let h = g.h();
    let k = g.per_axis();
    (0..g.dim())
        .map(|d| {
            let step = |i: isize| -> Option<usize> {
                let mut j = idx.clone();
                let target = idx[d] as isize + i;
                if g.kind == BoundaryKind::Periodic {
                    j[d] = target.rem_euclid(k as isize) as usize;
                } else if target < 0 || target >= k as isize {
                    return None;
                } else {
                    j[d] = target as usize;
                }
                Some(g.node(&j))
            };
            match (step(-1), step(1)) {
                (Some(a), Some(b)) => (v.at(m, b) - v.at(m, a)) / (2.0 * h),
                (None, Some(b)) => (v.at(m, b) - v.at(m, node)) / h,
                (Some(a), None) => (v.at(m, node) - v.at(m, a)) / h,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Both sides of `∬_{D⁺(s)} v ≤ R ∬_{D⁺(s)} |∇v| + T ∫_{K ∩ D⁺(s)} v|_{t = t0}` on
/// `Q^s`, with slack `2 (h/(sR) + Δt/(sT)) (LHS + RHS)`.
pub fn mamedov_check(v: &Field, q: &Cylinder, s: f64) -> Result<MamedovVerdict> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::precondition(format!(
            "s must lie in (1/2, 1), got {s}"
        )));
    }
    let qs = q.scaled(s);
    let mut lhs = 0.0;
    let mut grad = 0.0;
    for c in cells(&v.grid, &qs) {
        let val = v.at(c.level, c.node);
        if val > 0.0 {
            lhs += c.measure * val;
            let gn = gradient(v, c.level, c.node)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            grad += c.measure * gn;
        }
    }
    // top slice: spatial measures of the last time cell, rescaled to unit time length
    let g = &v.grid;
    let top_level = (0..g.levels())
        .rev()
        .find(|&m| g.time(m) <= qs.t0 + 1e-9 * g.dt())
        .ok_or_else(|| Error::precondition("cylinder top lies below the grid"))?;
    let slab = Cylinder::new(g.time(top_level), qs.x0.clone(), qs.radius, g.dt())?;
    let mut top = 0.0;
    for c in cells(g, &slab).iter().filter(|c| c.level == top_level) {
        let val = v.at(c.level, c.node);
        if val > 0.0 {
            top += c.measure / g.dt() * val;
        }
    }
    let gradient_term = q.radius * grad;
    let top_term = q.height * top;
    let rhs = gradient_term + top_term;
    let slack = 2.0 * (g.h() / (s * q.radius) + g.dt() / (s * q.height)) * (lhs + rhs);
    Ok(MamedovVerdict {
        s,
        lhs,
        gradient_term,
        top_term,
        rhs,
        slack,
        pass: lhs <= rhs + slack,
    })
}

/// Spatial box `D = [lo, hi]` sampled by a closure with composite Gauss rules.
pub struct BoxFunction<'a> {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    /// cells per axis of the composite rule; kinks should sit on cell faces
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub q: f64,
    pub p: f64,
    pub norm_q: f64,
    pub norm_p: f64,
    pub grad_l1: f64,
    pub a: f64,
    pub ratio: f64,
}

/// `‖f‖_q / (A^{1/q} ‖f‖_p^{1/q′} ‖∇f‖_1^{1/q})` with `A = |D|^{1/n − (q−1)/p}`.
pub fn interpolation_check(f: &BoxFunction<'_>, q: f64, p: f64) -> Result<InterpolationReport> {
    let n = f.lo.len();
    if n == 0 || f.hi.len() != n || f.lo.iter().zip(&f.hi).any(|(a, b)| !(b > a)) {
        return Err(Error::precondition("invalid box"));
    }
    if !(p >= 1.0) {
        return Err(Error::precondition(format!("need p >= 1, got {p}")));
    }
    let qmax = (n as f64 + p) / n as f64;
    if !(q >= 1.0 && q <= qmax) {
        return Err(Error::precondition(format!("q = {q} outside [1, {qmax}]")));
    }
    let gl = GaussLegendre::new(std::num::NonZeroUsize::new(4).expect("nonzero"));
    let nodes: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
    let widths: Vec<f64> =
        f.lo.iter()
            .zip(&f.hi)
            .map(|(a, b)| (b - a) / f.cells as f64)
            .collect();
    let per_cell = nodes.len().pow(n as u32);
    let total = f.cells.pow(n as u32) * per_cell;
    let (mut sq, mut sp, mut sg) = (0.0, 0.0, 0.0);
    let mut x = vec![0.0; n];
    for j in 0..total {
        let mut rest = j;
        let mut wgt = 1.0;
        let mut step = vec![0.0; n];
        for d in 0..n {
            let gi = rest % nodes.len();
            rest /= nodes.len();
            let ci = rest % f.cells;
            rest /= f.cells;
            let (z, w) = nodes[gi];
            x[d] = f.lo[d] + widths[d] * (ci as f64 + 0.5 * (z + 1.0));
            wgt *= 0.5 * widths[d] * w;
            step[d] = 1e-7 * widths[d];
        }
        let v = (f.f)(&x);
        sq += wgt * v.abs().powf(q);
        sp += wgt * v.abs().powf(p);
        let mut g2 = 0.0;
        for d in 0..n {
            let mut a = x.clone();
            let mut b = x.clone();
            a[d] -= step[d];
            b[d] += step[d];
            let dv = ((f.f)(&b) - (f.f)(&a)) / (2.0 * step[d]);
            g2 += dv * dv;
        }
        sg += wgt * g2.sqrt();
    }
    let norm_q = sq.powf(1.0 / q);
    let norm_p = sp.powf(1.0 / p);
    let measure: f64 = f.lo.iter().zip(&f.hi).map(|(a, b)| b - a).product();
    let a = measure.powf(1.0 / n as f64 - (q - 1.0) / p);
    let q_prime_inv = 1.0 - 1.0 / q;
    let ratio = norm_q / (a.powf(1.0 / q) * norm_p.powf(q_prime_inv) * sg.powf(1.0 / q));
    Ok(InterpolationReport {
        q,
        p,
        norm_q,
        norm_p,
        grad_l1: sg,
        a,
        ratio,
    })
}

/// `v_h(t) = (1/h) ∫_t^{t+h} v` with `v` piecewise linear in time, on the levels
/// with `t + h ≤ t0`.
pub fn steklov_average(v: &Field, h: f64) -> Result<Field> {
    let g = &v.grid;
    let big_t = g.cylinder.height;
    if !(h > 0.0 && h < big_t) {
        return Err(Error::precondition(format!(
            "need 0 < h < T = {big_t}, got {h}"
        )));
    }
    let dt = g.dt();
    let keep = ((big_t - h) / dt + 1e-9).floor() as usize;
    if keep == 0 {
        return Err(Error::precondition(
            "averaging window leaves no complete level",
        ));
    }
    let cyl = Cylinder::new(
        g.cylinder.t_bottom() + keep as f64 * dt,
        g.cylinder.x0.clone(),
        g.cylinder.radius,
        keep as f64 * dt,
    )?;
    let out_grid = Grid::new(cyl, g.cells, keep, g.kind)?;
    let mut out = Field::zeros(out_grid);
    let nodes = g.nodes();
    for m in 0..=keep {
        // integrate level by level in units of Δt from s0 = m to s1 = m + h/dt
        let s0 = m as f64;
        let s1 = s0 + h / dt;
        let mut acc = vec![0.0; nodes];
        let mut a = s0;
        while a < s1 - 1e-12 {
            let cell = a.floor() as usize;
            let b = ((cell + 1) as f64).min(s1);
            let (fa, fb) = (a - cell as f64, b - cell as f64);
            let lo = v.slice(cell);
            let hi = v.slice((cell + 1).min(g.steps));
            for k in 0..nodes {
                // ∫_{fa}^{fb} ((1 − θ) lo + θ hi) dθ
                let w1 = (fb - fa) - 0.5 * (fb * fb - fa * fa);
                let w2 = 0.5 * (fb * fb - fa * fa);
                acc[k] += w1 * lo[k] + w2 * hi[k];
            }
            a = b;
        }
        let scale = dt / h;
        for (k, val) in acc.iter().enumerate() {
            *out.at_mut(m, k) = val * scale;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteklovErrors {
    pub h: f64,
    /// `(∬ |∇(v_h − v)|^p ω)^{1/p}` with edge differences
    pub gradient_weighted: f64,
    /// `max_t ‖v_h(t) − v(t)‖_{L^p}`
    pub sup_lp: f64,
}

pub fn steklov_errors(v: &Field, vh: &Field, h: f64, w: &Weight, p: f64) -> Result<SteklovErrors> {
    let g = &v.grid;
    let gh = &vh.grid;
    if g.cells != gh.cells || g.kind != gh.kind || (g.dt() - gh.dt()).abs() > 1e-12 * g.dt() {
        return Err(Error::precondition(
            "averaged field is not on the same lattice",
        ));
    }
    let edges = crate::solver::edges_of(g);
    let spacing = g.h();
    let mut grad = 0.0;
    let mut sup: f64 = 0.0;
    for m in 0..gh.levels() {
        let t = g.time(m);
        let diff: Vec<f64> = (0..g.nodes()).map(|k| vh.at(m, k) - v.at(m, k)).collect();
        if m >= 1 {
            for e in &edges {
                let d = (diff[e.b] - diff[e.a]) / spacing;
                grad +=
                    g.dt() * e.weight * spacing * spacing * d.abs().powf(p) * w.omega(t, &e.mid);
            }
        }
        let lp: f64 = (0..g.nodes())
            .map(|k| g.control_volume(k) * diff[k].abs().powf(p))
            .sum();
        sup = sup.max(lp.powf(1.0 / p));
    }
    Ok(SteklovErrors {
        h,
        gradient_weighted: grad.powf(1.0 / p),
        sup_lp: sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Exponents;

    #[test]
    fn iteration_constant_limits() {
        assert_eq!(iteration_constant(0.0, 2.0), (1.0, 0.0));
        let (c, l) = iteration_constant(0.5, 1.0);
        assert_eq!(l, 0.75);
        assert!((c - 4.0 / (1.0 - 0.5 / 0.75)).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_gives_the_hypothesis() {
        let ts: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.05).collect();
        let f: Vec<f64> = ts.iter().map(|t| 0.3 / (2.0 - t)).collect();
        match iteration_check(&ts, &f, 0.0, 1.0, 1.0).unwrap() {
            IterationVerdict::Checked { c, pass, .. } => {
                assert_eq!(c, 1.0);
                assert!(pass);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn power_profile_satisfies_lemma() {
        let (a, beta, t1) = (2.0, 1.5, 1.0);
        let ts: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let f: Vec<f64> = ts.iter().map(|s| a / (t1 + 1e-3 - s).powf(beta)).collect();
        for alpha in [0.0, 0.3, 0.9] {
            match iteration_check(&ts, &f, alpha, a * 1.01, beta).unwrap() {
                IterationVerdict::Checked {
                    worst_margin, pass, ..
                } => assert!(pass && worst_margin >= 0.0),
                v => panic!("{v:?}"),
            }
        }
    }

    #[test]
    fn violated_hypothesis_is_not_applicable() {
        let ts = [0.0, 0.5, 1.0];
        let f = [100.0, 0.0, 0.0];
        assert!(matches!(
            iteration_check(&ts, &f, 0.5, 1.0, 1.0).unwrap(),
            IterationVerdict::NotApplicable { .. }
        ));
    }

    fn field(f: impl Fn(f64, &[f64]) -> f64) -> (Field, Cylinder) {
        let q = Cylinder::new(1.0, vec![0.0], 1.0, 1.0).unwrap();
        let g = Grid::new(q.clone(), 64, 64, BoundaryKind::Dirichlet).unwrap();
        (Field::from_fn(g, f), q)
    }

    #[test]
    fn mamedov_trivial_cases() {
        let (v, q) = field(|_, _| -1.0);
        let r = mamedov_check(&v, &q, 0.75).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.pass);
        let (v, q) = field(|_, _| 2.0);
        let r = mamedov_check(&v, &q, 0.75).unwrap();
        let qs = q.scaled(0.75);
        assert!((r.lhs - 2.0 * qs.normalized_volume()).abs() < 1e-12);
        assert!((r.top_term - q.height * 2.0 * 0.75).abs() < 1e-12);
        assert_eq!(r.gradient_term, 0.0);
        assert!(r.pass && r.lhs <= r.rhs);
    }

    #[test]
    fn time_decreasing_data_breaks_the_estimate() {
        // no gradient and zero on the top slice, so the right side vanishes
        let (v, q) = field(|t, _| 1.0 - t);
        let r = mamedov_check(&v, &q, 0.75).unwrap();
        assert!(r.rhs < 1e-12 && r.lhs > 0.1, "{r:?}");
        assert!(!r.pass);
    }

    #[test]
    fn tent_interpolation_ratio() {
        let tent = |x: &[f64]| (1.0 - x[0].abs()).max(0.0);
        let f = BoxFunction {
            lo: vec![-1.0],
            hi: vec![1.0],
            f: &tent,
            cells: 64,
        };
        let r = interpolation_check(&f, 3.0, 2.0).unwrap();
        let expect =
            0.5f64.powf(1.0 / 3.0) / ((2.0f64 / 3.0).sqrt().powf(2.0 / 3.0) * 2f64.powf(1.0 / 3.0));
        assert!((r.ratio - expect).abs() < 1e-6, "{} vs {expect}", r.ratio);
        assert!(interpolation_check(&f, 3.5, 2.0).is_err());
    }

    #[test]
    fn interpolation_scale_and_dilation_invariance() {
        let g =
            |x: &[f64]| ((1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1])).max(0.0) * (1.0 + 0.5 * x[0]);
        let base = BoxFunction {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
            f: &g,
            cells: 16,
        };
        let r0 = interpolation_check(&base, 1.5, 2.0).unwrap().ratio;
        let scaled = |x: &[f64]| 7.0 * g(x);
        let r1 = interpolation_check(&BoxFunction { f: &scaled, ..base }, 1.5, 2.0)
            .unwrap()
            .ratio;
        let mu = 3.0;
        let dilated = move |x: &[f64]| g(&[x[0] / mu, x[1] / mu]);
        let r2 = interpolation_check(
            &BoxFunction {
                lo: vec![-mu, -mu],
                hi: vec![mu, mu],
                f: &dilated,
                cells: 16,
            },
            1.5,
            2.0,
        )
        .unwrap()
        .ratio;
        assert!((r0 - r1).abs() < 1e-9 * r0, "{r0} {r1}");
        assert!((r0 - r2).abs() < 1e-6 * r0);
    }

    #[test]
    fn steklov_linear_and_constant() {
        let (v, _) = field(|t, x| t + 0.0 * x[0]);
        let h = 0.25;
        let vh = steklov_average(&v, h).unwrap();
        assert_eq!(vh.grid.steps, 48);
        for m in 0..vh.grid.levels() {
            for k in 0..vh.grid.nodes() {
                assert!((vh.at(m, k) - (v.at(m, k) + h / 2.0)).abs() < 1e-12);
            }
        }
        let (c, _) = field(|_, x| x[0].cos());
        let ch = steklov_average(&c, 0.1).unwrap();
        for m in 0..ch.grid.levels() {
            for k in 0..ch.grid.nodes() {
                assert!((ch.at(m, k) - c.at(m, k)).abs() < 1e-13);
            }
        }
        let w = Weight::unit(Exponents::admissible(2.0, 1, 4.0, 2.0).unwrap());
        let e = steklov_errors(&v, &vh, h, &w, 2.0).unwrap();
        assert!(e.gradient_weighted < 1e-10);
        assert!((e.sup_lp - h / 2.0 * 2f64.sqrt()).abs() < 1e-10);
        assert!(steklov_average(&v, 1.0).is_err());
    }
}
