use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use super::flux::Flux;
use super::grid::Field;
use super::stepper::{b_of, build_edges};
use crate::error::{Error, Result};
use crate::geometry::Cylinder;

pub type TestFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Lipschitz function on a cylinder vanishing on its parabolic boundary.
#[derive(Clone)]
pub struct TestFunction {
    pub cylinder: Cylinder,
    pub lipschitz: f64,
    pub label: String,
    f: TestFn,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("cylinder", &self.cylinder)
            .field("lipschitz", &self.lipschitz)
            .field("label", &self.label)
            .finish()
    }
}

const GAMMA_SAMPLES: usize = 33;

impl TestFunction {
    /// Checks `v = 0` on the lateral surface and the bottom at a lattice of points.
    pub fn new(
        cylinder: Cylinder,
        lipschitz: f64,
        label: impl Into<String>,
        f: TestFn,
    ) -> Result<Self> {
        let v = TestFunction {
            cylinder,
            lipschitz,
            label: label.into(),
            f,
        };
        let q = &v.cylinder;
        let n = q.dim();
        let tol = 1e-12 * (1.0 + lipschitz * (q.radius + q.height));
        let s = |i: usize| i as f64 / (GAMMA_SAMPLES - 1) as f64;
        let check = |t: f64, x: &[f64]| -> Result<()> {
            let val = v.eval(t, x);
            if val.abs() > tol {
                return Err(Error::precondition(format!(
                    "test function {} is {val:e} at parabolic boundary point t={t}, x={x:?}",
                    v.label
                )));
            }
            Ok(())
        };
        let lattice = GAMMA_SAMPLES.pow(n as u32);
        for j in 0..lattice {
            let mut rest = j;
            let x: Vec<f64> = (0..n)
                .map(|d| {
                    let i = rest % GAMMA_SAMPLES;
                    rest /= GAMMA_SAMPLES;
                    q.x0[d] - q.radius + 2.0 * q.radius * s(i)
                })
                .collect();
            check(q.t_bottom(), &x)?;
            for i in 0..GAMMA_SAMPLES {
                let t = q.t_bottom() + q.height * s(i);
                for d in 0..n {
                    for side in [-1.0, 1.0] {
                        let mut y = x.clone();
                        y[d] = q.x0[d] + side * q.radius;
                        check(t, &y)?;
                    }
                }
            }
        }
        Ok(v)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.f)(t, x)
    }

    /// `τ (1 + a cos(π k τ)) Σ_j c_j Π_d sin(m_{jd} π ξ_d)` with `τ`, `ξ` the unit
    /// coordinates of the cylinder; coefficients `c_j` of both signs.
    pub fn random_signed<R: Rng>(q: &Cylinder, rng: &mut R) -> TestFunction {
        let n = q.dim();
        let modes: Vec<(f64, Vec<f64>)> = (0..3)
            .map(|_| {
                let c = rng.gen_range(-1.0..1.0);
                let m = (0..n).map(|_| rng.gen_range(1..=3) as f64).collect();
                (c, m)
            })
            .collect();
        let a: f64 = rng.gen_range(-0.5..0.5);
        let k = rng.gen_range(1..=3) as f64;
        let s: f64 = modes.iter().map(|(c, _)| c.abs()).sum();
        let mmax = modes
            .iter()
            .flat_map(|(_, m)| m.iter().copied())
            .fold(1.0, f64::max);
        let lt = s * ((1.0 + a.abs()) + a.abs() * PI * k) / q.height;
        let lx = s * (1.0 + a.abs()) * mmax * PI / (2.0 * q.radius);
        let lip = (lt * lt + n as f64 * lx * lx).sqrt();
        let (tb, height, lo, width) = unit_frame(q);
        let f: TestFn = Arc::new(move |t, x| {
            let tau = (t - tb) / height;
            let space: f64 = modes
                .iter()
                .map(|(c, m)| {
                    c * m
                        .iter()
                        .zip(x.iter().zip(&lo))
                        .map(|(m, (x, l))| (m * PI * (x - l) / width).sin())
                        .product::<f64>()
                })
                .sum();
            tau * (1.0 + a * (PI * k * tau).cos()) * space
        });
        TestFunction {
            cylinder: q.clone(),
            lipschitz: lip,
            label: "random-signed".into(),
            f,
        }
    }

    /// `τ^q (1 + a cos(π k τ)) Π_d sin(π ξ_d)^{e_d}` with `q, e_d ∈ [1, 2]`, `|a| < 1/2`.
    pub fn random_nonnegative<R: Rng>(q: &Cylinder, rng: &mut R) -> TestFunction {
        let n = q.dim();
        let qt: f64 = rng.gen_range(1.0..2.0);
        let e: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..2.0)).collect();
        let a: f64 = rng.gen_range(-0.5..0.5);
        let k = rng.gen_range(1..=3) as f64;
        let lt = (qt * (1.0 + a.abs()) + a.abs() * PI * k) / q.height;
        let lx = 2.0 * (1.0 + a.abs()) * PI / (2.0 * q.radius);
        let lip = (lt * lt + n as f64 * lx * lx).sqrt();
        let (tb, height, lo, width) = unit_frame(q);
        let f: TestFn = Arc::new(move |t, x| {
            let tau = ((t - tb) / height).max(0.0);
            let space: f64 = e
                .iter()
                .zip(x.iter().zip(&lo))
                .map(|(e, (x, l))| (PI * (x - l) / width).sin().max(0.0).powf(*e))
                .product();
            tau.powf(qt) * (1.0 + a * (PI * k * tau).cos()) * space
        });
        TestFunction {
            cylinder: q.clone(),
            lipschitz: lip,
            label: "random-nonnegative".into(),
            f,
        }
    }
}

fn unit_frame(q: &Cylinder) -> (f64, f64, Vec<f64>, f64) {
    (
        q.t_bottom(),
        q.height,
        q.x0.iter().map(|c| c - q.radius).collect(),
        2.0 * q.radius,
    )
}

/// Discrete form of
///
/// ```text
/// −∫ b(u) v |_{bottom}^{top} − ∬ A·∇v + ∬ b(u) ∂t v,    b(u) = |u|^{p−2} u,
/// ```
///
/// with control-volume sums in space, the level-`m` values of `b(u)` against the
/// backward difference of `v`, and `A` evaluated unregularized on grid edges.
/// Zero for exact solutions; `≥ 0` for sub-solutions when `v ≥ 0`.
pub fn weak_residual(u: &Field, p: f64, flux: &dyn Flux, v: &TestFunction) -> Result<f64> {
    let g = &u.grid;
    let q = &g.cylinder;
    let same = (q.t0 - v.cylinder.t0).abs() <= 1e-12 * (1.0 + q.t0.abs())
        && (q.radius - v.cylinder.radius).abs() <= 1e-12 * q.radius
        && (q.height - v.cylinder.height).abs() <= 1e-12 * q.height
        && q.x0
            .iter()
            .zip(&v.cylinder.x0)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    if !same {
        return Err(Error::precondition(format!(
            "test function lives on {}, field on {}",
            v.cylinder, q
        )));
    }
    if u.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::precondition("field has non-finite values"));
    }
    let positions: Vec<Vec<f64>> = (0..g.nodes()).map(|k| g.position(k)).collect();
    let vol: Vec<f64> = (0..g.nodes()).map(|k| g.control_volume(k)).collect();
    let edges = build_edges(g, &positions);
    let h = g.h();
    let dt = g.dt();
    let vm: Vec<Vec<f64>> = (0..g.levels())
        .map(|m| {
            let t = g.time(m);
            positions.iter().map(|x| v.eval(t, x)).collect()
        })
        .collect();
    let top = g.steps;
    let boundary: f64 = (0..g.nodes())
        .map(|k| vol[k] * (b_of(u.at(top, k), p) * vm[top][k] - b_of(u.at(0, k), p) * vm[0][k]))
        .sum();
    let mut flux_term = 0.0;
    let mut time_term = 0.0;
    for m in 1..g.levels() {
        let t = g.time(m);
        let um = u.slice(m);
        for e in &edges {
            let grad = (um[e.b] - um[e.a]) / h;
            let (a, _) = flux.edge_flux(t, &e.mid, 0.5 * (um[e.a] + um[e.b]), e.axis, grad, 0.0);
            flux_term += dt * e.weight * h * a * (vm[m][e.b] - vm[m][e.a]);
        }
        for k in 0..g.nodes() {
            time_term += vol[k] * b_of(um[k], p) * (vm[m][k] - vm[m - 1][k]);
        }
    }
    Ok(-boundary - flux_term + time_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::flux::model_flux;
    use crate::solver::grid::{BoundaryKind, Grid};
    use crate::weights::{Exponents, Weight};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_test_functions_vanish_on_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2] {
            let q = Cylinder::new(0.3, vec![0.2; n], 0.7, 0.4).unwrap();
            for _ in 0..5 {
                let a = TestFunction::random_signed(&q, &mut rng);
                let b = TestFunction::random_nonnegative(&q, &mut rng);
                TestFunction::new(q.clone(), a.lipschitz, "a", a.f.clone()).unwrap();
                TestFunction::new(q.clone(), b.lipschitz, "b", b.f.clone()).unwrap();
            }
        }
        let q = Cylinder::new(0.0, vec![0.0], 1.0, 1.0).unwrap();
        assert!(TestFunction::new(q, 1.0, "bad", Arc::new(|_, _| 1.0)).is_err());
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let w = Weight::unit(Exponents::admissible(2.5, 1, 16.0, 16.0).unwrap());
        let q = Cylinder::new(0.0, vec![0.0], 1.0, 1.0).unwrap();
        let grid = Grid::new(q.clone(), 16, 8, BoundaryKind::Dirichlet).unwrap();
        let u = Field::from_fn(grid, |_, _| 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = TestFunction::random_signed(&q, &mut rng);
        let r = weak_residual(&u, 2.5, &model_flux(&w), &v).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn mismatched_cylinder_is_rejected() {
        let w = Weight::unit(Exponents::admissible(2.0, 1, 16.0, 16.0).unwrap());
        let grid = Grid::new(
            Cylinder::new(0.0, vec![0.0], 1.0, 1.0).unwrap(),
            8,
            4,
            BoundaryKind::Dirichlet,
        )
        .unwrap();
        let u = Field::from_fn(grid, |_, _| 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = TestFunction::random_signed(
            &Cylinder::new(0.0, vec![0.0], 0.5, 1.0).unwrap(),
            &mut rng,
        );
        assert!(weak_residual(&u, 2.0, &model_flux(&w), &v).is_err());
    }
}
