use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flux::Flux;
use super::grid::{BoundaryKind, Field, Grid};
use crate::error::{Error, Result};

pub type BoundaryData = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryCondition {
    /// values prescribed on `∂K_R` at every time
    Dirichlet(BoundaryData),
    /// zero normal flux
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn dirichlet(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryCondition::Dirichlet(Arc::new(f))
    }

    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::Dirichlet(_) => BoundaryKind::Dirichlet,
            BoundaryCondition::Neumann => BoundaryKind::Neumann,
            BoundaryCondition::Periodic => BoundaryKind::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// target for `‖b(u) − b(u_old) − Δt div A‖∞ / ‖b(u_old)‖∞`
    pub tolerance: f64,
    /// accepted instead when Newton stagnates
    pub accept_tolerance: f64,
    pub max_iterations: usize,
    /// reject steps that would leave a non-positive unknown
    pub positivity: bool,
    /// fixed gradient regularization; default `max(1e−8, h) · ‖u0‖∞`
    pub regularization: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-12,
            accept_tolerance: 1e-10,
            max_iterations: 50,
            positivity: false,
            regularization: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub positivity_preserved: bool,
    pub min_damping: f64,
    pub linear_iterations: usize,
}

/// Nearest-neighbour lattice edge `a -> b` along `axis`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub axis: usize,
    /// face measure divided by `h`
    pub weight: f64,
    pub mid: Vec<f64>,
}

/// Edges of `grid` with face weights and midpoints.
pub fn edges_of(grid: &Grid) -> Vec<Edge> {
    let positions: Vec<Vec<f64>> = (0..grid.nodes()).map(|i| grid.position(i)).collect();
    build_edges(grid, &positions)
}

/// Every nearest-neighbour edge `a -> a + e_axis`, wrapping on periodic grids.
pub(crate) fn build_edges(grid: &Grid, positions: &[Vec<f64>]) -> Vec<Edge> {
    let n = grid.dim();
    let h = grid.h();
    let k = grid.per_axis();
    let periodic = grid.kind == BoundaryKind::Periodic;
    let mut edges = Vec::new();
    for a in 0..grid.nodes() {
        let idx = grid.index(a);
        for axis in 0..n {
            let next = idx[axis] + 1;
            let (j, mid_coord) = if next < k {
                (next, grid.coordinate(idx[axis], axis) + 0.5 * h)
            } else if periodic {
                (0, grid.coordinate(idx[axis], axis) + 0.5 * h)
            } else {
                continue;
            };
            let mut jdx = idx.clone();
            jdx[axis] = j;
            let face: f64 = (0..n)
                .filter(|&d| d != axis)
                .map(|d| {
                    if !periodic && (idx[d] == 0 || idx[d] == grid.cells) {
                        0.5 * h
                    } else {
                        h
                    }
                })
                .product();
            let mut mid = positions[a].clone();
            mid[axis] = mid_coord;
            edges.push(Edge {
                a,
                b: grid.node(&jdx),
                axis,
                weight: face / h,
                mid,
            });
        }
    }
    edges
}

/// Edge-based conservative discretization of `div A` on a grid.
///
/// The discrete operator is the gradient of a convex functional, so the Newton
/// matrix (using `∂A/∂η` only) is symmetric positive definite.
pub struct Stepper<'a> {
    grid: Grid,
    flux: &'a dyn Flux,
    bc: BoundaryCondition,
    opts: SolverOptions,
    p: f64,
    eps: f64,
    positions: Vec<Vec<f64>>,
    volume: Vec<f64>,
    edges: Vec<Edge>,
    /// node -> unknown index
    unknown: Vec<Option<usize>>,
    unknown_nodes: Vec<usize>,
}

#[inline]
pub(crate) fn b_of(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u
    } else {
        u.abs().powf(p - 2.0) * u
    }
}

#[inline]
fn db_of(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (p - 1.0) * u.abs().powf(p - 2.0)
    }
}

const PARALLEL_EDGES: usize = 4096;

impl<'a> Stepper<'a> {
    /// `scale` sets the default regularization `max(1e−8, h) · scale`.
    pub fn new(
        grid: &Grid,
        p: f64,
        flux: &'a dyn Flux,
        bc: &BoundaryCondition,
        opts: &SolverOptions,
        scale: f64,
    ) -> Result<Self> {
        if bc.kind() != grid.kind {
            return Err(Error::precondition(format!(
                "boundary condition {:?} does not match grid {:?}",
                bc.kind(),
                grid.kind
            )));
        }
        let h = grid.h();
        let positions: Vec<Vec<f64>> = (0..grid.nodes()).map(|i| grid.position(i)).collect();
        let volume: Vec<f64> = (0..grid.nodes()).map(|i| grid.control_volume(i)).collect();
        let edges = build_edges(grid, &positions);
        let mut unknown = vec![None; grid.nodes()];
        let mut unknown_nodes = Vec::new();
        for (i, slot) in unknown.iter_mut().enumerate() {
            if !(grid.kind == BoundaryKind::Dirichlet && grid.on_boundary(i)) {
                *slot = Some(unknown_nodes.len());
                unknown_nodes.push(i);
            }
        }
        let eps = opts
            .regularization
            .unwrap_or_else(|| h.max(1e-8) * if scale > 0.0 { scale } else { 1.0 });
        Ok(Stepper {
            grid: grid.clone(),
            flux,
            bc: bc.clone(),
            opts: *opts,
            p,
            eps,
            positions,
            volume,
            edges,
            unknown,
            unknown_nodes,
        })
    }

    pub fn regularization(&self) -> f64 {
        self.eps
    }

    fn edge_values(&self, u: &[f64], t: f64) -> Vec<(f64, f64)> {
        let h = self.grid.h();
        let eval = |e: &Edge| {
            let g = (u[e.b] - u[e.a]) / h;
            let xi = 0.5 * (u[e.a] + u[e.b]);
            self.flux.edge_flux(t, &e.mid, xi, e.axis, g, self.eps)
        };
        if self.edges.len() >= PARALLEL_EDGES {
            self.edges.par_iter().map(eval).collect()
        } else {
            self.edges.iter().map(eval).collect()
        }
    }

    /// `vol (b(u) − b_old) − Δt Σ faces · A` per unknown, plus the edge data.
    fn residual(&self, u: &[f64], b_old: &[f64], t: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
        let dt = self.grid.dt();
        let mut r: Vec<f64> = self
            .unknown_nodes
            .iter()
            .map(|&i| self.volume[i] * (b_of(u[i], self.p) - b_old[i]))
            .collect();
        let ev = self.edge_values(u, t);
        for (e, (a, _)) in self.edges.iter().zip(&ev) {
            let f = dt * e.weight * self.grid.h() * a;
            if let Some(i) = self.unknown[e.a] {
                r[i] -= f;
            }
            if let Some(j) = self.unknown[e.b] {
                r[j] += f;
            }
        }
        (r, ev)
    }

    fn scaled_norm(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.unknown_nodes)
            .fold(0.0, |m, (v, &i)| m.max((v / self.volume[i]).abs()))
    }

    fn apply_boundary(&self, u: &mut [f64], t: f64) {
        if let BoundaryCondition::Dirichlet(g) = &self.bc {
            for (i, x) in self.positions.iter().enumerate() {
                if self.unknown[i].is_none() {
                    u[i] = g(t, x);
                }
            }
        }
    }

    /// Advances `u_old` (time level `step`) to level `step + 1`.
    pub fn advance(&self, u_old: &[f64], step: usize) -> Result<(Vec<f64>, StepReport)> {
        if u_old.iter().any(|v| !v.is_finite()) {
            return Err(Error::precondition(format!(
                "non-finite data at step {step}"
            )));
        }
        if self.opts.positivity {
            if let Some(&i) = self.unknown_nodes.iter().find(|&&i| !(u_old[i] > 0.0)) {
                return Err(Error::PositivityLoss { step, node: i });
            }
        }
        let p = self.p;
        let t = self.grid.time(step + 1);
        let dt = self.grid.dt();
        let b_old: Vec<f64> = u_old.iter().map(|&v| b_of(v, p)).collect();
        let mut u = u_old.to_vec();
        self.apply_boundary(&mut u, t);
        let scale = u
            .iter()
            .chain(u_old)
            .fold(0.0f64, |m, &v| m.max(b_of(v, p).abs()))
            .max(f64::MIN_POSITIVE);
        let tol = self.opts.tolerance * scale;
        let accept = self.opts.accept_tolerance * scale;

        let (mut r, mut ev) = self.residual(&u, &b_old, t);
        let mut norm = self.scaled_norm(&r);
        let mut iterations = 0;
        let mut min_damping: f64 = 1.0;
        let mut linear_iterations = 0;
        while norm > tol {
            if iterations >= self.opts.max_iterations {
                if norm <= accept {
                    break;
                }
                return Err(Error::NewtonFailure {
                    step,
                    iterations,
                    residual: norm / scale,
                });
            }
            iterations += 1;
            let m = self.unknown_nodes.len();
            let mut diag: Vec<f64> = self
                .unknown_nodes
                .iter()
                .map(|&i| self.volume[i] * db_of(u[i], p))
                .collect();
            let mut off = Vec::with_capacity(self.edges.len());
            for (e, (_, da)) in self.edges.iter().zip(&ev) {
                let c = dt * e.weight * da;
                match (self.unknown[e.a], self.unknown[e.b]) {
                    (Some(i), Some(j)) => {
                        diag[i] += c;
                        diag[j] += c;
                        off.push((i, j, -c));
                    }
                    (Some(i), None) | (None, Some(i)) => diag[i] += c,
                    (None, None) => {}
                }
            }
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let (delta, its) = if self.grid.dim() == 1 && self.grid.kind != BoundaryKind::Periodic {
                (thomas(&diag, &off, &rhs)?, 0)
            } else {
                pcg(&diag, &off, &rhs, 1e-14, 20 * m + 100)?
            };
            linear_iterations += its;

            let mut theta: f64 = 1.0;
            if self.opts.positivity {
                for (k, &i) in self.unknown_nodes.iter().enumerate() {
                    if delta[k] < 0.0 {
                        theta = theta.min(0.9 * u[i] / -delta[k]);
                    }
                }
            }
            let mut accepted = None;
            for _ in 0..60 {
                let mut trial = u.clone();
                for (k, &i) in self.unknown_nodes.iter().enumerate() {
                    trial[i] += theta * delta[k];
                }
                let (rt, et) = self.residual(&trial, &b_old, t);
                let nt = self.scaled_norm(&rt);
                if nt.is_finite() && nt <= (1.0 - 1e-4 * theta) * norm {
                    accepted = Some((trial, rt, et, nt));
                    break;
                }
                theta *= 0.5;
            }
            match accepted {
                Some((trial, rt, et, nt)) => {
                    u = trial;
                    r = rt;
                    ev = et;
                    norm = nt;
                    min_damping = min_damping.min(theta);
                }
                None if norm <= accept => break,
                None => {
                    return Err(Error::NewtonFailure {
                        step,
                        iterations,
                        residual: norm / scale,
                    })
                }
            }
        }
        let positive = self.unknown_nodes.iter().all(|&i| u[i] > 0.0);
        if self.opts.positivity && !positive {
            let node = self
                .unknown_nodes
                .iter()
                .copied()
                .find(|&i| u[i] <= 0.0)
                .unwrap_or(0);
            return Err(Error::PositivityLoss { step, node });
        }
        Ok((
            u,
            StepReport {
                step,
                newton_iterations: iterations,
                residual_norm: norm / scale,
                positivity_preserved: positive,
                min_damping,
                linear_iterations,
            },
        ))
    }
}

/// Tridiagonal solve for a chain whose off-diagonal entries couple `i` and `i + 1`.
fn thomas(diag: &[f64], off: &[(usize, usize, f64)], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for &(i, j, v) in off {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b != a + 1 {
            return Err(Error::precondition("matrix is not tridiagonal"));
        }
        upper[a] = v;
        lower[b] = v;
    }
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::precondition("singular tridiagonal system"));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::precondition("singular tridiagonal system"));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

fn matvec(diag: &[f64], off: &[(usize, usize, f64)], x: &[f64], y: &mut [f64]) {
    for (yi, (d, xi)) in y.iter_mut().zip(diag.iter().zip(x)) {
        *yi = d * xi;
    }
    for &(i, j, v) in off {
        y[i] += v * x[j];
        y[j] += v * x[i];
    }
}

/// Jacobi-preconditioned conjugate gradients.
fn pcg(
    diag: &[f64],
    off: &[(usize, usize, f64)],
    rhs: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let m = diag.len();
    let mut x = vec![0.0; m];
    let mut r = rhs.to_vec();
    let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    for it in 1..=max_iter {
        matvec(diag, off, &p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::precondition(
                "newton matrix is not positive definite",
            ));
        }
        let alpha = rz / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= rtol * bnorm {
            return Ok((x, it));
        }
        for k in 0..m {
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    // an inexact direction is still usable by the damped outer iteration
    Ok((x, max_iter))
}

/// Full space-time trajectory with per-step reports.
#[derive(Debug)]
pub struct Solution {
    pub field: Field,
    pub reports: Vec<StepReport>,
    pub regularization: f64,
    /// set when marching stopped early; levels after the failure hold NaN
    pub failure: Option<Error>,
}

impl Solution {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn into_result(self) -> Result<Solution> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// One implicit step from level `m` of `field` with the default regularization
/// scaled by `‖u^m‖∞`.
pub fn step(
    field: &Field,
    m: usize,
    p: f64,
    flux: &dyn Flux,
    bc: &BoundaryCondition,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, StepReport)> {
    if m >= field.grid.steps {
        return Err(Error::precondition(format!("level {m} has no successor")));
    }
    let u = field.slice(m);
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Stepper::new(&field.grid, p, flux, bc, opts, scale)?.advance(u, m)
}

/// Marches `u0` over the grid's cylinder. On Dirichlet grids the initial boundary
/// nodes are overwritten by the boundary data.
pub fn solve(
    grid: &Grid,
    u0: &dyn Fn(&[f64]) -> f64,
    bc: &BoundaryCondition,
    p: f64,
    flux: &dyn Flux,
    opts: &SolverOptions,
) -> Result<Solution> {
    let mut field = Field::zeros(grid.clone());
    for k in 0..grid.nodes() {
        let x = grid.position(k);
        *field.at_mut(0, k) = match bc {
            BoundaryCondition::Dirichlet(g) if grid.on_boundary(k) => g(grid.time(0), &x),
            _ => u0(&x),
        };
    }
    let scale = field.slice(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let stepper = Stepper::new(grid, p, flux, bc, opts, scale)?;
    let mut reports = Vec::with_capacity(grid.steps);
    let mut failure = None;
    for m in 0..grid.steps {
        match stepper.advance(field.slice(m), m) {
            Ok((u, rep)) => {
                field.slice_mut(m + 1).copy_from_slice(&u);
                reports.push(rep);
            }
            Err(e) => {
                log::warn!("solve stopped at step {m}: {e}");
                for v in &mut field.values[(m + 1) * grid.nodes()..] {
                    *v = f64::NAN;
                }
                failure = Some(e);
                break;
            }
        }
    }
    Ok(Solution {
        field,
        reports,
        regularization: stepper.regularization(),
        failure,
    })
}

/// `Σ |u|^{p−2} u · vol` on level `m`.
pub fn discrete_mass(field: &Field, m: usize, p: f64) -> f64 {
    field
        .slice(m)
        .iter()
        .enumerate()
        .map(|(k, &u)| b_of(u, p) * field.grid.control_volume(k))
        .sum()
}
