use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cylinder;
use crate::solver::{BoundaryKind, Field, Grid};

/// A lattice node with its share of a cylinder's normalized measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub level: usize,
    pub node: usize,
    /// `overlap(time cell) · Π overlap(space cell) / 2^n`
    pub measure: f64,
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

/// Time level `m ≥ 1` owns `(t_m − Δt, t_m]`; node cells are `x_i ± h/2` clipped
/// to the domain (wrapped on periodic grids).
pub fn cells(grid: &Grid, q: &Cylinder) -> Vec<Cell> {
    let n = grid.dim();
    let h = grid.h();
    let dt = grid.dt();
    let dom = &grid.cylinder;
    let axis_weight = |axis: usize, i: usize| -> f64 {
        let c = grid.coordinate(i, axis);
        let dlo = dom.x0[axis] - dom.radius;
        let dhi = dom.x0[axis] + dom.radius;
        let (lo, hi) = (q.x0[axis] - q.radius, q.x0[axis] + q.radius);
        let (a, b) = (c - 0.5 * h, c + 0.5 * h);
        if grid.kind == BoundaryKind::Periodic {
            let period = dhi - dlo;
            overlap(a, b, lo, hi)
                + overlap(a + period, b + period, lo, hi)
                + overlap(a - period, b - period, lo, hi)
        } else {
            overlap(a.max(dlo), b.min(dhi), lo, hi)
        }
    };
    let k = grid.per_axis();
    let table: Vec<Vec<f64>> = (0..n)
        .map(|d| (0..k).map(|i| axis_weight(d, i)).collect())
        .collect();
    let scale = 0.5f64.powi(n as i32);
    let mut out = Vec::new();
    for m in 1..grid.levels() {
        let tw = overlap(grid.time(m) - dt, grid.time(m), q.t_bottom(), q.t0);
        if tw <= 0.0 {
            continue;
        }
        for node in 0..grid.nodes() {
            let sw: f64 = grid
                .index(node)
                .iter()
                .enumerate()
                .map(|(d, &i)| table[d][i])
                .product();
            if sw > 0.0 {
                out.push(Cell {
                    level: m,
                    node,
                    measure: tw * sw * scale,
                });
            }
        }
    }
    out
}

/// Extreme value with its location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub level: usize,
    pub node: usize,
}

/// Nodes inside the closed cylinder, excluding the boundary nodes and the first
/// interior layer of the grid and the first two time levels.
pub fn interior_nodes(grid: &Grid, q: &Cylinder) -> Vec<(usize, usize)> {
    let tol_t = 1e-9 * grid.dt();
    let tol_x = 1e-9 * grid.h();
    let nodes: Vec<usize> = (0..grid.nodes())
        .filter(|&k| !grid.near_boundary(k))
        .filter(|&k| {
            grid.position(k)
                .iter()
                .zip(&q.x0)
                .all(|(x, c)| (x - c).abs() <= q.radius + tol_x)
        })
        .collect();
    let mut out = Vec::new();
    for m in 2..grid.levels() {
        let t = grid.time(m);
        if t >= q.t_bottom() - tol_t && t <= q.t0 + tol_t {
            out.extend(nodes.iter().map(|&k| (m, k)));
        }
    }
    out
}

fn extremum(u: &Field, q: &Cylinder, better: impl Fn(f64, f64) -> bool) -> Result<Extremum> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (m, k) in interior_nodes(&u.grid, q) {
        let v = u.at(m, k);
        if best.map_or(true, |(b, _, _)| better(v, b)) {
            best = Some((v, m, k));
        }
    }
    let (value, level, node) = best
        .ok_or_else(|| Error::precondition(format!("no interior nodes of the grid lie in {q}")))?;
    Ok(Extremum {
        value,
        t: u.grid.time(level),
        x: u.grid.position(node),
        level,
        node,
    })
}

/// Max over interior nodes; ties go to the earliest time, then the lowest index.
pub fn ess_sup(u: &Field, q: &Cylinder) -> Result<Extremum> {
    extremum(u, q, |v, b| v > b)
}

pub fn ess_inf(u: &Field, q: &Cylinder) -> Result<Extremum> {
    extremum(u, q, |v, b| v < b)
}

/// `∬_Q f(u)` with normalized measures.
pub fn integrate(u: &Field, q: &Cylinder, f: impl Fn(f64) -> f64) -> f64 {
    cells(&u.grid, q)
        .iter()
        .map(|c| c.measure * f(u.at(c.level, c.node)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub cells: usize,
    pub steps: usize,
    pub h: f64,
    pub dt: f64,
}

impl From<&Grid> for Resolution {
    fn from(g: &Grid) -> Self {
        Resolution {
            cells: g.cells,
            steps: g.steps,
            h: g.h(),
            dt: g.dt(),
        }
    }
}

/// `count` logarithmically spaced levels in `[lo, hi]`.
pub fn log_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
