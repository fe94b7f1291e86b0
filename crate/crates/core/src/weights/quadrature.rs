//! Tensor-product quadrature over boxes and space-time cylinders.
//!
//! Every rule is evaluated on a dyadic sequence of grids; the last three levels
//! give an increment ratio that separates convergent integrals (ratio well below
//! one) from integrands that are not integrable beyond the clip distance.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cylinder;

/// Increment ratio above which refinement is treated as non-convergent.
pub const DIVERGENCE_RATIO: f64 = 0.9;
/// Relative increment below which a non-contracting sequence still counts as converged.
pub const NEGLIGIBLE_INCREMENT: f64 = 1e-4;

const GAUSS_ORDER: usize = 4;
const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    Midpoint,
    TensorGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Dyadic depth; level `l` uses `2^(l+1)` cells (or Gauss panels) per axis.
    pub levels: u32,
    #[serde(default)]
    pub rule: Rule,
    /// Nodes closer than this to a weight's singular set are excised.
    #[serde(default = "default_singular_tolerance")]
    pub singular_tolerance: f64,
}

fn default_singular_tolerance() -> f64 {
    1e-12
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            levels: 6,
            rule: Rule::Midpoint,
            singular_tolerance: default_singular_tolerance(),
        }
    }
}

impl QuadratureSpec {
    pub fn new(levels: u32, rule: Rule, singular_tolerance: f64) -> Result<Self> {
        if levels < 1 {
            return Err(Error::precondition("quadrature levels must be >= 1"));
        }
        if !(singular_tolerance > 0.0) {
            return Err(Error::precondition("singular tolerance must be > 0"));
        }
        Ok(QuadratureSpec {
            levels,
            rule,
            singular_tolerance,
        })
    }

    pub fn midpoint(levels: u32) -> Self {
        QuadratureSpec {
            levels,
            ..Default::default()
        }
    }

    pub fn gauss(levels: u32) -> Self {
        QuadratureSpec {
            levels,
            rule: Rule::TensorGauss,
            ..Default::default()
        }
    }

    pub fn refined(&self, extra: u32) -> Self {
        QuadratureSpec {
            levels: self.levels + extra,
            ..*self
        }
    }

    fn panels(level: u32) -> usize {
        1usize << (level + 1)
    }
}

/// Result of a converged integral with its refinement history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub integral: f64,
    pub volume: f64,
    /// Geometric-tail estimate of the remaining error in `integral`.
    pub error: f64,
    /// Integral values at levels `levels-2 ..= levels` (fewer if `levels < 2`).
    pub history: Vec<f64>,
}

impl Integral {
    pub fn average(&self) -> f64 {
        self.integral / self.volume
    }

    pub fn average_error(&self) -> f64 {
        self.error / self.volume
    }
}

fn gauss_reference() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let order = NonZeroUsize::new(GAUSS_ORDER).expect("nonzero order");
        GaussLegendre::new(order)
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x, w))
            .collect()
    })
}

fn axis_points(lo: f64, hi: f64, rule: Rule, level: u32) -> Vec<(f64, f64)> {
    let panels = QuadratureSpec::panels(level);
    let width = (hi - lo) / panels as f64;
    match rule {
        Rule::Midpoint => (0..panels)
            .map(|i| (lo + (i as f64 + 0.5) * width, width))
            .collect(),
        Rule::TensorGauss => {
            let reference = gauss_reference();
            let mut pts = Vec::with_capacity(panels * reference.len());
            for i in 0..panels {
                let a = lo + i as f64 * width;
                for &(node, weight) in reference {
                    pts.push((a + 0.5 * width * (node + 1.0), 0.5 * width * weight));
                }
            }
            pts
        }
    }
}

/// Integral of `f` over the box `[lo, hi]` on a single refinement level.
///
/// Returns `None` if the integrand produced a non-finite value. Nodes with
/// `clip(point) < tolerance` are skipped.
pub fn box_sum(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lo: &[f64],
    hi: &[f64],
    rule: Rule,
    level: u32,
    clip: Option<(&(dyn Fn(&[f64]) -> f64 + Sync), f64)>,
) -> Option<f64> {
    let dim = lo.len();
    assert!(dim >= 1 && dim <= MAX_DIM && hi.len() == dim);
    let axes: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|k| axis_points(lo[k], hi[k], rule, level))
        .collect();

    let partials: Vec<Option<f64>> = axes[0]
        .par_iter()
        .map(|&(x0, w0)| {
            let mut point = [0.0; MAX_DIM];
            point[0] = x0;
            let mut idx = [0usize; MAX_DIM];
            let mut acc = 0.0;
            loop {
                let mut w = w0;
                for k in 1..dim {
                    let (x, wk) = axes[k][idx[k]];
                    point[k] = x;
                    w *= wk;
                }
                let p = &point[..dim];
                let keep = match clip {
                    Some((dist, tol)) => dist(p) >= tol,
                    None => true,
                };
                if keep {
                    let v = f(p);
                    if !v.is_finite() {
                        return None;
                    }
                    acc += w * v;
                }
                // odometer over axes 1..dim
                let mut k = dim;
                loop {
                    if k == 1 {
                        return Some(acc);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();

    let mut total = 0.0;
    for part in partials {
        total += part?;
    }
    Some(total)
}

/// Integrates over a box with the convergence/divergence diagnosis.
pub fn integrate_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lo: &[f64],
    hi: &[f64],
    spec: &QuadratureSpec,
    clip: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    region: &str,
) -> Result<Integral> {
    let volume: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if !(volume > 0.0) {
        return Err(Error::precondition(format!("{region} has no volume")));
    }
    let first = spec.levels.saturating_sub(2);
    let clip = clip.map(|d| (d, spec.singular_tolerance));
    let mut history = Vec::with_capacity(3);
    for level in first..=spec.levels {
        match box_sum(f, lo, hi, spec.rule, level, clip) {
            Some(v) => history.push(v),
            None => {
                return Err(Error::Divergent {
                    region: region.to_string(),
                    ratio: f64::INFINITY,
                })
            }
        }
    }
    let integral = *history.last().expect("at least one level");
    let error = diagnose(&history, region)?;
    Ok(Integral {
        integral,
        volume,
        error,
        history,
    })
}

fn diagnose(history: &[f64], region: &str) -> Result<f64> {
    let last = *history.last().expect("nonempty");
    let scale = last.abs().max(f64::MIN_POSITIVE);
    match history.len() {
        0 | 1 => Ok(0.0),
        2 => Ok((history[1] - history[0]).abs()),
        _ => {
            let d1 = history[1] - history[0];
            let d2 = history[2] - history[1];
            if d2.abs() <= 1e-13 * scale {
                return Ok(d2.abs());
            }
            let ratio = if d1 == 0.0 {
                f64::INFINITY
            } else {
                (d2 / d1).abs()
            };
            if ratio >= DIVERGENCE_RATIO {
                // kinks give erratic but tiny increments; only large ones signal divergence
                if d2.abs() > NEGLIGIBLE_INCREMENT * scale {
                    return Err(Error::Divergent {
                        region: region.to_string(),
                        ratio,
                    });
                }
                return Ok(d1.abs() + d2.abs());
            }
            Ok(d2.abs() * ratio / (1.0 - ratio))
        }
    }
}

/// Space-time integration of `f(t, x)` over a cylinder.
pub fn cylinder_integral(
    f: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    q: &Cylinder,
    spec: &QuadratureSpec,
    clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)>,
) -> Result<Integral> {
    let (lo, hi) = q.bounds();
    let g = |p: &[f64]| f(p[0], &p[1..]);
    let region = q.to_string();
    match clip {
        Some(d) => {
            let dist = |p: &[f64]| d(p[0], &p[1..]);
            integrate_box(&g, &lo, &hi, spec, Some(&dist), &region)
        }
        None => integrate_box(&g, &lo, &hi, spec, None, &region),
    }
}

/// Single-level integral over a cylinder; used inside root solves.
pub(crate) fn cylinder_sum(
    f: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    q: &Cylinder,
    spec: &QuadratureSpec,
    clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)>,
) -> Option<f64> {
    let (lo, hi) = q.bounds();
    let g = |p: &[f64]| f(p[0], &p[1..]);
    match clip {
        Some(d) => {
            let dist = |p: &[f64]| d(p[0], &p[1..]);
            box_sum(
                &g,
                &lo,
                &hi,
                spec.rule,
                spec.levels,
                Some((&dist, spec.singular_tolerance)),
            )
        }
        None => box_sum(&g, &lo, &hi, spec.rule, spec.levels, None),
    }
}

/// `(1/|Q|) ∬_Q w dt dx` with its error estimate.
pub fn cylinder_average(
    w: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    q: &Cylinder,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    cylinder_integral(w, q, spec, None)
}
