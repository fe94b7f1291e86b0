//! Parabolic cylinders `K_R(x0) × (t0 − T, t0)` and the intrinsic height solvers.
//!
//! The height equation is solved in the normalized form
//!
//! ```text
//! G(T) = (2^{-n} ∬_{Q_T} ω^α)^{1/α} · T^{1/α′} = C R^{n/α + p}
//! ```
//!
//! i.e. with `|K_R| = R^n`, so that `ω ≡ 1` gives `T = C R^p` and the root also
//! satisfies `T = C R^p / (⨏_{Q_T} ω^α)^{1/α}`. With raw cube volumes the same `T`
//! solves the equation with constant `C · 2^{n/α}`, reported as
//! [`HeightSolve::cube_constant`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::quadrature::{cylinder_integral, cylinder_sum, QuadratureSpec};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// top time `t0`
    pub t0: f64,
    pub x0: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K({:?}, {}) x ({}, {})",
            self.x0,
            self.radius,
            self.t_bottom(),
            self.t0
        )
    }
}

impl Cylinder {
    pub fn new(t0: f64, x0: Vec<f64>, radius: f64, height: f64) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::precondition("cylinder needs n >= 1"));
        }
        if !(radius > 0.0 && height > 0.0) || !radius.is_finite() || !height.is_finite() {
            return Err(Error::precondition(format!(
                "cylinder needs R > 0 and T > 0, got R={radius}, T={height}"
            )));
        }
        Ok(Cylinder {
            t0,
            x0,
            radius,
            height,
        })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn t_bottom(&self) -> f64 {
        self.t0 - self.height
    }

    /// Lebesgue volume `(2R)^n T`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.radius).powi(self.dim() as i32) * self.height
    }

    /// Volume with `|K_R| = R^n`.
    pub fn normalized_volume(&self) -> f64 {
        self.radius.powi(self.dim() as i32) * self.height
    }

    /// Box bounds in `(t, x1, .., xn)` order.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.t_bottom()];
        let mut hi = vec![self.t0];
        for &c in &self.x0 {
            lo.push(c - self.radius);
            hi.push(c + self.radius);
        }
        (lo, hi)
    }

    /// `K_{sR}(x0) × (t0 − sT, t0)` for any `s > 0`.
    pub fn scaled(&self, s: f64) -> Cylinder {
        Cylinder {
            t0: self.t0,
            x0: self.x0.clone(),
            radius: s * self.radius,
            height: s * self.height,
        }
    }

    pub fn with_height(&self, height: f64) -> Cylinder {
        Cylinder {
            height,
            ..self.clone()
        }
    }

    /// Closed containment with a relative slack.
    pub fn contains_point(&self, t: f64, x: &[f64], slack: f64) -> bool {
        let eps_t = slack * self.height;
        let eps_x = slack * self.radius;
        t <= self.t0 + eps_t
            && t >= self.t_bottom() - eps_t
            && x.iter()
                .zip(&self.x0)
                .all(|(a, c)| (a - c).abs() <= self.radius + eps_x)
    }

    pub fn contains(&self, other: &Cylinder) -> bool {
        let tol = 1e-12 * (self.radius + self.height + self.t0.abs());
        other.dim() == self.dim()
            && other.t0 <= self.t0 + tol
            && other.t_bottom() >= self.t_bottom() - tol
            && other.x0.iter().zip(&self.x0).all(|(a, c)| {
                a - other.radius >= c - self.radius - tol
                    && a + other.radius <= c + self.radius + tol
            })
    }

    pub fn time_disjoint(&self, other: &Cylinder) -> bool {
        self.t0 <= other.t_bottom() || other.t0 <= self.t_bottom()
    }
}

/// `Q^s = K_{sR} × (t0 − sT, t0)` for `1/2 < s <= 1`.
pub fn subcylinder(q: &Cylinder, s: f64) -> Result<Cylinder> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::precondition(format!(
            "subcylinder scale {s} not in (1/2, 1]"
        )));
    }
    Ok(q.scaled(s))
}

/// Lower `K_{R/4} × (t0 − 3T/4, t0 − T/2)` and upper `K_{R/4} × (t0 − T/4, t0)`.
pub fn harnack_cylinders(q: &Cylinder) -> (Cylinder, Cylinder) {
    let lower = Cylinder {
        t0: q.t0 - 0.5 * q.height,
        x0: q.x0.clone(),
        radius: 0.25 * q.radius,
        height: 0.25 * q.height,
    };
    let upper = Cylinder {
        t0: q.t0,
        x0: q.x0.clone(),
        radius: 0.25 * q.radius,
        height: 0.25 * q.height,
    };
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightSolve {
    pub height: f64,
    /// `(G(T) − target) / target`
    pub residual: f64,
    pub iterations: usize,
    pub constant: f64,
    /// constant for the same root with raw `(2R)^n T` volumes
    pub cube_constant: f64,
    /// final bisection bracket `[lo, hi]`
    pub bracket: (f64, f64),
    /// `(⨏_{Q_T} ω^α)^{1/α}` at the root
    pub alpha_mean: f64,
}

impl HeightSolve {
    pub fn cylinder(&self, t0: f64, x0: &[f64], radius: f64) -> Cylinder {
        Cylinder {
            t0,
            x0: x0.to_vec(),
            radius,
            height: self.height,
        }
    }
}

const MAX_BISECTIONS: usize = 60;
const RANGE: f64 = 1e12;

struct HeightProblem<'a> {
    weight: &'a Weight,
    t0: f64,
    x0: &'a [f64],
    radius: f64,
    spec: &'a QuadratureSpec,
    target: f64,
}

impl HeightProblem<'_> {
    fn new<'a>(
        weight: &'a Weight,
        t0: f64,
        x0: &'a [f64],
        radius: f64,
        constant: f64,
        spec: &'a QuadratureSpec,
    ) -> Result<HeightProblem<'a>> {
        if !(radius > 0.0) || !(constant > 0.0) {
            return Err(Error::precondition("height solve needs R > 0 and C > 0"));
        }
        let e = &weight.exponents;
        if x0.len() != e.n {
            return Err(Error::precondition(format!(
                "center has dimension {}, exponents say n = {}",
                x0.len(),
                e.n
            )));
        }
        let n = e.n as f64;
        let target = constant * radius.powf(n / e.alpha + e.p);
        Ok(HeightProblem {
            weight,
            t0,
            x0,
            radius,
            spec,
            target,
        })
    }

    fn cylinder(&self, f: f64) -> Cylinder {
        Cylinder {
            t0: self.t0,
            x0: self.x0.to_vec(),
            radius: self.radius,
            height: f,
        }
    }

    fn mass(&self, f: f64) -> Result<f64> {
        let alpha = self.weight.exponents.alpha;
        let w = self.weight;
        let q = self.cylinder(f);
        let integrand = |t: f64, x: &[f64]| w.omega(t, x).powf(alpha);
        let dist = |t: f64, x: &[f64]| w.distance_to_singular(t, x);
        let clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)> =
            w.singular.is_some().then_some(&dist);
        cylinder_sum(&integrand, &q, self.spec, clip).ok_or_else(|| Error::Divergent {
            region: q.to_string(),
            ratio: f64::INFINITY,
        })
    }

    /// `G(F) / target`
    fn ratio(&self, f: f64) -> Result<f64> {
        let e = &self.weight.exponents;
        let scale = 0.5f64.powi(e.n as i32);
        let g = (scale * self.mass(f)?).powf(1.0 / e.alpha) * f.powf(1.0 / e.alpha_prime());
        Ok(g / self.target)
    }

    fn finish(&self, height: f64, iterations: usize, bracket: (f64, f64)) -> Result<HeightSolve> {
        let e = &self.weight.exponents;
        let q = self.cylinder(height);
        let alpha = e.alpha;
        let w = self.weight;
        let integrand = |t: f64, x: &[f64]| w.omega(t, x).powf(alpha);
        let dist = |t: f64, x: &[f64]| w.distance_to_singular(t, x);
        let clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)> =
            w.singular.is_some().then_some(&dist);
        // convergence audit of ω^α on the final cylinder
        let integral = cylinder_integral(&integrand, &q, self.spec, clip)?;
        let residual = self.ratio(height)? - 1.0;
        let constant = self.target / self.radius.powf(e.n as f64 / alpha + e.p);
        Ok(HeightSolve {
            height,
            residual,
            iterations,
            constant,
            cube_constant: constant * 2f64.powf(e.n as f64 / alpha),
            bracket,
            alpha_mean: integral.average().powf(1.0 / alpha),
        })
    }
}

/// Root form: bisection on a bracket grown geometrically from `C R^p`.
pub fn intrinsic_height(
    weight: &Weight,
    t0: f64,
    x0: &[f64],
    radius: f64,
    constant: f64,
    spec: &QuadratureSpec,
) -> Result<HeightSolve> {
    let prob = HeightProblem::new(weight, t0, x0, radius, constant, spec)?;
    let p = weight.exponents.p;
    let base = radius.powf(p);
    let (min_f, max_f) = (base / RANGE, base * RANGE);

    let guess = constant * base;
    let r0 = prob.ratio(guess)?;
    if (r0 - 1.0).abs() <= 1e-14 {
        return prob.finish(guess, 0, (guess, guess));
    }
    let (mut lo, mut hi) = if r0 < 1.0 {
        let mut lo = guess;
        let mut hi = guess * 2.0;
        while prob.ratio(hi)? < 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > max_f {
                return Err(Error::HeightOutOfRange {
                    lo: min_f,
                    hi: max_f,
                });
            }
        }
        (lo, hi)
    } else {
        let mut hi = guess;
        let mut lo = guess * 0.5;
        while prob.ratio(lo)? >= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < min_f {
                return Err(Error::HeightOutOfRange {
                    lo: min_f,
                    hi: max_f,
                });
            }
        }
        (lo, hi)
    };

    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        iterations += 1;
        let r = prob.ratio(mid)?;
        if (r - 1.0).abs() <= 1e-15 {
            lo = mid;
            hi = mid;
            break;
        }
        if r < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    prob.finish((lo * hi).sqrt(), iterations, (lo, hi))
}

/// Sup form: `T = sup{F > 0 : G(F) <= C R^{n/α+p}}`, found by a downward
/// geometric scan over `[1e−12, 1e12] R^p` followed by bisection on the
/// feasibility predicate.
pub fn intrinsic_height_supform(
    weight: &Weight,
    t0: f64,
    x0: &[f64],
    radius: f64,
    constant: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let prob = HeightProblem::new(weight, t0, x0, radius, constant, spec)?;
    let base = radius.powf(weight.exponents.p);
    let (min_f, max_f) = (base / RANGE, base * RANGE);

    let mut hi = max_f;
    if prob.ratio(hi)? <= 1.0 {
        return Err(Error::HeightOutOfRange {
            lo: min_f,
            hi: max_f,
        });
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < min_f {
            return Err(Error::HeightOutOfRange {
                lo: min_f,
                hi: max_f,
            });
        }
        if prob.ratio(lo)? <= 1.0 {
            break;
        }
        hi = lo;
    }
    for _ in 0..MAX_BISECTIONS + 20 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if prob.ratio(mid)? <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
