//! Seeded random families for the lemma suites and the Harnack experiments.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Cylinder;
use crate::solver::{Field, Grid};

/// Multilinear interpolant of random values on a coarse `(t, x)` lattice over `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseLattice {
    pub q: Cylinder,
    pub knots: usize,
    pub values: Vec<f64>,
}

impl CoarseLattice {
    pub fn random<R: Rng>(q: &Cylinder, knots: usize, lo: f64, hi: f64, rng: &mut R) -> Self {
        let count = knots.pow(q.dim() as u32 + 1);
        CoarseLattice {
            q: q.clone(),
            knots,
            values: (0..count).map(|_| rng.gen_range(lo..hi)).collect(),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let k = self.knots;
        let mut coords = Vec::with_capacity(1 + x.len());
        coords.push(((t - self.q.t_bottom()) / self.q.height).clamp(0.0, 1.0));
        for (xi, c) in x.iter().zip(&self.q.x0) {
            coords.push(((xi - c + self.q.radius) / (2.0 * self.q.radius)).clamp(0.0, 1.0));
        }
        let dims = coords.len();
        let cell: Vec<(usize, f64)> = coords
            .iter()
            .map(|&u| {
                let s = u * (k - 1) as f64;
                let i = (s.floor() as usize).min(k - 2);
                (i, s - i as f64)
            })
            .collect();
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            let mut idx = 0;
            for (d, &(i, f)) in cell.iter().enumerate().rev() {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { f } else { 1.0 - f };
                idx = idx * k + i + bit;
            }
            acc += w * self.values[idx];
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MamedovClass {
    /// `v ≤ 0` on the lateral boundary of `K_{sR}`
    LateralVanishing,
    /// `∂t v ≥ 0`
    TimeNondecreasing,
}

/// Piecewise-linear random field of the given class, sampled on `grid`.
pub fn mamedov_field<R: Rng>(grid: &Grid, s: f64, class: MamedovClass, rng: &mut R) -> Field {
    let q = grid.cylinder.clone();
    match class {
        MamedovClass::LateralVanishing => {
            let lattice = CoarseLattice::random(&q, 5, -1.0, 1.0, rng);
            let shift = rng.gen_range(0.0..1.0);
            let slope = rng.gen_range(0.5..3.0);
            Field::from_fn(grid.clone(), move |t, x| {
                let d = x
                    .iter()
                    .zip(&q.x0)
                    .map(|(a, c)| (a - c).abs())
                    .fold(0.0, f64::max);
                (lattice.eval(t, x) + shift).min(slope * (s * q.radius - d) / (s * q.radius))
            })
        }
        MamedovClass::TimeNondecreasing => {
            let base = CoarseLattice::random(&q, 5, -1.0, 1.0, rng);
            let growth = CoarseLattice::random(&q, 5, 0.0, 1.0, rng);
            let increments: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = increments.iter().sum::<f64>().max(1e-12);
            Field::from_fn(grid.clone(), move |t, x| {
                let u = ((t - q.t_bottom()) / q.height).clamp(0.0, 1.0) * increments.len() as f64;
                let i = (u.floor() as usize).min(increments.len() - 1);
                let ramp =
                    (increments[..i].iter().sum::<f64>() + (u - i as f64) * increments[i]) / total;
                // spatial factors frozen at the bottom time so ∂t v = b(x) ρ′(t) ≥ 0
                let tb = q.t_bottom();
                base.eval(tb, x) + growth.eval(tb, x) * ramp
            })
        }
    }
}

/// Samples `f` on increasing points of `[τ0, τ1]` by back-propagating the
/// iteration hypothesis with random slack factors in `[0.2, 1]`.
pub fn iteration_sample<R: Rng>(
    rng: &mut R,
    alpha: f64,
    a: f64,
    beta: f64,
    tau: (f64, f64),
    points: usize,
) -> (Vec<f64>, Vec<f64>) {
    let ts: Vec<f64> = (0..points)
        .map(|i| tau.0 + (tau.1 - tau.0) * i as f64 / (points - 1) as f64)
        .collect();
    let mut f = vec![0.0; points];
    f[points - 1] = rng.gen_range(0.0..a);
    for i in (0..points - 1).rev() {
        let cap = (i + 1..points)
            .map(|j| alpha * f[j] + a / (ts[j] - ts[i]).powf(beta))
            .fold(f64::INFINITY, f64::min);
        f[i] = rng.gen_range(0.2..1.0) * cap;
    }
    (ts, f)
}

/// Sum of `C^1` cosine bumps supported inside `(−1, 1)^n`, evaluated on the
/// dilated box `(−size, size)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSum {
    pub bumps: Vec<(f64, Vec<f64>, f64)>,
}

impl BumpSum {
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let count = rng.gen_range(1..=4);
        let bumps = (0..count)
            .map(|_| {
                let w = rng.gen_range(0.1..0.6);
                let c = (0..n).map(|_| rng.gen_range(-1.0 + w..1.0 - w)).collect();
                (rng.gen_range(-1.0..1.0), c, w)
            })
            .collect();
        BumpSum { bumps }
    }

    pub fn eval(&self, x: &[f64], size: f64) -> f64 {
        self.bumps
            .iter()
            .map(|(a, c, w)| {
                a * x
                    .iter()
                    .zip(c)
                    .map(|(xi, ci)| {
                        let z = (xi / size - ci) / w;
                        if z.abs() < 1.0 {
                            (0.5 * PI * z).cos().powi(2)
                        } else {
                            0.0
                        }
                    })
                    .product::<f64>()
            })
            .sum()
    }
}

/// Strictly positive smooth data `base + Σ a_j exp(−|x − c_j|²/w_j²) (1 + ε sin(ω t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveData {
    pub base: f64,
    pub bumps: Vec<(f64, Vec<f64>, f64)>,
    pub wobble: f64,
    pub frequency: f64,
}

impl PositiveData {
    pub fn constant(c: f64) -> Self {
        PositiveData {
            base: c,
            bumps: Vec::new(),
            wobble: 0.0,
            frequency: 0.0,
        }
    }

    pub fn random<R: Rng>(q: &Cylinder, rng: &mut R) -> Self {
        let count = rng.gen_range(1..=3);
        let bumps = (0..count)
            .map(|_| {
                let c =
                    q.x0.iter()
                        .map(|x| x + rng.gen_range(-0.8..0.8) * q.radius)
                        .collect();
                (
                    rng.gen_range(0.2..1.0),
                    c,
                    rng.gen_range(0.15..0.5) * q.radius,
                )
            })
            .collect();
        PositiveData {
            base: rng.gen_range(0.5..1.5),
            bumps,
            wobble: rng.gen_range(0.0..0.5),
            frequency: rng.gen_range(0.5..2.0) * PI / q.height,
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let mod_t = 1.0 + self.wobble * (self.frequency * t).sin();
        self.base
            + self
                .bumps
                .iter()
                .map(|(a, c, w)| {
                    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    a * (-r2 / (w * w)).exp() * mod_t
                })
                .sum::<f64>()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        PositiveData {
            base: lambda * self.base,
            bumps: self
                .bumps
                .iter()
                .map(|(a, c, w)| (lambda * a, c.clone(), *w))
                .collect(),
            ..self.clone()
        }
    }
}
