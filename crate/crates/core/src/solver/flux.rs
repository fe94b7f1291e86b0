use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weight;

/// A flux `A(t, x, ξ, η)` with declared growth constants `c1`, `c2`.
pub trait Flux: Send + Sync {
    fn label(&self) -> String;

    /// declared `(c1, c2)`
    fn constants(&self) -> (f64, f64);

    fn evaluate(&self, t: f64, x: &[f64], xi: f64, eta: &[f64]) -> Vec<f64>;

    /// Normal component of `A` across a grid edge along `axis` when the normal
    /// difference quotient is `g`, together with its derivative in `g`. `eps` is
    /// the gradient regularization; fluxes without one may ignore it.
    fn edge_flux(&self, t: f64, x: &[f64], xi: f64, axis: usize, g: f64, eps: f64) -> (f64, f64) {
        let n = x.len();
        let eval = |g: f64| {
            let mut eta = vec![0.0; n];
            eta[axis] = g;
            self.evaluate(t, x, xi, &eta)[axis]
        };
        let d = 1e-6 * g.abs().max(eps).max(1e-12);
        (eval(g), (eval(g + d) - eval(g - d)) / (2.0 * d))
    }
}

/// `A = ω |η|^{p−2} η` with `c1 = c2 = 1`.
#[derive(Debug, Clone)]
pub struct ModelFlux {
    pub weight: Weight,
    pub p: f64,
}

pub fn model_flux(w: &Weight) -> ModelFlux {
    ModelFlux {
        weight: w.clone(),
        p: w.exponents.p,
    }
}

impl Flux for ModelFlux {
    fn label(&self) -> String {
        format!("model[{}]", self.weight.label)
    }

    fn constants(&self) -> (f64, f64) {
        (1.0, 1.0)
    }

    fn evaluate(&self, t: f64, x: &[f64], _xi: f64, eta: &[f64]) -> Vec<f64> {
        let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; eta.len()];
        }
        let s = self.weight.omega(t, x) * norm.powf(self.p - 2.0);
        eta.iter().map(|v| s * v).collect()
    }

    fn edge_flux(&self, t: f64, x: &[f64], _xi: f64, _axis: usize, g: f64, eps: f64) -> (f64, f64) {
        regularized(self.weight.omega(t, x), self.p, g, eps)
    }
}

fn regularized(scale: f64, p: f64, g: f64, eps: f64) -> (f64, f64) {
    let q = g * g + eps * eps;
    if q == 0.0 {
        return (0.0, if p == 2.0 { scale } else { 0.0 });
    }
    let a = q.powf(0.5 * (p - 2.0));
    (
        scale * a * g,
        scale * a * ((p - 1.0) * g * g + eps * eps) / q,
    )
}

/// `A = ω |η|^{p−2} diag(d) η`.
#[derive(Debug, Clone)]
pub struct DiagonalFlux {
    pub weight: Weight,
    pub p: f64,
    pub diag: Vec<f64>,
    pub declared: (f64, f64),
}

impl DiagonalFlux {
    /// Declares the eigenvalue bounds `min d`, `max d` as growth constants.
    pub fn new(w: &Weight, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != w.exponents.n || diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::precondition(
                "diagonal must be positive with length n",
            ));
        }
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(0.0, f64::max);
        Ok(DiagonalFlux {
            weight: w.clone(),
            p: w.exponents.p,
            diag,
            declared: (lo, hi),
        })
    }
}

impl Flux for DiagonalFlux {
    fn label(&self) -> String {
        format!("diagonal{:?}[{}]", self.diag, self.weight.label)
    }

    fn constants(&self) -> (f64, f64) {
        self.declared
    }

    fn evaluate(&self, t: f64, x: &[f64], _xi: f64, eta: &[f64]) -> Vec<f64> {
        let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; eta.len()];
        }
        let s = self.weight.omega(t, x) * norm.powf(self.p - 2.0);
        eta.iter().zip(&self.diag).map(|(v, d)| s * d * v).collect()
    }

    fn edge_flux(&self, t: f64, x: &[f64], _xi: f64, axis: usize, g: f64, eps: f64) -> (f64, f64) {
        regularized(self.weight.omega(t, x) * self.diag[axis], self.p, g, eps)
    }
}

pub type FluxFn = Arc<dyn Fn(f64, &[f64], f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// User flux given by a closure; edge derivatives by central differences.
#[derive(Clone)]
pub struct FnFlux {
    pub label: String,
    pub declared: (f64, f64),
    pub f: FluxFn,
}

impl Flux for FnFlux {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn constants(&self) -> (f64, f64) {
        self.declared
    }

    fn evaluate(&self, t: f64, x: &[f64], xi: f64, eta: &[f64]) -> Vec<f64> {
        (self.f)(t, x, xi, eta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: f64,
    pub eta: Vec<f64>,
    /// `A·η / (ω |η|^p)`
    pub coercivity: f64,
    /// `|A| / (ω |η|^{p−1})`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub samples: usize,
    /// empirical best constants
    pub c1: f64,
    pub c2: f64,
    pub declared: (f64, f64),
    pub pass: bool,
    pub witness: Option<GrowthSample>,
}

const AUDIT_SLACK: f64 = 1e-12;

/// Samples `(t, x) ∈ [−1, 1]^{1+n}`, `ξ ∈ [−10, 10]`, and `η` with log-uniform length
/// in `[1e−3, 1e3]`, skipping points where `ω` is not finite and positive.
pub fn audit_growth(flux: &dyn Flux, w: &Weight, samples: usize, seed: u64) -> Result<GrowthAudit> {
    if samples == 0 {
        return Err(Error::precondition("audit needs at least one sample"));
    }
    let n = w.exponents.n;
    let p = w.exponents.p;
    let (d1, d2) = flux.constants();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    let mut witness = None;
    let mut taken = 0;
    let mut attempts = 0;
    while taken < samples {
        attempts += 1;
        if attempts > 100 * samples {
            return Err(Error::precondition(
                "weight is not positive on the audit box",
            ));
        }
        let t = rng.gen_range(-1.0..1.0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let om = w.omega(t, &x);
        if !(om.is_finite() && om > 0.0) {
            continue;
        }
        let xi = rng.gen_range(-10.0..10.0);
        let len = 10f64.powf(rng.gen_range(-3.0..3.0));
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dn < 1e-3 {
            continue;
        }
        let eta: Vec<f64> = dir.iter().map(|v| v / dn * len).collect();
        let a = flux.evaluate(t, &x, xi, &eta);
        let dot: f64 = a.iter().zip(&eta).map(|(a, e)| a * e).sum();
        let an = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let coercivity = dot / (om * len.powf(p));
        let bound = an / (om * len.powf(p - 1.0));
        taken += 1;
        c1 = c1.min(coercivity);
        c2 = c2.max(bound);
        let bad = coercivity < d1 * (1.0 - AUDIT_SLACK) || bound > d2 * (1.0 + AUDIT_SLACK);
        if bad && witness.is_none() {
            witness = Some(GrowthSample {
                t,
                x,
                xi,
                eta,
                coercivity,
                bound,
            });
        }
    }
    Ok(GrowthAudit {
        samples,
        c1,
        c2,
        declared: (d1, d2),
        pass: witness.is_none(),
        witness,
    })
}
