use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First Dirichlet eigenpair of `(|φ′|^{p−2} φ′)′ = −λ (p−1) |φ|^{p−2} φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub p: f64,
    pub lambda: f64,
    pub x: Vec<f64>,
    /// normalized to `max φ = 1`
    pub phi: Vec<f64>,
}

impl EigenPair {
    /// Piecewise-linear interpolation, zero outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = (self.x[0], self.x[self.x.len() - 1]);
        if !(x > a && x < b) {
            return 0.0;
        }
        let h = (b - a) / (self.x.len() - 1) as f64;
        let s = (x - a) / h;
        let i = (s.floor() as usize).min(self.x.len() - 2);
        let f = s - i as f64;
        (1.0 - f) * self.phi[i] + f * self.phi[i + 1]
    }
}

/// `π_p = 2π / (p sin(π/p))`; the first eigenvalue on an interval of length `L`
/// is `(π_p / L)^p`.
pub fn pi_p(p: f64) -> f64 {
    2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin())
}

/// Shoot from the left end with `φ = 0`, `φ′ = 1` across half the domain and
/// bisect on `λ` until the first-integral variable `w = |φ′|^{p−2} φ′` vanishes
/// at the midpoint; the right half is the mirror image.
pub fn p_eigenpair_1d(p: f64, domain: (f64, f64), tol: f64) -> Result<EigenPair> {
    p_eigenpair_1d_with(p, domain, tol, 1 << 14)
}

/// As [`p_eigenpair_1d`] with `intervals` RK4 steps over the whole domain.
pub fn p_eigenpair_1d_with(
    p: f64,
    domain: (f64, f64),
    tol: f64,
    intervals: usize,
) -> Result<EigenPair> {
    let (a, b) = domain;
    if !(p > 1.0) {
        return Err(Error::precondition(format!("p must exceed 1, got {p}")));
    }
    if !(b > a) || !(tol > 0.0) || intervals < 4 {
        return Err(Error::precondition(
            "need a < b, tol > 0 and at least 4 intervals",
        ));
    }
    let half_steps = intervals.div_ceil(2);
    let h = 0.5 * (b - a) / half_steps as f64;

    let rhs = |lambda: f64, phi: f64, w: f64| -> (f64, f64) {
        let dphi = w.abs().powf(1.0 / (p - 1.0)) * w.signum();
        let dw = if phi == 0.0 {
            0.0
        } else {
            -lambda * (p - 1.0) * phi.abs().powf(p - 2.0) * phi
        };
        (dphi, dw)
    };
    let shoot = |lambda: f64, record: bool| -> (f64, Vec<f64>) {
        let (mut phi, mut w) = (0.0, 1.0);
        let mut path = Vec::new();
        if record {
            path.reserve(half_steps + 1);
            path.push(phi);
        }
        for _ in 0..half_steps {
            let k1 = rhs(lambda, phi, w);
            let k2 = rhs(lambda, phi + 0.5 * h * k1.0, w + 0.5 * h * k1.1);
            let k3 = rhs(lambda, phi + 0.5 * h * k2.0, w + 0.5 * h * k2.1);
            let k4 = rhs(lambda, phi + h * k3.0, w + h * k3.1);
            phi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if record {
                path.push(phi);
            }
        }
        (w, path)
    };

    let mut lo = 0.0;
    let mut hi = (2.0 / (b - a)).powf(p);
    let mut doublings = 0;
    while shoot(hi, false).0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::Shooting(format!(
                "no sign change of w(mid) up to lambda = {hi:e}"
            )));
        }
    }
    let mut iterations = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if shoot(mid, false).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Shooting("bisection did not settle".into()));
        }
    }
    let lambda = 0.5 * (lo + hi);
    let (_, left) = shoot(lambda, true);
    let peak = left[half_steps];
    if !(peak > 0.0) {
        return Err(Error::Shooting(format!(
            "non-positive profile at lambda = {lambda}"
        )));
    }
    let mut phi: Vec<f64> = left.iter().map(|v| v / peak).collect();
    let mirror: Vec<f64> = phi[..half_steps].iter().rev().copied().collect();
    phi.extend(mirror);
    let total = 2 * half_steps;
    let x = (0..=total)
        .map(|i| if i == total { b } else { a + i as f64 * h })
        .collect();
    Ok(EigenPair { p, lambda, x, phi })
}
