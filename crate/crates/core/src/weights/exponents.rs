use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Why an exponent tuple was rejected.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum Rejection {
    #[error("p = {p} must exceed 1")]
    GrowthExponent { p: f64 },
    #[error("dimension must be >= 1")]
    Dimension,
    #[error("alpha = {alpha} is not > (n+p)/p = {bound}")]
    AlphaTooSmall { alpha: f64, bound: f64 },
    #[error("r = {r} is not > n(p-1)/p = {bound}")]
    DualTooSmall { r: f64, bound: f64 },
    #[error("n(p-1)/(p r) + (n+p)/(p alpha) = {value} is not < 1")]
    Combined { value: f64 },
}

/// Validated exponents `(p, n, α, r)` with the derived Moser exponent `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
    pub p_prime: f64,
    pub l: f64,
}

fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

impl Exponents {
    /// Checks the three admissibility inequalities in order and computes `L`.
    pub fn admissible(p: f64, n: usize, alpha: f64, r: f64) -> Result<Self, Rejection> {
        if !(p > 1.0) {
            return Err(Rejection::GrowthExponent { p });
        }
        if n == 0 {
            return Err(Rejection::Dimension);
        }
        let nf = n as f64;
        let alpha_bound = (nf + p) / p;
        if !(alpha > alpha_bound) {
            return Err(Rejection::AlphaTooSmall {
                alpha,
                bound: alpha_bound,
            });
        }
        let r_bound = nf * (p - 1.0) / p;
        if !(r > r_bound) {
            return Err(Rejection::DualTooSmall { r, bound: r_bound });
        }
        let value = nf * (p - 1.0) / (p * r) + (nf + p) / (p * alpha);
        if !(value < 1.0) {
            return Err(Rejection::Combined { value });
        }
        let p_prime = conjugate(p);
        let l =
            p / (nf + p) + 1.0 / (p * conjugate(alpha)) + nf / (p_prime * (nf + p) * conjugate(r));
        Ok(Exponents {
            p,
            n,
            alpha,
            r,
            p_prime,
            l,
        })
    }

    /// `L − 1` from the definition of `L`.
    pub fn l_minus_one(&self) -> f64 {
        self.l - 1.0
    }

    /// `L − 1 = (1 − (n+p)/(pα) − n(p−1)/(pr)) / (n+p)`.
    pub fn l_minus_one_closed(&self) -> f64 {
        let nf = self.n as f64;
        let p = self.p;
        (1.0 - (nf + p) / (p * self.alpha) - nf * (p - 1.0) / (p * self.r)) / (nf + p)
    }

    pub fn alpha_prime(&self) -> f64 {
        conjugate(self.alpha)
    }

    /// Exponent `−p′/p = −1/(p−1)` that maps `ω` to `σ`.
    pub fn dual_power(&self) -> f64 {
        -1.0 / (self.p - 1.0)
    }
}
