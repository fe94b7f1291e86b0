use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{cylinder_integral, integrate_box, Integral, QuadratureSpec};
use super::Weight;
use crate::error::{Error, Result};
use crate::geometry::{intrinsic_height, Cylinder};

/// One cylinder's contribution to a Muckenhoupt estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuckenhouptEntry {
    pub cylinder: Cylinder,
    /// `(⨏ω^α)^{1/α} (⨏σ^r)^{(p−1)/r}`, `None` when inadmissible
    pub product: Option<f64>,
    /// `‖ω‖_{L^α} ‖σ‖_{L^r}^{p−1}` with normalized volumes
    pub norm_product: Option<f64>,
    pub relative_error: f64,
    pub inadmissible: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuckenhouptReport {
    pub constant: f64,
    pub worst_cylinder: Option<Cylinder>,
    pub samples: usize,
    pub converged: bool,
    pub entries: Vec<MuckenhouptEntry>,
}

impl MuckenhouptReport {
    pub fn inadmissible(&self) -> impl Iterator<Item = &MuckenhouptEntry> {
        self.entries.iter().filter(|e| e.inadmissible.is_some())
    }
}

fn weighted_power_integral(
    w: &Weight,
    q: &Cylinder,
    spec: &QuadratureSpec,
    dual: bool,
) -> Result<Integral> {
    let e = w.exponents;
    let f = |t: f64, x: &[f64]| {
        if dual {
            w.sigma(t, x).powf(e.r)
        } else {
            w.omega(t, x).powf(e.alpha)
        }
    };
    let dist = |t: f64, x: &[f64]| w.distance_to_singular(t, x);
    let clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)> = w.singular.is_some().then_some(&dist);
    cylinder_integral(&f, q, spec, clip)
}

fn entry(w: &Weight, q: &Cylinder, spec: &QuadratureSpec) -> MuckenhouptEntry {
    let e = w.exponents;
    let omega = weighted_power_integral(w, q, spec, false);
    let sigma = weighted_power_integral(w, q, spec, true);
    match (omega, sigma) {
        (Ok(a), Ok(b)) => {
            let fo = a.average().powf(1.0 / e.alpha);
            let fs = b.average().powf((e.p - 1.0) / e.r);
            let product = fo * fs;
            let rel = a.average_error() / a.average().abs().max(f64::MIN_POSITIVE) / e.alpha
                + b.average_error() / b.average().abs().max(f64::MIN_POSITIVE) * (e.p - 1.0) / e.r;
            let vol = q.normalized_volume();
            let norm_product = product * vol.powf(1.0 / e.alpha + (e.p - 1.0) / e.r);
            MuckenhouptEntry {
                cylinder: q.clone(),
                product: Some(product),
                norm_product: Some(norm_product),
                relative_error: rel,
                inadmissible: None,
            }
        }
        (a, b) => {
            let which = if a.is_err() { "omega^alpha" } else { "sigma^r" };
            let reason = a
                .err()
                .or(b.err())
                .map(|e| e.to_string())
                .unwrap_or_default();
            MuckenhouptEntry {
                cylinder: q.clone(),
                product: None,
                norm_product: None,
                relative_error: f64::INFINITY,
                inadmissible: Some(format!("{which}: {reason}")),
            }
        }
    }
}

/// Sup over `family` of the averaged Muckenhoupt product. Cylinders where either
/// power fails to integrate are reported as inadmissible and excluded from the sup.
pub fn muckenhoupt_constant(
    w: &Weight,
    family: &[Cylinder],
    spec: &QuadratureSpec,
) -> Result<MuckenhouptReport> {
    if family.is_empty() {
        return Err(Error::precondition("empty cylinder family"));
    }
    let entries: Vec<MuckenhouptEntry> = family.par_iter().map(|q| entry(w, q, spec)).collect();
    let mut constant = f64::NEG_INFINITY;
    let mut worst = None;
    let mut converged = true;
    for e in &entries {
        match e.product {
            Some(v) => {
                if v > constant {
                    constant = v;
                    worst = Some(e.cylinder.clone());
                }
                converged &= e.relative_error <= 1e-3;
            }
            None => converged = false,
        }
    }
    Ok(MuckenhouptReport {
        constant,
        worst_cylinder: worst,
        samples: entries.iter().filter(|e| e.product.is_some()).count(),
        converged,
        entries,
    })
}

/// Intrinsic cylinders for every `(t0, x0) × R` combination.
pub fn intrinsic_family(
    w: &Weight,
    centers: &[(f64, Vec<f64>)],
    radii: &[f64],
    constant: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<Cylinder>> {
    let jobs: Vec<(&(f64, Vec<f64>), f64)> = centers
        .iter()
        .flat_map(|c| radii.iter().map(move |&r| (c, r)))
        .collect();
    jobs.par_iter()
        .map(|((t0, x0), r)| {
            intrinsic_height(w, *t0, x0, *r, constant, spec).map(|h| h.cylinder(*t0, x0, *r))
        })
        .collect()
}

/// Axis-aligned box `[lo, hi]` in space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SubBox {
    pub fn cube(center: &[f64], half: f64) -> SubBox {
        SubBox {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn within(&self, other: &SubBox) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| *a >= *b - 1e-14)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| *a <= *b + 1e-14)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AInfinityEstimate {
    /// smallest `C` making `v(E) <= C (|E|/|K|)^δ v(K)` hold on every sample
    pub c: f64,
    /// fitted exponent clamped to `(0, 1]`
    pub delta: f64,
    /// raw least-squares fit of `ln(v(E)/v(K))` against `ln(|E|/|K|)`
    pub fit_c: f64,
    pub fit_delta: f64,
    /// samples lying above the least-squares bound
    pub violations: Vec<usize>,
    pub flagged: bool,
    pub witness: Option<SubBox>,
    pub ratios: Vec<(f64, f64)>,
}

const MIN_DELTA: f64 = 1e-6;

/// Least-squares `A∞` fit over the supplied subsets of `k`.
pub fn a_infinity_estimate(
    w: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: &SubBox,
    subsets: &[SubBox],
    spec: &QuadratureSpec,
) -> Result<AInfinityEstimate> {
    if subsets.is_empty() {
        return Err(Error::precondition("no subsets"));
    }
    if let Some(bad) = subsets
        .iter()
        .find(|e| !e.within(k) || !(e.measure() > 0.0))
    {
        return Err(Error::precondition(format!(
            "subset {bad:?} is not a positive-measure part of K"
        )));
    }
    let vk = integrate_box(w, &k.lo, &k.hi, spec, None, "K")?.integral;
    let mk = k.measure();
    let ratios: Vec<(f64, f64)> = subsets
        .iter()
        .map(|e| {
            integrate_box(w, &e.lo, &e.hi, spec, None, "E")
                .map(|v| (e.measure() / mk, v.integral / vk))
        })
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = ratios.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.1.ln()).collect();
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-24) {
        return Err(Error::DegenerateFit(
            "all subsets have the same measure".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let fit_delta = sxy / sxx;
    let fit_log_c = my - fit_delta * mx;

    let violations: Vec<usize> = xs
        .iter()
        .zip(&ys)
        .enumerate()
        .filter(|(_, (x, y))| **y > fit_log_c + fit_delta * **x + 1e-9)
        .map(|(i, _)| i)
        .collect();
    let witness = violations
        .iter()
        .min_by(|a, b| ratios[**a].0.total_cmp(&ratios[**b].0))
        .map(|&i| subsets[i].clone());

    let delta = fit_delta.clamp(MIN_DELTA, 1.0);
    let log_c = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - delta * x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AInfinityEstimate {
        c: log_c.exp(),
        delta,
        fit_c: fit_log_c.exp(),
        fit_delta,
        flagged: !violations.is_empty() || fit_delta <= 0.0,
        violations,
        witness,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingEntry {
    pub delta1: f64,
    /// largest `C2` with `∬_inner ω^e >= C2 (|inner|/|outer|)^{δ1} ∬_outer ω^e`
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub mass_ratio: f64,
    pub volume_ratio: f64,
    pub entries: Vec<DoublingEntry>,
}

pub fn doubling_estimate(
    w: &Weight,
    inner: &Cylinder,
    outer: &Cylinder,
    exponent: f64,
    delta1_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<DoublingReport> {
    if !outer.contains(inner) {
        return Err(Error::precondition(format!(
            "{inner} is not contained in {outer}"
        )));
    }
    let f = |t: f64, x: &[f64]| w.omega(t, x).powf(exponent);
    let dist = |t: f64, x: &[f64]| w.distance_to_singular(t, x);
    let clip: Option<&(dyn Fn(f64, &[f64]) -> f64 + Sync)> = w.singular.is_some().then_some(&dist);
    let mi = cylinder_integral(&f, inner, spec, clip)?.integral;
    let mo = cylinder_integral(&f, outer, spec, clip)?.integral;
    let mass_ratio = mi / mo;
    let volume_ratio = inner.volume() / outer.volume();
    let entries = delta1_grid
        .iter()
        .map(|&d| DoublingEntry {
            delta1: d,
            c2: mass_ratio / volume_ratio.powf(d),
        })
        .collect();
    Ok(DoublingReport {
        mass_ratio,
        volume_ratio,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Exponents, WeightSpec};

    fn exps() -> Exponents {
        Exponents::admissible(2.0, 1, 4.0, 2.0).unwrap()
    }

    #[test]
    fn unit_weight_constant_is_one() {
        let w = Weight::unit(exps());
        let spec = QuadratureSpec::midpoint(3);
        let centers: Vec<(f64, Vec<f64>)> =
            (0..5).map(|i| (i as f64, vec![i as f64 - 2.0])).collect();
        let fam = intrinsic_family(&w, &centers, &[0.1, 0.5, 1.0], 1.0, &spec).unwrap();
        let rep = muckenhoupt_constant(&w, &fam, &spec).unwrap();
        assert!((rep.constant - 1.0).abs() <= 1e-12);
        assert!(rep.converged);
        assert_eq!(rep.samples, 15);
    }

    #[test]
    fn nonintegrable_dual_is_inadmissible() {
        // σ^r = |x|^{-2γ} with γ = 0.75: exponent 1.5 >= n
        let w = WeightSpec::PowerX { gamma: 0.75 }.build(exps()).unwrap();
        let q = Cylinder::new(1.0, vec![0.0], 0.5, 0.5).unwrap();
        let ok = Cylinder::new(1.0, vec![2.0], 0.5, 0.5).unwrap();
        let rep = muckenhoupt_constant(&w, &[q, ok], &QuadratureSpec::midpoint(6)).unwrap();
        assert_eq!(rep.inadmissible().count(), 1);
        assert!(rep.entries[0]
            .inadmissible
            .as_deref()
            .unwrap()
            .starts_with("sigma"));
        assert!(rep.constant.is_finite() && rep.constant >= 1.0);
    }

    #[test]
    fn muckenhoupt_product_is_at_least_one() {
        let w = WeightSpec::Radial { beta: 1.0 }.build(exps()).unwrap();
        let fam = vec![
            Cylinder::new(2.0, vec![0.0], 0.5, 0.4).unwrap(),
            Cylinder::new(1.0, vec![1.0], 1.0, 0.9).unwrap(),
        ];
        let rep = muckenhoupt_constant(&w, &fam, &QuadratureSpec::midpoint(5)).unwrap();
        for e in &rep.entries {
            assert!(e.product.unwrap() >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn a_infinity_unit_weight_is_exact() {
        let k = SubBox::cube(&[0.0], 1.0);
        let subs: Vec<SubBox> = [0.1, 0.25, 0.5, 0.9]
            .iter()
            .map(|&h| SubBox::cube(&[0.05], h * 0.9))
            .collect();
        let est = a_infinity_estimate(&|_| 1.0, &k, &subs, &QuadratureSpec::midpoint(3)).unwrap();
        assert!((est.delta - 1.0).abs() < 1e-12);
        assert!((est.c - 1.0).abs() < 1e-12);
        assert!(!est.flagged);
    }

    #[test]
    fn a_infinity_rejects_degenerate_fit() {
        let k = SubBox::cube(&[0.0], 1.0);
        let subs = vec![SubBox::cube(&[0.0], 0.5), SubBox::cube(&[0.2], 0.5)];
        let err =
            a_infinity_estimate(&|_| 1.0, &k, &subs, &QuadratureSpec::midpoint(3)).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(_)));
    }

    #[test]
    fn doubling_identity_and_unit_cases() {
        let w = Weight::unit(exps());
        let outer = Cylinder::new(0.0, vec![0.0], 1.0, 1.0).unwrap();
        let inner = Cylinder::new(0.0, vec![0.0], 0.5, 0.5).unwrap();
        let spec = QuadratureSpec::midpoint(3);
        let r = doubling_estimate(&w, &inner, &outer, 2.0, &[1.0], &spec).unwrap();
        assert!((r.volume_ratio - 0.25).abs() < 1e-15);
        assert!((r.entries[0].c2 - 1.0).abs() < 1e-12);
        let same = doubling_estimate(&w, &outer, &outer, 2.0, &[0.3, 1.0, 2.0], &spec).unwrap();
        assert!(same.entries.iter().all(|e| (e.c2 - 1.0).abs() < 1e-12));
        assert!(doubling_estimate(&w, &outer, &inner, 2.0, &[1.0], &spec).is_err());
    }
}
