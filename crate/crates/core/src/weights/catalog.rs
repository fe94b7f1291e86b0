use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Exponents;
use crate::error::{Error, Result};

pub type WeightFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Where a catalog weight vanishes or blows up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularSet {
    /// `{x = 0} × R`
    SpatialOrigin,
    /// `R^n × {t = 0}`
    TimeZero,
    /// the point `(0, 0)`
    SpaceTimeOrigin,
    /// union of the spatial and temporal planes
    Axes,
}

impl SingularSet {
    pub fn distance(&self, t: f64, x: &[f64]) -> f64 {
        let rx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            SingularSet::SpatialOrigin => rx,
            SingularSet::TimeZero => t.abs(),
            SingularSet::SpaceTimeOrigin => (rx * rx + t * t).sqrt(),
            SingularSet::Axes => rx.min(t.abs()),
        }
    }
}

/// A positive weight together with the exponents it is used with.
#[derive(Clone)]
pub struct Weight {
    pub label: String,
    pub exponents: Exponents,
    pub singular: Option<SingularSet>,
    omega: WeightFn,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("label", &self.label)
            .field("exponents", &self.exponents)
            .field("singular", &self.singular)
            .finish()
    }
}

impl Weight {
    pub fn new(
        label: impl Into<String>,
        exponents: Exponents,
        singular: Option<SingularSet>,
        omega: WeightFn,
    ) -> Self {
        Weight {
            label: label.into(),
            exponents,
            singular,
            omega,
        }
    }

    pub fn unit(exponents: Exponents) -> Self {
        WeightSpec::Constant { value: 1.0 }
            .build(exponents)
            .expect("unit weight")
    }

    #[inline]
    pub fn omega(&self, t: f64, x: &[f64]) -> f64 {
        (self.omega)(t, x)
    }

    #[inline]
    pub fn sigma(&self, t: f64, x: &[f64]) -> f64 {
        self.omega(t, x).powf(self.exponents.dual_power())
    }

    pub fn omega_fn(&self) -> WeightFn {
        Arc::clone(&self.omega)
    }

    /// `λ ω` with the same label suffixed by the factor.
    pub fn scaled(&self, lambda: f64) -> Weight {
        let inner = Arc::clone(&self.omega);
        Weight {
            label: format!("{}*{lambda}", self.label),
            exponents: self.exponents,
            singular: self.singular,
            omega: Arc::new(move |t, x| lambda * inner(t, x)),
        }
    }

    pub fn with_exponents(&self, exponents: Exponents) -> Weight {
        Weight {
            exponents,
            ..self.clone()
        }
    }

    pub fn distance_to_singular(&self, t: f64, x: &[f64]) -> f64 {
        self.singular
            .map(|s| s.distance(t, x))
            .unwrap_or(f64::INFINITY)
    }
}

/// Serializable description of a catalog weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    /// `ω ≡ value`
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `ω = |x|^γ`
    PowerX { gamma: f64 },
    /// `ω = (|x|² + t²)^{β/2}`
    Radial {
        #[serde(default = "one")]
        beta: f64,
    },
    /// `ω = |t|^θ`
    PowerT { theta: f64 },
    /// `ω = |x|^γ |t|^θ`
    Product { gamma: f64, theta: f64 },
    /// A weight registered by label in a [`WeightRegistry`].
    Custom {
        label: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant { value } => format!("constant(c={value})"),
            WeightSpec::PowerX { gamma } => format!("power-x(gamma={gamma})"),
            WeightSpec::Radial { beta } => format!("radial(beta={beta})"),
            WeightSpec::PowerT { theta } => format!("power-t(theta={theta})"),
            WeightSpec::Product { gamma, theta } => {
                format!("product(gamma={gamma},theta={theta})")
            }
            WeightSpec::Custom { label, .. } => label.clone(),
        }
    }

    /// Builds a catalog weight. Custom weights need [`WeightRegistry::build`].
    pub fn build(&self, exponents: Exponents) -> Result<Weight> {
        self.build_with(exponents, &WeightRegistry::default())
    }

    pub fn build_with(&self, exponents: Exponents, registry: &WeightRegistry) -> Result<Weight> {
        let label = self.label();
        let weight = match *self {
            WeightSpec::Constant { value } => {
                if !(value > 0.0) {
                    return Err(Error::Config(format!(
                        "constant weight must be > 0, got {value}"
                    )));
                }
                Weight::new(label, exponents, None, Arc::new(move |_, _| value))
            }
            WeightSpec::PowerX { gamma } => Weight::new(
                label,
                exponents,
                (gamma != 0.0).then_some(SingularSet::SpatialOrigin),
                Arc::new(move |_, x| norm(x).powf(gamma)),
            ),
            WeightSpec::Radial { beta } => Weight::new(
                label,
                exponents,
                (beta != 0.0).then_some(SingularSet::SpaceTimeOrigin),
                Arc::new(move |t, x| {
                    let r2 = x.iter().map(|v| v * v).sum::<f64>() + t * t;
                    r2.powf(0.5 * beta)
                }),
            ),
            WeightSpec::PowerT { theta } => Weight::new(
                label,
                exponents,
                (theta != 0.0).then_some(SingularSet::TimeZero),
                Arc::new(move |t, _| t.abs().powf(theta)),
            ),
            WeightSpec::Product { gamma, theta } => Weight::new(
                label,
                exponents,
                Some(SingularSet::Axes),
                Arc::new(move |t, x| norm(x).powf(gamma) * t.abs().powf(theta)),
            ),
            WeightSpec::Custom {
                ref label,
                ref params,
            } => return registry.build(label, params, exponents),
        };
        Ok(weight)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

type Constructor = Arc<dyn Fn(&BTreeMap<String, f64>) -> WeightFn + Send + Sync>;

/// User-defined weights addressed by label from configuration files.
#[derive(Clone, Default)]
pub struct WeightRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl WeightRegistry {
    pub fn register(
        &mut self,
        label: impl Into<String>,
        constructor: impl Fn(&BTreeMap<String, f64>) -> WeightFn + Send + Sync + 'static,
    ) {
        self.entries.insert(label.into(), Arc::new(constructor));
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        label: &str,
        params: &BTreeMap<String, f64>,
        exponents: Exponents,
    ) -> Result<Weight> {
        let ctor = self
            .entries
            .get(label)
            .ok_or_else(|| Error::Config(format!("no weight registered under '{label}'")))?;
        Ok(Weight::new(label, exponents, None, ctor(params)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps() -> Exponents {
        Exponents::admissible(2.0, 1, 4.0, 2.0).unwrap()
    }

    fn catalog() -> Vec<WeightSpec> {
        vec![
            WeightSpec::Constant { value: 1.0 },
            WeightSpec::PowerX { gamma: 0.3 },
            WeightSpec::Radial { beta: 1.0 },
            WeightSpec::PowerT { theta: 0.5 },
            WeightSpec::Product {
                gamma: 0.2,
                theta: 0.5,
            },
        ]
    }

    #[test]
    fn dual_weight_identity_off_singular_sets() {
        for p in [1.5, 2.0, 3.0] {
            let e = Exponents::admissible(p, 1, 8.0, 4.0).unwrap();
            for spec in catalog() {
                let w = spec.build(e).unwrap();
                for &(t, x) in &[(0.3, 0.7), (-1.2, 0.05), (2.0, -3.0), (0.01, 1.0)] {
                    let s = w.sigma(t, &[x]);
                    let o = w.omega(t, &[x]);
                    let id = s * o.powf(e.p_prime / e.p);
                    assert!((id - 1.0).abs() <= 1e-10, "{} at ({t},{x}): {id}", w.label);
                }
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        for spec in catalog() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: WeightSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn registry_builds_custom_weights() {
        let mut reg = WeightRegistry::default();
        reg.register("bump", |params| {
            let a = params.get("a").copied().unwrap_or(1.0);
            Arc::new(move |_t, x: &[f64]| 1.0 + a * x[0] * x[0])
        });
        let spec = WeightSpec::Custom {
            label: "bump".into(),
            params: [("a".to_string(), 2.0)].into_iter().collect(),
        };
        let w = spec.build_with(exps(), &reg).unwrap();
        assert_eq!(w.omega(0.0, &[1.0]), 3.0);
        assert!(spec.build(exps()).is_err());
    }

    #[test]
    fn scaled_weight_multiplies() {
        let w = WeightSpec::Radial { beta: 1.0 }.build(exps()).unwrap();
        let s = w.scaled(3.0);
        assert!((s.omega(3.0, &[4.0]) - 15.0).abs() < 1e-12);
    }
}
