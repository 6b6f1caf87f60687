//! Serializable descriptions of the built-in metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{dot, Aabb, GaussianWell, GaussianWells, Harmonic, Linear, MetricField, Zero};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `V ≡ 0` with an energy, or `h ≡ 0` without one.
    Flat {},
    /// `h(q) = −α direction·q`; no energy.
    LinearExponent {
        alpha: f64,
        direction: Vec<f64>,
    },
    /// `V(q) = k/2 |q − center|²`.
    Harmonic {
        k: f64,
        center: Vec<f64>,
    },
    GaussianWells {
        wells: Vec<GaussianWell>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    pub domain: Aabb,
    pub potential: PotentialConfig,
}

impl MetricConfig {
    pub fn build(&self) -> Result<MetricField> {
        let dim = self.dim;
        if dim < 2 {
            return Err(Error::invalid("metric.dim", "must be at least 2"));
        }
        if self.domain.dim() != dim {
            return Err(Error::invalid(
                "metric.domain",
                format!("needs {dim} coordinates"),
            ));
        }
        let check_len = |name: &'static str, v: &[f64]| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("needs {dim} coordinates, got {}", v.len()),
                ))
            }
        };
        let energy = |kind: &str| {
            self.energy.ok_or_else(|| {
                Error::invalid(
                    "metric.energy",
                    format!("the `{kind}` potential needs an energy"),
                )
            })
        };
        let domain = self.domain.clone();
        match &self.potential {
            PotentialConfig::Flat {} => match self.energy {
                Some(e) => MetricField::from_potential(Zero { dim }, e, domain),
                None => MetricField::direct(Zero { dim }, domain),
            },
            PotentialConfig::LinearExponent { alpha, direction } => {
                check_len("metric.potential.direction", direction)?;
                if self.energy.is_some() {
                    return Err(Error::invalid(
                        "metric.energy",
                        "`linear_exponent` defines h directly and takes no energy",
                    ));
                }
                let norm = dot(direction, direction).sqrt();
                if !(norm > 0.0) {
                    return Err(Error::invalid(
                        "metric.potential.direction",
                        "must be nonzero",
                    ));
                }
                let unit: Vec<f64> = direction.iter().map(|d| d / norm).collect();
                MetricField::direct(Linear::exponent(*alpha, &unit), domain)
            }
            PotentialConfig::Harmonic { k, center } => {
                check_len("metric.potential.center", center)?;
                let harmonic = Harmonic {
                    stiffness: *k,
                    center: center.clone(),
                };
                MetricField::from_potential(harmonic, energy("harmonic")?, domain)
            }
            PotentialConfig::GaussianWells { wells } => {
                for w in wells {
                    check_len("metric.potential.wells.center", &w.center)?;
                    if !(w.width > 0.0) {
                        return Err(Error::invalid(
                            "metric.potential.wells.width",
                            "must be positive",
                        ));
                    }
                }
                let field = GaussianWells {
                    dim,
                    wells: wells.clone(),
                };
                MetricField::from_potential(field, energy("gaussian_wells")?, domain)
            }
        }
    }
}
