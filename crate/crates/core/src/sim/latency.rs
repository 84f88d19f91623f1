use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::Nclo;

/// Message latency applied to every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatencyModel {
    Perfect,
    /// Integer delay drawn uniformly from `[0, ub]`.
    Uniform { ub: Nclo },
    /// `Poisson(in_transit) * m`, where `in_transit` counts undelivered
    /// messages at send time.
    Poisson { m: f64 },
}

impl LatencyModel {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            LatencyModel::Poisson { m } if !(m >= 0.0 && m.is_finite()) => {
                Err(format!("poisson scale must be a finite value >= 0, got {m}"))
            }
            _ => Ok(()),
        }
    }
}

pub fn sample_delay(model: &LatencyModel, in_transit: usize, rng: &mut impl Rng) -> Nclo {
    match *model {
        LatencyModel::Perfect => 0,
        LatencyModel::Uniform { ub } => rng.random_range(0..=ub),
        LatencyModel::Poisson { m } => {
            if m == 0.0 || in_transit == 0 {
                return 0;
            }
            let draw: f64 = Poisson::new(in_transit as f64)
                .expect("positive rate")
                .sample(rng);
            (draw * m).round() as Nclo
        }
    }
}

impl fmt::Display for LatencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyModel::Perfect => write!(f, "none"),
            LatencyModel::Uniform { ub } => write!(f, "uniform:{ub}"),
            LatencyModel::Poisson { m } => write!(f, "poisson:{m}"),
        }
    }
}

impl FromStr for LatencyModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let model = match (kind, arg) {
            ("none" | "perfect", None) => LatencyModel::Perfect,
            ("uniform", Some(ub)) => LatencyModel::Uniform {
                ub: ub.parse().map_err(|e| format!("bad uniform bound {ub:?}: {e}"))?,
            },
            ("poisson", Some(m)) => LatencyModel::Poisson {
                m: m.parse().map_err(|e| format!("bad poisson scale {m:?}: {e}"))?,
            },
            _ => {
                return Err(format!(
                    "unknown latency {s:?}; expected none, uniform:UB or poisson:M"
                ))
            }
        };
        model.validate()?;
        Ok(model)
    }
}
