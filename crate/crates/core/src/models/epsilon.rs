use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform distribution of the augmentation intensity ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonDist {
    pub low: f64,
    pub high: f64,
}

impl Default for EpsilonDist {
    fn default() -> Self {
        Self { low: 0.05, high: 0.3 }
    }
}

impl EpsilonDist {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && low < high && high.is_finite()) {
            return Err(Error::Config(format!("epsilon bounds must satisfy 0 < low < high, got ({low}, {high})")));
        }
        Ok(Self { low, high })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.low..=self.high)
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

pub fn sample_epsilon(rng: &mut impl Rng) -> f64 {
    EpsilonDist::default().sample(rng)
}
