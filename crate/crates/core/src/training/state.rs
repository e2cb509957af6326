use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabelKind;
use crate::error::Result;
use crate::losses::{LossWeights, VarianceMode};
use crate::models::{ModelBundle, ModelConfig};
use crate::nn::{Adam, AdamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub total_iterations: u64,
    pub batch_size: usize,
    pub weights: LossWeights,
    pub variance_mode: VarianceMode,
    pub label_kind: LabelKind,
    /// Capacity of the in-memory loss history ring buffer.
    pub history_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            total_iterations: 30_000,
            batch_size: 16,
            weights: LossWeights::default(),
            variance_mode: VarianceMode::Cosine,
            label_kind: LabelKind::Emotion,
            history_len: 100_000,
        }
    }
}

/// Losses recorded for one four-phase cycle (values before that phase's update).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleLosses {
    pub iteration: u64,
    pub rep: f64,
    pub disc: f64,
    pub var: f64,
    pub gen: f64,
    pub emo: f64,
    pub bal: f64,
    pub model: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RngStreams {
    pub data: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub eps: ChaCha8Rng,
}

impl RngStreams {
    pub fn from_seed(seed: u64) -> Self {
        let mut root = ChaCha8Rng::seed_from_u64(seed);
        let mut child = || ChaCha8Rng::from_rng(&mut root);
        Self {
            data: child(),
            noise: child(),
            eps: child(),
        }
    }
}

/// Everything needed to continue training bit-exactly.
#[derive(Debug)]
pub struct TrainState {
    pub config: TrainConfig,
    pub iteration: u64,
    pub bundle: ModelBundle,
    pub opt_augmentor: Adam,
    pub opt_discriminator: Adam,
    pub opt_representation: Adam,
    pub(crate) rng: RngStreams,
    pub history: VecDeque<CycleLosses>,
}

impl TrainState {
    /// Fresh state; `seed` drives parameter init and the data/noise/ε streams.
    pub fn new(model: ModelConfig, config: TrainConfig, seed: u64) -> Result<Self> {
        config.weights.validate()?;
        let bundle = ModelBundle::new(model, seed)?;
        let adam = config.adam;
        Ok(Self {
            iteration: 0,
            bundle,
            opt_augmentor: Adam::new(adam),
            opt_discriminator: Adam::new(adam),
            opt_representation: Adam::new(adam),
            rng: RngStreams::from_seed(seed ^ 0x5EED_0F_57AE),
            history: VecDeque::new(),
            config,
        })
    }

    pub fn push_history(&mut self, l: CycleLosses) {
        if self.config.history_len == 0 {
            return;
        }
        while self.history.len() >= self.config.history_len {
            self.history.pop_front();
        }
        self.history.push_back(l);
    }

    pub fn data_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng.data
    }

    /// Copies of the (noise, ε) streams, for replaying the draws of the next phase.
    pub fn augmentation_streams(&self) -> (ChaCha8Rng, ChaCha8Rng) {
        (self.rng.noise.clone(), self.rng.eps.clone())
    }
}
