//! Architecture hyperparameters. Defaults follow the paper-scale layout;
//! [`ModelConfig::toy`] shrinks widths for desk-scale runs.

use serde::{Deserialize, Serialize};

use super::epsilon::EpsilonDist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentorSpec {
    /// Three stride-2 encoder convolutions.
    pub encoder_channels: Vec<usize>,
    pub latent_dim: usize,
    /// Channels of the (T/4, F/4) map the latent is projected to before the two
    /// stride-2 transposed convolutions.
    pub decoder_channels: usize,
    /// Standard-normal noise planes concatenated to the input.
    pub noise_dims: usize,
    pub leaky_slope: f64,
}

impl Default for AugmentorSpec {
    fn default() -> Self {
        Self {
            encoder_channels: vec![16, 32, 64],
            latent_dim: 128,
            decoder_channels: 32,
            noise_dims: 1,
            leaky_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorSpec {
    pub channels: Vec<usize>,
    pub strides: Vec<usize>,
    pub lstm_hidden: usize,
    pub attention_dim: usize,
    pub leaky_slope: f64,
}

impl Default for DiscriminatorSpec {
    fn default() -> Self {
        Self {
            channels: vec![16, 32, 64, 64],
            strides: vec![2, 2, 2, 2],
            lstm_hidden: 128,
            attention_dim: 64,
            leaky_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepresentationSpec {
    pub channels: Vec<usize>,
    pub strides: Vec<usize>,
    pub lstm_hidden: usize,
    pub attention_dim: usize,
    pub output_dim: usize,
    pub leaky_slope: f64,
}

impl Default for RepresentationSpec {
    fn default() -> Self {
        Self {
            channels: vec![16, 32, 64, 64, 64],
            strides: vec![2, 2, 2, 2, 2],
            lstm_hidden: 128,
            attention_dim: 64,
            output_dim: 128,
            leaky_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Frames per segment fed to the augmentation networks.
    pub frames: usize,
    pub n_mels: usize,
    pub augmentor: AugmentorSpec,
    pub discriminator: DiscriminatorSpec,
    pub representation: RepresentationSpec,
    pub epsilon: EpsilonDist,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            frames: 512,
            n_mels: 128,
            augmentor: AugmentorSpec::default(),
            discriminator: DiscriminatorSpec::default(),
            representation: RepresentationSpec::default(),
            epsilon: EpsilonDist::default(),
        }
    }
}

impl ModelConfig {
    pub fn toy(frames: usize, n_mels: usize) -> Self {
        Self {
            frames,
            n_mels,
            augmentor: AugmentorSpec {
                encoder_channels: vec![8, 16, 16],
                decoder_channels: 8,
                ..AugmentorSpec::default()
            },
            discriminator: DiscriminatorSpec {
                channels: vec![8, 16, 16, 16],
                strides: vec![2, 2, 2, 1],
                lstm_hidden: 32,
                attention_dim: 16,
                ..DiscriminatorSpec::default()
            },
            representation: RepresentationSpec {
                channels: vec![8, 16, 16, 16, 16],
                strides: vec![2, 2, 2, 1, 1],
                lstm_hidden: 64,
                attention_dim: 32,
                ..RepresentationSpec::default()
            },
            epsilon: EpsilonDist::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames % 8 != 0 || self.n_mels % 8 != 0 || self.frames == 0 || self.n_mels == 0 {
            return Err(Error::Config(format!(
                "segment {}x{} must have both sides divisible by 8",
                self.frames, self.n_mels
            )));
        }
        if self.augmentor.encoder_channels.len() != 3 {
            return Err(Error::Config("augmentor encoder needs exactly 3 convolution stages".into()));
        }
        if self.discriminator.channels.len() != 4 {
            return Err(Error::Config("discriminator needs exactly 4 convolution stages".into()));
        }
        if self.representation.channels.len() != 5 {
            return Err(Error::Config("representation learner needs exactly 5 convolution stages".into()));
        }
        EpsilonDist::new(self.epsilon.low, self.epsilon.high)?;
        Ok(())
    }
}
