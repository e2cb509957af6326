use candle_core::{Module, Tensor};
use rand::Rng;

use super::encoder::ConvSeqEncoder;
use super::spec::ModelConfig;
use crate::error::Result;
use crate::nn::{sigmoid, Linear, ParamSet};

/// Scores whether a segment is original (→ 1) or augmented (→ 0).
#[derive(Debug)]
pub struct Discriminator {
    pub params: ParamSet,
    body: ConvSeqEncoder,
    head: Linear,
}

impl Discriminator {
    pub fn new(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let spec = &cfg.discriminator;
        let mut ps = ParamSet::new("discriminator");
        let body = ConvSeqEncoder::new(
            &mut ps,
            cfg.frames,
            cfg.n_mels,
            &spec.channels,
            &spec.strides,
            spec.lstm_hidden,
            spec.attention_dim,
            spec.leaky_slope,
            rng,
        )?;
        let head = Linear::new(&mut ps, "head", spec.lstm_hidden, 1, rng)?;
        Ok(Self { params: ps, body, head })
    }

    /// Pre-sigmoid scores, shape (B,).
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        self.body.check_input(x)?;
        Ok(self.head.forward(&self.body.forward(x)?)?.squeeze(1)?)
    }

    /// Probabilities in (0, 1), shape (B,).
    pub fn discriminate(&self, x: &Tensor) -> Result<Tensor> {
        Ok(sigmoid(&self.logits(x)?)?)
    }
}
