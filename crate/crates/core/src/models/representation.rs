use candle_core::{Module, Tensor};
use rand::Rng;

use super::encoder::ConvSeqEncoder;
use super::spec::ModelConfig;
use crate::error::Result;
use crate::nn::{Linear, ParamSet};

/// Triplet-trained emotion embedding network.
#[derive(Debug)]
pub struct RepresentationLearner {
    pub params: ParamSet,
    body: ConvSeqEncoder,
    head: Linear,
}

impl RepresentationLearner {
    pub fn new(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let spec = &cfg.representation;
        let mut ps = ParamSet::new("representation");
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
        let head = Linear::new(&mut ps, "head", spec.lstm_hidden, spec.output_dim, rng)?;
        Ok(Self { params: ps, body, head })
    }

    /// (B, 1, T, F) → (B, output_dim)
    pub fn represent(&self, x: &Tensor) -> Result<Tensor> {
        self.body.check_input(x)?;
        Ok(self.head.forward(&self.body.forward(x)?)?)
    }
}
