use candle_core::{Module, Tensor};
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{leaky_relu, AttentionPool, Conv2d, Lstm, ParamSet};

/// Convolution stack → LSTM over frames → attention pooling.
///
/// Shared by the discriminator and the representation learner.
#[derive(Debug, Clone)]
pub struct ConvSeqEncoder {
    convs: Vec<Conv2d>,
    lstm: Lstm,
    attention: AttentionPool,
    slope: f64,
    pub(crate) frames: usize,
    pub(crate) bands: usize,
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

impl ConvSeqEncoder {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParamSet,
        frames: usize,
        bands: usize,
        channels: &[usize],
        strides: &[usize],
        lstm_hidden: usize,
        attention_dim: usize,
        slope: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if channels.len() != strides.len() || channels.is_empty() {
            return Err(Error::Config("conv channels and strides must be non-empty and of equal length".into()));
        }
        let mut convs = Vec::new();
        let (mut c_in, mut t, mut f) = (1, frames, bands);
        for (i, (&c, &s)) in channels.iter().zip(strides).enumerate() {
            convs.push(Conv2d::new(ps, &format!("conv{i}"), c_in, c, 3, s, 1, rng)?);
            c_in = c;
            t = ceil_div(t, s);
            f = ceil_div(f, s);
        }
        let lstm = Lstm::new(ps, "lstm", c_in * f, lstm_hidden, rng)?;
        let attention = AttentionPool::new(ps, "attention", lstm_hidden, attention_dim, rng)?;
        Ok(Self {
            convs,
            lstm,
            attention,
            slope,
            frames,
            bands,
        })
    }

    pub fn check_input(&self, x: &Tensor) -> Result<()> {
        let dims = x.dims();
        if dims.len() != 4 || dims[1] != 1 || dims[2] != self.frames || dims[3] != self.bands {
            return Err(Error::Shape {
                expected: format!("(B, 1, {}, {})", self.frames, self.bands),
                actual: format!("{dims:?}"),
            });
        }
        Ok(())
    }

    /// (B, 1, T, F) → (B, lstm_hidden)
    pub fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let mut h = x.clone();
        for conv in &self.convs {
            h = leaky_relu(&conv.forward(&h)?, self.slope)?;
        }
        let (b, c, t, f) = h.dims4()?;
        let seq = h.permute((0, 2, 1, 3))?.reshape((b, t, c * f))?;
        let states = self.lstm.forward(&seq)?;
        self.attention.forward(&states)
    }
}
