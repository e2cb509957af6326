//! VGG-layout convolutional segment classifier.

use candle_core::{Module, Tensor, D};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{softmax, Conv2d, Linear, ParamSet};

/// Blocks of 3×3 convolutions (each followed by ReLU), a 2×2 max-pool after
/// every block, then fully connected layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSpec {
    pub frames: usize,
    pub bands: usize,
    pub blocks: Vec<Vec<usize>>,
    pub hidden: Vec<usize>,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self::vgg19()
    }
}

impl ClassifierSpec {
    pub fn vgg19() -> Self {
        Self {
            frames: 128,
            bands: 128,
            blocks: vec![vec![64; 2], vec![128; 2], vec![256; 4], vec![512; 4], vec![512; 4]],
            hidden: vec![4096, 4096],
        }
    }

    /// Shallow 4-block variant for small synthetic sets.
    pub fn toy(frames: usize, bands: usize) -> Self {
        Self {
            frames,
            bands,
            blocks: vec![vec![8], vec![16], vec![16], vec![32]],
            hidden: vec![32],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.blocks.len();
        if k == 0 || self.blocks.iter().any(|b| b.is_empty() || b.contains(&0)) {
            return Err(Error::Config("classifier.blocks must be non-empty with positive widths".into()));
        }
        let div = 1usize << k;
        if self.frames % div != 0 || self.bands % div != 0 {
            return Err(Error::Config(format!(
                "classifier input {}x{} must be divisible by {div}",
                self.frames, self.bands
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("classifier.hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct Classifier {
    pub params: ParamSet,
    pub spec: ClassifierSpec,
    pub n_classes: usize,
    blocks: Vec<Vec<Conv2d>>,
    dense: Vec<Linear>,
}

impl Classifier {
    pub fn new(spec: ClassifierSpec, n_classes: usize, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        let mut ps = ParamSet::new("classifier");
        let mut c_in = 1;
        let mut blocks = Vec::new();
        for (b, widths) in spec.blocks.iter().enumerate() {
            let mut convs = Vec::new();
            for (i, &c) in widths.iter().enumerate() {
                convs.push(Conv2d::new(&mut ps, &format!("block{b}.conv{i}"), c_in, c, 3, 1, 1, rng)?);
                c_in = c;
            }
            blocks.push(convs);
        }
        let div = 1 << spec.blocks.len();
        let mut d_in = c_in * (spec.frames / div) * (spec.bands / div);
        let mut dense = Vec::new();
        for (i, &h) in spec.hidden.iter().chain(std::iter::once(&n_classes)).enumerate() {
            dense.push(Linear::new(&mut ps, &format!("fc{i}"), d_in, h, rng)?);
            d_in = h;
        }
        Ok(Self {
            params: ps,
            spec,
            n_classes,
            blocks,
            dense,
        })
    }

    pub fn check_input(&self, x: &Tensor) -> Result<()> {
        let d = x.dims();
        if d.len() != 4 || d[1] != 1 || d[2] != self.spec.frames || d[3] != self.spec.bands {
            return Err(Error::Shape {
                expected: format!("(B, 1, {}, {})", self.spec.frames, self.spec.bands),
                actual: format!("{d:?}"),
            });
        }
        Ok(())
    }

    /// (B, 1, T, F) → (B, C) unnormalized scores.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for convs in &self.blocks {
            for conv in convs {
                h = conv.forward(&h)?.relu()?;
            }
            h = h.max_pool2d(2)?;
        }
        h = h.flatten_from(1)?;
        let last = self.dense.len() - 1;
        for (i, fc) in self.dense.iter().enumerate() {
            h = fc.forward(&h)?;
            if i < last {
                h = h.relu()?;
            }
        }
        Ok(h)
    }

    pub fn probabilities(&self, x: &Tensor) -> Result<Tensor> {
        Ok(softmax(&self.logits(x)?, 1)?)
    }
}

/// Mean negative log-likelihood of `targets` under softmax(`logits`).
pub fn cross_entropy(logits: &Tensor, targets: &[u32]) -> candle_core::Result<Tensor> {
    let max = logits.max_keepdim(D::Minus1)?.detach();
    let shifted = logits.broadcast_sub(&max)?;
    let log_z = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    let log_p = shifted.broadcast_sub(&log_z)?;
    let idx = Tensor::from_slice(targets, (targets.len(), 1), logits.device())?;
    log_p.gather(&idx, 1)?.mean_all()?.neg()
}
