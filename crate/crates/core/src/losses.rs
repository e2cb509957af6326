//! Training objectives.
//!
//! Each objective exists twice: a scalar form over `f64` slices (used for
//! reporting and as the reference for gradient checks) and a batched tensor
//! form used by the training loop. Batch reduction is always the mean.

use candle_core::{Tensor, D};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::softplus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub w_g: f64,
    pub w_r: f64,
    pub w_e: f64,
    pub w_v: f64,
    pub w_b: f64,
    /// Triplet margin shared by the representation, emotion and balance terms.
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_g: 1.0,
            w_r: 1.0,
            w_e: 10.0,
            w_v: 1.0,
            w_b: 8.0,
            beta: 7.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("w_g", self.w_g),
            ("w_r", self.w_r),
            ("w_e", self.w_e),
            ("w_v", self.w_v),
            ("w_b", self.w_b),
            ("beta", self.beta),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {w}")));
            }
        }
        Ok(())
    }

    /// Model loss only: no variance or balance terms.
    pub fn model_only(self) -> Self {
        Self { w_v: 0.0, w_b: 0.0, ..self }
    }

    /// Model loss plus variance, no balance term.
    pub fn without_balance(self) -> Self {
        Self { w_b: 0.0, ..self }
    }
}

/// How the variance objective compares two augmented representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    #[default]
    Cosine,
    Dot,
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(a.len(), b.len()));
    }
    Ok(())
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// max(dist(a, p) − dist(a, n) + β, 0) with l1 distance.
pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64], beta: f64) -> Result<f64> {
    let ap = l1_distance(anchor, positive)?;
    let an = l1_distance(anchor, negative)?;
    Ok((ap - an + beta).max(0.0))
}

/// Non-saturating GAN objectives from discriminator probabilities.
///
/// Returns `(d_loss, g_loss)` with d_loss = −mean log s_real − mean log(1 − s_fake)
/// and g_loss = −mean log s_fake.
pub fn gan_losses(scores_real: &[f64], scores_fake: &[f64]) -> Result<(f64, f64)> {
    if scores_real.is_empty() || scores_fake.is_empty() {
        return Err(Error::Empty("discriminator scores"));
    }
    if let Some(&s) = scores_real.iter().chain(scores_fake).find(|&&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::ScoreOutOfRange(s));
    }
    let mean = |xs: &[f64], f: fn(f64) -> f64| xs.iter().map(|&x| f(x)).sum::<f64>() / xs.len() as f64;
    let d = -mean(scores_real, f64::ln) - mean(scores_fake, |s| (1.0 - s).ln());
    let g = -mean(scores_fake, f64::ln);
    Ok((d, g))
}

/// Cosine similarity of two representations, in [−1, 1].
pub fn var_loss(r1: &[f64], r2: &[f64]) -> Result<f64> {
    same_len(r1, r2)?;
    let n1 = r1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n2 = r2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = r1.iter().zip(r2).map(|(a, b)| a * b).sum();
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Raw dot product variant of the variance objective.
pub fn dot_var_loss(r1: &[f64], r2: &[f64]) -> Result<f64> {
    same_len(r1, r2)?;
    Ok(r1.iter().zip(r2).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    pub gan_g: f64,
    pub rep: f64,
    pub emo: f64,
    pub var: f64,
    pub bal: f64,
}

/// `(L_model, L_total)` where L_model = w_g·gan + w_r·rep + w_e·emo and
/// L_total = L_model + w_v·var + w_b·bal.
pub fn combine_losses(c: &LossComponents, w: &LossWeights) -> Result<(f64, f64)> {
    for (name, v) in [("gan_g", c.gan_g), ("rep", c.rep), ("emo", c.emo), ("var", c.var), ("bal", c.bal)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss(name.to_string()));
        }
    }
    let model = w.w_g * c.gan_g + w.w_r * c.rep + w.w_e * c.emo;
    Ok((model, model + w.w_v * c.var + w.w_b * c.bal))
}

/// Row-wise l1 distance of (B, d) tensors → (B,).
pub fn l1_distance_batch(a: &Tensor, b: &Tensor) -> candle_core::Result<Tensor> {
    (a - b)?.abs()?.sum(D::Minus1)
}

/// Mean triplet loss over a batch of (B, d) representations.
pub fn triplet_loss_batch(anchor: &Tensor, positive: &Tensor, negative: &Tensor, beta: f64) -> candle_core::Result<Tensor> {
    let ap = l1_distance_batch(anchor, positive)?;
    let an = l1_distance_batch(anchor, negative)?;
    ((ap - an)? + beta)?.relu()?.mean_all()
}

/// Discriminator loss from logits: mean softplus(−real) + mean softplus(fake).
pub fn discriminator_loss(real_logits: &Tensor, fake_logits: &Tensor) -> candle_core::Result<Tensor> {
    softplus(&real_logits.neg()?)?.mean_all()? + softplus(fake_logits)?.mean_all()?
}

/// Non-saturating generator loss from logits: mean softplus(−fake) = −mean log σ(fake).
pub fn generator_loss(fake_logits: &Tensor) -> candle_core::Result<Tensor> {
    softplus(&fake_logits.neg()?)?.mean_all()
}

/// Mean similarity of paired (B, d) representations.
pub fn var_loss_batch(r1: &Tensor, r2: &Tensor, mode: VarianceMode) -> candle_core::Result<Tensor> {
    let dot = (r1 * r2)?.sum(D::Minus1)?;
    match mode {
        VarianceMode::Dot => dot.mean_all(),
        VarianceMode::Cosine => {
            let n1 = r1.sqr()?.sum(D::Minus1)?.sqrt()?;
            let n2 = r2.sqr()?.sum(D::Minus1)?.sqrt()?;
            dot.div(&(n1 * n2)?.maximum(1e-12)?)?.mean_all()
        }
    }
}
