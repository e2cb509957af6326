//! Noise-conditioned encoder/decoder emitting l1-bounded additive perturbations.

use candle_core::{Device, Module, Tensor};
use ndarray::{s, Array2, Ix2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::epsilon::EpsilonDist;
use super::projection::project_l1_batch;
use super::spec::ModelConfig;
use crate::audio::{loop_pad, MelSpectrogram};
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, Conv2d, ConvTranspose2d, Linear, ParamSet};

#[derive(Debug)]
pub struct Augmentor {
    pub params: ParamSet,
    encoder: Vec<Conv2d>,
    to_latent: Linear,
    from_latent: Linear,
    up1: ConvTranspose2d,
    up2: ConvTranspose2d,
    frames: usize,
    bands: usize,
    noise_dims: usize,
    decoder_channels: usize,
    slope: f64,
    epsilon: EpsilonDist,
}

/// Augmented batch plus the perturbation that produced it (before clamping).
pub struct Augmented {
    pub x_hat: Tensor,
    pub delta: Tensor,
    pub eps: Vec<f32>,
}

impl Augmentor {
    pub fn new(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let spec = &cfg.augmentor;
        let mut ps = ParamSet::new("augmentor");
        let mut encoder = Vec::new();
        let mut c_in = 1 + spec.noise_dims;
        for (i, &c) in spec.encoder_channels.iter().enumerate() {
            encoder.push(Conv2d::new(&mut ps, &format!("enc{i}"), c_in, c, 3, 2, 1, rng)?);
            c_in = c;
        }
        let flat = c_in * (cfg.frames / 8) * (cfg.n_mels / 8);
        let to_latent = Linear::new(&mut ps, "latent", flat, spec.latent_dim, rng)?;
        let dec_c = spec.decoder_channels;
        let dec_flat = dec_c * (cfg.frames / 4) * (cfg.n_mels / 4);
        let from_latent = Linear::new(&mut ps, "dec_in", spec.latent_dim, dec_flat, rng)?;
        let mid = (dec_c / 2).max(1);
        let up1 = ConvTranspose2d::new(&mut ps, "dec0", dec_c, mid, 4, 2, 1, rng)?;
        let up2 = ConvTranspose2d::new(&mut ps, "dec1", mid, 1, 4, 2, 1, rng)?;
        Ok(Self {
            params: ps,
            encoder,
            to_latent,
            from_latent,
            up1,
            up2,
            frames: cfg.frames,
            bands: cfg.n_mels,
            noise_dims: spec.noise_dims,
            decoder_channels: dec_c,
            slope: spec.leaky_slope,
            epsilon: cfg.epsilon,
        })
    }

    pub fn epsilon(&self) -> EpsilonDist {
        self.epsilon
    }

    /// (frames, bands) of one input segment.
    pub fn segment_shape(&self) -> (usize, usize) {
        (self.frames, self.bands)
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let d = x.dims();
        if d.len() != 4 || d[1] != 1 || d[2] != self.frames || d[3] != self.bands {
            return Err(Error::Shape {
                expected: format!("(B, 1, {}, {})", self.frames, self.bands),
                actual: format!("{d:?}"),
            });
        }
        Ok(())
    }

    /// Latent code z for input `x` and noise planes `noise`, both (B, ·, T, F).
    pub fn encode(&self, x: &Tensor, noise: &Tensor) -> candle_core::Result<Tensor> {
        let mut h = Tensor::cat(&[x, noise], 1)?;
        for conv in &self.encoder {
            h = leaky_relu(&conv.forward(&h)?, self.slope)?;
        }
        self.to_latent.forward(&h.flatten_from(1)?)
    }

    /// Raw decoder output P, same shape as the input.
    pub fn perturbation(&self, x: &Tensor, noise: &Tensor) -> candle_core::Result<Tensor> {
        let z = self.encode(x, noise)?;
        let b = z.dim(0)?;
        let h = self
            .from_latent
            .forward(&z)?
            .relu()?
            .reshape((b, self.decoder_channels, self.frames / 4, self.bands / 4))?;
        let h = self.up1.forward(&h)?.relu()?;
        self.up2.forward(&h)
    }

    /// X̂ = clamp(X + project_l1(P, ε), 0, 1) with caller-supplied noise and intensities.
    pub fn augment_with(&self, x: &Tensor, noise: &Tensor, eps: &[f32]) -> Result<Augmented> {
        self.check_input(x)?;
        let p = self.perturbation(x, noise)?;
        let delta = project_l1_batch(&p, eps)?;
        let x_hat = (x + &delta)?.clamp(0f32, 1f32)?;
        Ok(Augmented {
            x_hat,
            delta,
            eps: eps.to_vec(),
        })
    }

    pub fn sample_noise(&self, batch: usize, rng: &mut impl Rng) -> Result<Tensor> {
        let n = batch * self.noise_dims * self.frames * self.bands;
        let data: Vec<f32> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        Ok(Tensor::from_vec(data, (batch, self.noise_dims, self.frames, self.bands), &Device::Cpu)?)
    }

    /// Draws a fresh noise plane and ε per sample, then augments.
    pub fn augment(&self, x: &Tensor, noise_rng: &mut impl Rng, eps_rng: &mut impl Rng) -> Result<Augmented> {
        let b = x.dim(0)?;
        let noise = self.sample_noise(b, noise_rng)?;
        let eps: Vec<f32> = (0..b).map(|_| self.epsilon.sample(eps_rng) as f32).collect();
        self.augment_with(x, &noise, &eps)
    }

    /// Single normalized spectrogram segment in, augmented segment and δ out.
    pub fn augment_mel(&self, mel: &MelSpectrogram, rng: &mut impl Rng) -> Result<(MelSpectrogram, Array2<f32>)> {
        if !mel.is_normalized() {
            return Err(Error::NotNormalized);
        }
        let x = mel_to_tensor(mel.values())?;
        let noise = self.sample_noise(1, rng)?;
        let eps = [self.epsilon.sample(rng) as f32];
        let out = self.augment_with(&x, &noise, &eps)?;
        let x_hat = tensor_to_array(&out.x_hat)?;
        let delta = tensor_to_array(&out.delta)?;
        Ok((MelSpectrogram::new(x_hat, mel.config().clone(), true)?, delta))
    }

    /// Augments an utterance of any length by tiling it into consecutive
    /// segments (the last one loop-padded), each with its own noise and ε.
    pub fn augment_utterance(
        &self,
        mel: &MelSpectrogram,
        noise_rng: &mut impl Rng,
        eps_rng: &mut impl Rng,
    ) -> Result<MelSpectrogram> {
        if !mel.is_normalized() {
            return Err(Error::NotNormalized);
        }
        let t = mel.frames();
        if t == 0 {
            return Err(Error::EmptySpectrogram);
        }
        if mel.bands() != self.bands {
            return Err(Error::DimMismatch(self.bands, mel.bands()));
        }
        let tiles = t.div_ceil(self.frames);
        let padded = loop_pad(mel.values(), tiles * self.frames);
        let chunks: Vec<Array2<f32>> = (0..tiles)
            .map(|i| padded.slice(s![i * self.frames..(i + 1) * self.frames, ..]).to_owned())
            .collect();
        let out = self.augment(&batch_to_tensor(&chunks)?, noise_rng, eps_rng)?.x_hat;
        let data = out.flatten_all()?.to_vec1::<f32>()?;
        let joined = Array2::from_shape_vec((tiles * self.frames, self.bands), data).map_err(|e| Error::Shape {
            expected: format!("({}, {})", tiles * self.frames, self.bands),
            actual: e.to_string(),
        })?;
        MelSpectrogram::new(joined.slice(s![..t, ..]).to_owned(), mel.config().clone(), true)
    }
}

/// (T, F) array → (1, 1, T, F) tensor.
pub fn mel_to_tensor(values: &Array2<f32>) -> Result<Tensor> {
    let (t, f) = values.dim();
    let data: Vec<f32> = values.iter().copied().collect();
    Ok(Tensor::from_vec(data, (1, 1, t, f), &Device::Cpu)?)
}

/// Stacks equally-shaped (T, F) arrays into (B, 1, T, F).
pub fn batch_to_tensor(items: &[Array2<f32>]) -> Result<Tensor> {
    let (t, f) = items.first().ok_or(Error::Empty("batch"))?.dim();
    let mut data = Vec::with_capacity(items.len() * t * f);
    for a in items {
        if a.dim() != (t, f) {
            return Err(Error::Shape {
                expected: format!("({t}, {f})"),
                actual: format!("{:?}", a.dim()),
            });
        }
        data.extend(a.iter().copied());
    }
    Ok(Tensor::from_vec(data, (items.len(), 1, t, f), &Device::Cpu)?)
}

/// (1, 1, T, F) or (T, F) tensor → array.
pub fn tensor_to_array(t: &Tensor) -> Result<Array2<f32>> {
    let dims = t.dims();
    let (rows, cols) = (dims[dims.len() - 2], dims[dims.len() - 1]);
    let data = t.flatten_all()?.to_vec1::<f32>()?;
    Ok(ndarray::ArrayD::from_shape_vec(vec![rows, cols], data)
        .map_err(|e| Error::Shape {
            expected: format!("({rows}, {cols})"),
            actual: e.to_string(),
        })?
        .into_dimensionality::<Ix2>()
        .expect("two dims"))
}
