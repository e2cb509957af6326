//! Layers over candle tensors with parameters owned by a [`ParamSet`].

use candle_core::{Module, Tensor, D};
use rand::Rng;

use super::im2col::{conv2d, conv_transpose2d};
use super::params::ParamSet;
use crate::error::Result;

pub fn leaky_relu(x: &Tensor, slope: f64) -> candle_core::Result<Tensor> {
    x.maximum(&(x * slope)?)
}

/// Logistic function via tanh, finite gradients for any input.
pub fn sigmoid(x: &Tensor) -> candle_core::Result<Tensor> {
    ((x * 0.5)?.tanh()? + 1.0)? * 0.5
}

/// log(1 + e^x) without overflow.
pub fn softplus(x: &Tensor) -> candle_core::Result<Tensor> {
    x.relu()? + (x.abs()?.neg()?.exp()? + 1.0)?.log()?
}

pub fn softmax(x: &Tensor, dim: usize) -> candle_core::Result<Tensor> {
    let max = x.max_keepdim(dim)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    e.broadcast_div(&e.sum_keepdim(dim)?)
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
    padding: usize,
}

impl Conv2d {
    pub fn new(
        ps: &mut ParamSet,
        prefix: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let bound = 1.0 / ((c_in * kernel * kernel) as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(&format!("{prefix}.weight"), &[c_out, c_in, kernel, kernel], bound, rng)?,
            bias: ps.uniform(&format!("{prefix}.bias"), &[c_out], bound, rng)?,
            stride,
            padding,
        })
    }
}

impl Module for Conv2d {
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        conv2d(x, &self.weight, &self.bias, self.stride, self.padding)
    }
}

#[derive(Debug, Clone)]
pub struct ConvTranspose2d {
    weight: Tensor,
    bias: Tensor,
    stride: usize,
    padding: usize,
}

impl ConvTranspose2d {
    pub fn new(
        ps: &mut ParamSet,
        prefix: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let bound = 1.0 / ((c_out * kernel * kernel) as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(&format!("{prefix}.weight"), &[c_in, c_out, kernel, kernel], bound, rng)?,
            bias: ps.uniform(&format!("{prefix}.bias"), &[c_out], bound, rng)?,
            stride,
            padding,
        })
    }
}

impl Module for ConvTranspose2d {
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        conv_transpose2d(x, &self.weight, &self.bias, self.stride, self.padding)
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    pub fn new(ps: &mut ParamSet, prefix: &str, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Result<Self> {
        let bound = 1.0 / (d_in as f64).sqrt();
        Ok(Self {
            weight: ps.uniform(&format!("{prefix}.weight"), &[d_out, d_in], bound, rng)?,
            bias: ps.uniform(&format!("{prefix}.bias"), &[d_out], bound, rng)?,
        })
    }
}

impl Module for Linear {
    /// (..., d_in) → (..., d_out)
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        x.broadcast_matmul(&self.weight.t()?)?.broadcast_add(&self.bias)
    }
}

/// Single-layer unidirectional LSTM over (B, T, d_in), returning every hidden state (B, T, H).
#[derive(Debug, Clone)]
pub struct Lstm {
    w_ih: Tensor,
    w_hh: Tensor,
    bias: Tensor,
    hidden: usize,
}

impl Lstm {
    pub fn new(ps: &mut ParamSet, prefix: &str, d_in: usize, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        Ok(Self {
            w_ih: ps.uniform(&format!("{prefix}.w_ih"), &[4 * hidden, d_in], bound, rng)?,
            w_hh: ps.uniform(&format!("{prefix}.w_hh"), &[4 * hidden, hidden], bound, rng)?,
            bias: ps.uniform(&format!("{prefix}.bias"), &[4 * hidden], bound, rng)?,
            hidden,
        })
    }
}

impl Module for Lstm {
    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let (b, t, _) = x.dims3()?;
        let h_dim = self.hidden;
        let x_proj = x.broadcast_matmul(&self.w_ih.t()?)?.broadcast_add(&self.bias)?;
        let w_hh_t = self.w_hh.t()?;
        let mut h = Tensor::zeros((b, h_dim), x.dtype(), x.device())?;
        let mut c = h.clone();
        let mut outputs = Vec::with_capacity(t);
        for step in 0..t {
            let gates = (x_proj.narrow(1, step, 1)?.squeeze(1)? + h.matmul(&w_hh_t)?)?;
            let i = sigmoid(&gates.narrow(1, 0, h_dim)?)?;
            let f = sigmoid(&gates.narrow(1, h_dim, h_dim)?)?;
            let g = gates.narrow(1, 2 * h_dim, h_dim)?.tanh()?;
            let o = sigmoid(&gates.narrow(1, 3 * h_dim, h_dim)?)?;
            c = ((f * &c)? + (i * g)?)?;
            h = (o * c.tanh()?)?;
            outputs.push(h.clone());
        }
        Tensor::stack(&outputs, 1)
    }
}

/// Additive single-head attention pooling over time: (B, T, H) → (B, H).
#[derive(Debug, Clone)]
pub struct AttentionPool {
    proj: Linear,
    context: Tensor,
}

impl AttentionPool {
    pub fn new(ps: &mut ParamSet, prefix: &str, d_model: usize, d_attn: usize, rng: &mut impl Rng) -> Result<Self> {
        let proj = Linear::new(ps, &format!("{prefix}.proj"), d_model, d_attn, rng)?;
        let bound = 1.0 / (d_attn as f64).sqrt();
        let context = ps.uniform(&format!("{prefix}.context"), &[d_attn, 1], bound, rng)?;
        Ok(Self { proj, context })
    }
}

impl Module for AttentionPool {
    fn forward(&self, h: &Tensor) -> candle_core::Result<Tensor> {
        let scores = self.proj.forward(h)?.tanh()?.broadcast_matmul(&self.context)?.squeeze(D::Minus1)?;
        let alpha = softmax(&scores, 1)?;
        alpha.unsqueeze(1)?.matmul(h)?.squeeze(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        let data: Vec<f32> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::from_vec(data, shape, &Device::Cpu).unwrap()
    }

    fn max_abs_diff(a: &Tensor, b: &Tensor) -> f32 {
        (a - b).unwrap().abs().unwrap().flatten_all().unwrap().max(0).unwrap().to_scalar().unwrap()
    }

    #[test]
    fn gemm_conv_matches_direct_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for &(h, w, stride, pad, k) in &[(8, 6, 1, 1, 3), (9, 7, 2, 1, 3), (8, 8, 2, 1, 3), (5, 5, 1, 0, 3), (6, 4, 3, 2, 4)] {
            let x = rand_tensor(&[2, 3, h, w], &mut rng);
            let wt = rand_tensor(&[4, 3, k, k], &mut rng);
            let bias = rand_tensor(&[4], &mut rng);
            let want = x
                .conv2d(&wt, pad, stride, 1, 1)
                .unwrap()
                .broadcast_add(&bias.reshape((1, 4, 1, 1)).unwrap())
                .unwrap();
            let got = conv2d(&x, &wt, &bias, stride, pad).unwrap();
            assert_eq!(got.dims(), want.dims());
            assert!(max_abs_diff(&got, &want) < 1e-5);
        }
    }

    #[test]
    fn gemm_transposed_conv_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new("t");
        let layer = ConvTranspose2d::new(&mut ps, "up", 3, 2, 4, 2, 1, &mut rng).unwrap();
        let x = rand_tensor(&[2, 3, 5, 4], &mut rng);
        let want = x
            .conv_transpose2d(&layer.weight, 1, 0, 2, 1)
            .unwrap()
            .broadcast_add(&layer.bias.reshape((1, 2, 1, 1)).unwrap())
            .unwrap();
        let got = layer.forward(&x).unwrap();
        assert_eq!(got.dims(), &[2, 2, 10, 8]);
        assert!(max_abs_diff(&got, &want) < 1e-5);
    }

    #[test]
    fn gemm_conv_gradients_match_direct_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = candle_core::Var::from_tensor(&rand_tensor(&[2, 2, 8, 8], &mut rng)).unwrap();
        let wt = candle_core::Var::from_tensor(&rand_tensor(&[3, 2, 3, 3], &mut rng)).unwrap();
        let bias = Tensor::zeros(3, candle_core::DType::F32, &Device::Cpu).unwrap();
        let g1 = conv2d(&x, &wt, &bias, 2, 1).unwrap().sqr().unwrap().sum_all().unwrap().backward().unwrap();
        let g2 = x.conv2d(&wt, 1, 2, 1, 1).unwrap().sqr().unwrap().sum_all().unwrap().backward().unwrap();
        assert!(max_abs_diff(g1.get(&x).unwrap(), g2.get(&x).unwrap()) < 1e-4);
        assert!(max_abs_diff(g1.get(&wt).unwrap(), g2.get(&wt).unwrap()) < 1e-4);
    }
}
