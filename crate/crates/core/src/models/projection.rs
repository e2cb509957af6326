//! l1-budget projection of raw perturbations.

use candle_core::{Tensor, D};
use ndarray::{ArrayD, ArrayViewD};

/// Rescales `p` so that ‖δ‖₁ = ε·numel(p). A zero input maps to zero.
pub fn project_l1(p: ArrayViewD<'_, f32>, eps: f64) -> ArrayD<f32> {
    let l1: f64 = p.iter().map(|v| v.abs() as f64).sum();
    if l1 == 0.0 {
        return ArrayD::zeros(p.raw_dim());
    }
    let scale = eps * p.len() as f64 / l1;
    p.mapv(|v| (v as f64 * scale) as f32)
}

/// Batched projection: `p` is (B, ...) and `eps` holds one intensity per sample.
pub fn project_l1_batch(p: &Tensor, eps: &[f32]) -> candle_core::Result<Tensor> {
    let b = p.dim(0)?;
    let per_sample = p.elem_count() / b.max(1);
    let flat = p.reshape((b, ()))?;
    let l1 = flat.abs()?.sum_keepdim(D::Minus1)?.maximum(1e-12)?;
    let budget = Tensor::from_slice(eps, (b, 1), p.device())?.to_dtype(p.dtype())? * per_sample as f64;
    let scale = budget?.div(&l1)?;
    flat.broadcast_mul(&scale)?.reshape(p.shape())
}
