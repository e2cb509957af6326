//! Patch extraction (im2col) and its adjoint (col2im) as differentiable ops.

use candle_core::{CpuStorage, CustomOp1, Layout, Shape, Tensor};

/// Sliding-window geometry over a (B, C, H, W) image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Patches {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Patches {
    pub fn out_height(&self) -> usize {
        (self.height + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.width + 2 * self.padding - self.kernel) / self.stride + 1
    }

    fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_height() * self.out_width()
    }

    /// Calls `f(row, position, pixel)` for every in-bounds (patch entry, image pixel) pair of one sample.
    fn for_each(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let (ho, wo) = (self.out_height(), self.out_width());
        for c in 0..self.channels {
            for kh in 0..k {
                for kw in 0..k {
                    let row = (c * k + kh) * k + kw;
                    for oh in 0..ho {
                        let ih = (oh * s + kh) as isize - p as isize;
                        if ih < 0 || ih >= self.height as isize {
                            continue;
                        }
                        let base = (c * self.height + ih as usize) * self.width;
                        for ow in 0..wo {
                            let iw = (ow * s + kw) as isize - p as isize;
                            if iw < 0 || iw >= self.width as isize {
                                continue;
                            }
                            f(row, oh * wo + ow, base + iw as usize);
                        }
                    }
                }
            }
        }
    }
}

fn contiguous_f32<'a>(storage: &'a CpuStorage, layout: &Layout) -> candle_core::Result<&'a [f32]> {
    let data = match storage {
        CpuStorage::F32(v) => v.as_slice(),
        _ => candle_core::bail!("patch ops support f32 only"),
    };
    match layout.contiguous_offsets() {
        Some((a, b)) => Ok(&data[a..b]),
        None => candle_core::bail!("patch ops need a contiguous input"),
    }
}

/// (B, C, H, W) → (B, C·k·k, H'·W').
pub(crate) struct Im2Col(pub Patches);

/// (B, C·k·k, H'·W') → (B, C, H, W), summing overlapping contributions.
pub(crate) struct Col2Im(pub Patches);

impl CustomOp1 for Im2Col {
    fn name(&self) -> &'static str {
        "im2col"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let g = self.0;
        let src = contiguous_f32(storage, layout)?;
        let (b, c, h, w) = layout.shape().dims4()?;
        if (c, h, w) != (g.channels, g.height, g.width) {
            candle_core::bail!("im2col expected (·, {}, {}, {}), got {:?}", g.channels, g.height, g.width, layout.shape());
        }
        let (rows, pos, img) = (g.rows(), g.positions(), c * h * w);
        let mut out = vec![0f32; b * rows * pos];
        for n in 0..b {
            let (x, y) = (&src[n * img..(n + 1) * img], &mut out[n * rows * pos..(n + 1) * rows * pos]);
            g.for_each(|r, q, i| y[r * pos + q] = x[i]);
        }
        Ok((CpuStorage::F32(out), Shape::from((b, rows, pos))))
    }

    fn bwd(&self, _arg: &Tensor, _res: &Tensor, grad: &Tensor) -> candle_core::Result<Option<Tensor>> {
        Ok(Some(grad.contiguous()?.apply_op1(Col2Im(self.0))?))
    }
}

impl CustomOp1 for Col2Im {
    fn name(&self) -> &'static str {
        "col2im"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let g = self.0;
        let src = contiguous_f32(storage, layout)?;
        let (b, rows, pos) = layout.shape().dims3()?;
        if (rows, pos) != (g.rows(), g.positions()) {
            candle_core::bail!("col2im expected (·, {}, {}), got {:?}", g.rows(), g.positions(), layout.shape());
        }
        let img = g.channels * g.height * g.width;
        let mut out = vec![0f32; b * img];
        for n in 0..b {
            let (x, y) = (&src[n * rows * pos..(n + 1) * rows * pos], &mut out[n * img..(n + 1) * img]);
            g.for_each(|r, q, i| y[i] += x[r * pos + q]);
        }
        Ok((CpuStorage::F32(out), Shape::from((b, g.channels, g.height, g.width))))
    }

    fn bwd(&self, _arg: &Tensor, _res: &Tensor, grad: &Tensor) -> candle_core::Result<Option<Tensor>> {
        Ok(Some(grad.contiguous()?.apply_op1(Im2Col(self.0))?))
    }
}

/// Cross-correlation of (B, C, H, W) with a (C_out, C, k, k) kernel plus bias.
pub(crate) fn conv2d(x: &Tensor, weight: &Tensor, bias: &Tensor, stride: usize, padding: usize) -> candle_core::Result<Tensor> {
    let (b, c, h, w) = x.dims4()?;
    let (c_out, c_in, k, _) = weight.dims4()?;
    if c != c_in {
        candle_core::bail!("conv input has {c} channels, kernel expects {c_in}");
    }
    let g = Patches {
        channels: c,
        height: h,
        width: w,
        kernel: k,
        stride,
        padding,
    };
    let cols = x.contiguous()?.apply_op1(Im2Col(g))?;
    let y = weight.reshape((1, c_out, c * k * k))?.broadcast_matmul(&cols)?;
    y.broadcast_add(&bias.reshape((1, c_out, 1))?)?
        .reshape((b, c_out, g.out_height(), g.out_width()))
}

/// Transposed convolution of (B, C_in, H, W) with a (C_in, C_out, k, k) kernel plus bias;
/// output side (H - 1)·stride - 2·padding + k.
pub(crate) fn conv_transpose2d(
    x: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: usize,
) -> candle_core::Result<Tensor> {
    let (b, c_in, h, w) = x.dims4()?;
    let (wc, c_out, k, _) = weight.dims4()?;
    if wc != c_in {
        candle_core::bail!("transposed conv input has {c_in} channels, kernel expects {wc}");
    }
    let out_h = ((h - 1) * stride + k).checked_sub(2 * padding);
    let out_w = ((w - 1) * stride + k).checked_sub(2 * padding);
    let (Some(out_h), Some(out_w)) = (out_h, out_w) else {
        candle_core::bail!("transposed conv padding {padding} too large");
    };
    let g = Patches {
        channels: c_out,
        height: out_h,
        width: out_w,
        kernel: k,
        stride,
        padding,
    };
    let wt = weight.reshape((1, c_in, c_out * k * k))?.transpose(1, 2)?;
    let cols = wt.broadcast_matmul(&x.reshape((b, c_in, h * w))?)?;
    cols.contiguous()?
        .apply_op1(Col2Im(g))?
        .broadcast_add(&bias.reshape((1, c_out, 1, 1))?)
}
