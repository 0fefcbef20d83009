//! Neural primitives: dilated/grouped 2-D convolution, inference-mode batch
//! normalization, activations, pooling, bilinear upsampling, parameter
//! initialization and arithmetic-cost accounting.
//!
//! All ops are pure functions over immutable tensors. `conv2d` is the
//! production path (row-slice inner loops); `conv2d_direct` is the plain
//! direct algorithm with identical tap order, kept as a second route.

use crate::error::{EdnError, Result};
use crate::tensor::{ChannelVector, Tensor4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Batch-norm epsilon used throughout the graph.
pub const BN_EPS: f32 = 1e-5;

/// Geometry of a (possibly dilated, grouped) square convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub dilation: usize,
    pub groups: usize,
}

impl ConvSpec {
    /// Stride-1 convolution that preserves spatial dims for odd `k`
    /// (`pad = dilation * (k - 1) / 2`).
    pub fn same(c_in: usize, c_out: usize, k: usize, dilation: usize, groups: usize) -> ConvSpec {
        ConvSpec {
            c_in,
            c_out,
            k,
            stride: 1,
            pad: dilation * (k - 1) / 2,
            dilation,
            groups,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.stride == 0 || self.dilation == 0 || self.groups == 0 {
            return Err(EdnError::dimension(format!(
                "conv spec requires k, stride, dilation, groups >= 1, got {self:?}"
            )));
        }
        if self.c_in == 0 || self.c_out == 0 {
            return Err(EdnError::dimension("conv spec requires c_in, c_out >= 1"));
        }
        if !self.c_in.is_multiple_of(self.groups) || !self.c_out.is_multiple_of(self.groups) {
            return Err(EdnError::dimension(format!(
                "c_in {} and c_out {} must be divisible by groups {}",
                self.c_in, self.c_out, self.groups
            )));
        }
        Ok(())
    }

    /// Output spatial dims; errors when the kernel does not fit.
    pub fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let span = self.dilation * (self.k - 1) + 1;
        let oh = (h + 2 * self.pad).checked_sub(span);
        let ow = (w + 2 * self.pad).checked_sub(span);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok((oh / self.stride + 1, ow / self.stride + 1)),
            _ => Err(EdnError::dimension(format!(
                "zero-sized conv output for input {h}x{w} with {self:?}"
            ))),
        }
    }

    /// Expected weight tensor dims `(c_out, c_in/groups, k, k)`.
    pub fn weight_dims(&self) -> (usize, usize, usize, usize) {
        (self.c_out, self.c_in / self.groups, self.k, self.k)
    }

    pub fn fan_in(&self) -> usize {
        (self.c_in / self.groups) * self.k * self.k
    }
}

/// Inference-mode batch-norm parameters, one entry per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BnParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
}

impl BnParams {
    pub fn identity(c: usize) -> BnParams {
        BnParams {
            gamma: vec![1.0; c],
            beta: vec![0.0; c],
            mean: vec![0.0; c],
            var: vec![1.0; c],
        }
    }

    pub fn validate(&self, c: usize) -> Result<()> {
        if self.gamma.len() != c || self.beta.len() != c || self.mean.len() != c || self.var.len() != c {
            return Err(EdnError::dimension(format!(
                "batch-norm arrays must all have length {c}"
            )));
        }
        if self.var.iter().any(|&v| v <= 0.0) {
            return Err(EdnError::Validation("batch-norm variance must be > 0".into()));
        }
        Ok(())
    }
}

/// Named parameter bundle for one convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub name: String,
    pub weight: Tensor4,
    pub bias: Option<Vec<f32>>,
    pub bn: Option<BnParams>,
}

impl LayerParams {
    pub fn validate(&self, spec: &ConvSpec) -> Result<()> {
        spec.validate()?;
        if self.weight.dims() != spec.weight_dims() {
            return Err(EdnError::dimension(format!(
                "layer `{}`: weight dims {:?} do not match spec {:?}",
                self.name,
                self.weight.dims(),
                spec.weight_dims()
            )));
        }
        if let Some(b) = &self.bias {
            if b.len() != spec.c_out {
                return Err(EdnError::dimension(format!(
                    "layer `{}`: bias length {} != c_out {}",
                    self.name,
                    b.len(),
                    spec.c_out
                )));
            }
        }
        if let Some(bn) = &self.bn {
            bn.validate(spec.c_out)?;
        }
        Ok(())
    }
}

/// 2-D convolution with zero padding. Out-of-bounds taps read zero; the
/// accumulation order per output element is fixed to (in-channel, ky, kx).
pub fn conv2d(x: &Tensor4, spec: &ConvSpec, p: &LayerParams) -> Result<Tensor4> {
    p.validate(spec)?;
    if x.c() != spec.c_in {
        return Err(EdnError::dimension(format!(
            "conv `{}` expects {} input channels, got {}",
            p.name,
            spec.c_in,
            x.c()
        )));
    }
    let (in_h, in_w) = (x.h(), x.w());
    let (out_h, out_w) = spec.out_hw(in_h, in_w)?;
    let cig = spec.c_in / spec.groups;
    let cog = spec.c_out / spec.groups;
    let plane = out_h * out_w;
    let mut out = vec![0.0f32; x.n() * spec.c_out * plane];

    let k = spec.k;
    let wdat = p.weight.data();
    for bn in 0..x.n() {
        for o in 0..spec.c_out {
            let g = o / cog;
            let out_ch = &mut out[(bn * spec.c_out + o) * plane..][..plane];
            if let Some(b) = &p.bias {
                out_ch.fill(b[o]);
            }
            for ic in 0..cig {
                let x_ch = x.channel(bn, g * cig + ic);
                let w_base = ((o * cig) + ic) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = wdat[w_base + ky * k + kx];
                        accumulate_tap(
                            out_ch, x_ch, wv, spec, in_h, in_w, out_h, out_w, ky, kx,
                        );
                    }
                }
            }
        }
    }
    Tensor4::new(x.n(), spec.c_out, out_h, out_w, out)
}

/// Adds `wv * x[tap]` into every output element for one kernel tap.
#[inline]
#[allow(clippy::too_many_arguments)]
fn accumulate_tap(
    out_ch: &mut [f32],
    x_ch: &[f32],
    wv: f32,
    spec: &ConvSpec,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    ky: usize,
    kx: usize,
) {
    let pad = spec.pad as isize;
    let dy = (ky * spec.dilation) as isize - pad;
    let dx = (kx * spec.dilation) as isize - pad;
    for oy in 0..out_h {
        let iy = (oy * spec.stride) as isize + dy;
        if iy < 0 || iy >= in_h as isize {
            continue;
        }
        let x_row = &x_ch[iy as usize * in_w..][..in_w];
        let out_row = &mut out_ch[oy * out_w..][..out_w];
        if spec.stride == 1 {
            // ix = ox + dx; restrict to the in-bounds ox range and saxpy.
            let ox_lo = (-dx).max(0) as usize;
            let ox_hi = ((in_w as isize - dx).min(out_w as isize)).max(0) as usize;
            if ox_lo >= ox_hi {
                continue;
            }
            let src = &x_row[(ox_lo as isize + dx) as usize..(ox_hi as isize + dx) as usize];
            for (o, &v) in out_row[ox_lo..ox_hi].iter_mut().zip(src) {
                *o += wv * v;
            }
        } else {
            for (ox, o) in out_row.iter_mut().enumerate() {
                let ix = (ox * spec.stride) as isize + dx;
                if ix >= 0 && ix < in_w as isize {
                    *o += wv * x_row[ix as usize];
                }
            }
        }
    }
}

/// Plain direct convolution, one output element at a time. Same tap order as
/// `conv2d`; kept as an always-available second route.
pub fn conv2d_direct(x: &Tensor4, spec: &ConvSpec, p: &LayerParams) -> Result<Tensor4> {
    p.validate(spec)?;
    if x.c() != spec.c_in {
        return Err(EdnError::dimension(format!(
            "conv `{}` expects {} input channels, got {}",
            p.name,
            spec.c_in,
            x.c()
        )));
    }
    let (out_h, out_w) = spec.out_hw(x.h(), x.w())?;
    let cig = spec.c_in / spec.groups;
    let cog = spec.c_out / spec.groups;
    let mut out = Vec::with_capacity(x.n() * spec.c_out * out_h * out_w);
    for bn in 0..x.n() {
        for o in 0..spec.c_out {
            let g = o / cog;
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut acc = p.bias.as_ref().map_or(0.0, |b| b[o]);
                    for ic in 0..cig {
                        for ky in 0..spec.k {
                            for kx in 0..spec.k {
                                let iy = (oy * spec.stride + ky * spec.dilation) as isize
                                    - spec.pad as isize;
                                let ix = (ox * spec.stride + kx * spec.dilation) as isize
                                    - spec.pad as isize;
                                if iy < 0
                                    || iy >= x.h() as isize
                                    || ix < 0
                                    || ix >= x.w() as isize
                                {
                                    continue;
                                }
                                acc += p.weight.at(o, ic, ky, kx)
                                    * x.at(bn, g * cig + ic, iy as usize, ix as usize);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    Tensor4::new(x.n(), spec.c_out, out_h, out_w, out)
}

/// Depthwise 3x3 followed by pointwise 1x1; equals the bare composition of
/// the two convolutions, no normalization in between.
///
/// `spec` carries the overall geometry (`c_in -> c_out`, kernel, dilation);
/// `p_dw` must be a `groups = c_in` convolution and `p_pw` a 1x1.
pub fn depthwise_separable_conv(
    x: &Tensor4,
    spec: &ConvSpec,
    p_dw: &LayerParams,
    p_pw: &LayerParams,
) -> Result<Tensor4> {
    let dw = ConvSpec {
        c_in: spec.c_in,
        c_out: spec.c_in,
        k: spec.k,
        stride: spec.stride,
        pad: spec.pad,
        dilation: spec.dilation,
        groups: spec.c_in,
    };
    let pw = ConvSpec {
        c_in: spec.c_in,
        c_out: spec.c_out,
        k: 1,
        stride: 1,
        pad: 0,
        dilation: 1,
        groups: 1,
    };
    let mid = conv2d(x, &dw, p_dw)?;
    conv2d(&mid, &pw, p_pw)
}

/// Per-channel affine normalization: `gamma * (x - mean) / sqrt(var + eps) + beta`.
pub fn batchnorm_inference(x: &Tensor4, bn: &BnParams, eps: f32) -> Result<Tensor4> {
    let c = x.c();
    if bn.gamma.len() != c || bn.beta.len() != c || bn.mean.len() != c || bn.var.len() != c {
        return Err(EdnError::dimension(format!(
            "batch-norm arrays must all have length {c} to match input channels"
        )));
    }
    let mut data = Vec::with_capacity(x.len());
    for n in 0..x.n() {
        for c in 0..x.c() {
            let scale = bn.gamma[c] / (bn.var[c] + eps).sqrt();
            let shift = bn.beta[c] - bn.mean[c] * scale;
            data.extend(x.channel(n, c).iter().map(|&v| v * scale + shift));
        }
    }
    Tensor4::new(x.n(), x.c(), x.h(), x.w(), data)
}

#[inline]
pub fn sigmoid_scalar(x: f32) -> f32 {
    // f32 rounding collapses the tails to exactly 0 or 1 for large |x|;
    // pin to the nearest representable values inside (0,1) so the codomain
    // holds for every finite input.
    let v = 1.0 / (1.0 + (-x).exp());
    v.clamp(f32::MIN_POSITIVE, 1.0 - f32::EPSILON / 2.0)
}

pub fn relu(x: &Tensor4) -> Tensor4 {
    x.map(|v| v.max(0.0))
}

pub fn sigmoid(x: &Tensor4) -> Tensor4 {
    x.map(sigmoid_scalar)
}

/// 2x2 stride-2 max pooling with floor semantics on odd dims.
pub fn maxpool2(x: &Tensor4) -> Result<Tensor4> {
    if x.h() < 2 || x.w() < 2 {
        return Err(EdnError::dimension(format!(
            "maxpool2 requires h,w >= 2, got {}x{}",
            x.h(),
            x.w()
        )));
    }
    let (oh, ow) = (x.h() / 2, x.w() / 2);
    let mut data = Vec::with_capacity(x.n() * x.c() * oh * ow);
    for n in 0..x.n() {
        for c in 0..x.c() {
            let ch = x.channel(n, c);
            for oy in 0..oh {
                let r0 = &ch[(2 * oy) * x.w()..][..x.w()];
                let r1 = &ch[(2 * oy + 1) * x.w()..][..x.w()];
                for ox in 0..ow {
                    let m = r0[2 * ox]
                        .max(r0[2 * ox + 1])
                        .max(r1[2 * ox])
                        .max(r1[2 * ox + 1]);
                    data.push(m);
                }
            }
        }
    }
    Tensor4::new(x.n(), x.c(), oh, ow, data)
}

/// Global average pooling to a per-channel vector. Batch must be 1: the
/// vector would otherwise mix statistics across images.
pub fn global_avg_pool(x: &Tensor4) -> Result<ChannelVector> {
    if x.n() != 1 {
        return Err(EdnError::dimension(format!(
            "global_avg_pool requires n = 1, got {}",
            x.n()
        )));
    }
    let area = (x.h() * x.w()) as f64;
    let mut out = Vec::with_capacity(x.c());
    for c in 0..x.c() {
        let sum: f64 = x.channel(0, c).iter().map(|&v| v as f64).sum();
        out.push((sum / area) as f32);
    }
    ChannelVector::new(out)
}

/// Bilinear resize with half-pixel centers (align_corners = false):
/// source coordinate `s = (d + 0.5) * in/out - 0.5`, clamped to `[0, in-1]`.
pub fn upsample_bilinear(x: &Tensor4, out_h: usize, out_w: usize) -> Result<Tensor4> {
    if out_h == 0 || out_w == 0 {
        return Err(EdnError::dimension("upsample output dims must be >= 1"));
    }
    let axis = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f32)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(n_in - 1);
                (lo, hi, (s - lo as f64) as f32)
            })
            .collect()
    };
    let ys = axis(x.h(), out_h);
    let xs = axis(x.w(), out_w);
    let mut data = Vec::with_capacity(x.n() * x.c() * out_h * out_w);
    for n in 0..x.n() {
        for c in 0..x.c() {
            let ch = x.channel(n, c);
            for &(y0, y1, fy) in &ys {
                let r0 = &ch[y0 * x.w()..][..x.w()];
                let r1 = &ch[y1 * x.w()..][..x.w()];
                for &(x0, x1, fx) in &xs {
                    let top = r0[x0] + fx * (r0[x1] - r0[x0]);
                    let bot = r1[x0] + fx * (r1[x1] - r1[x0]);
                    data.push(top + fy * (bot - top));
                }
            }
        }
    }
    Tensor4::new(x.n(), x.c(), out_h, out_w, data)
}

/// He-style initialization: weights from N(0, 2/fan_in), zero bias, identity
/// batch norm. Deterministic for a fixed seed.
pub fn init_params(name: &str, spec: &ConvSpec, seed: u64) -> Result<LayerParams> {
    spec.validate()?;
    let (co, ci, k, _) = spec.weight_dims();
    let std = (2.0 / spec.fan_in() as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("std is finite and positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f32> = (0..co * ci * k * k)
        .map(|_| normal.sample(&mut rng) as f32)
        .collect();
    Ok(LayerParams {
        name: name.to_string(),
        weight: Tensor4::new(co, ci, k, k, data)?,
        bias: Some(vec![0.0; co]),
        bn: Some(BnParams::identity(co)),
    })
}

/// Multiply-accumulate count for one convolution at the given output size.
pub fn count_macs(spec: &ConvSpec, out_h: usize, out_w: usize) -> u64 {
    spec.c_out as u64
        * (spec.c_in / spec.groups) as u64
        * (spec.k * spec.k) as u64
        * out_h as u64
        * out_w as u64
}
