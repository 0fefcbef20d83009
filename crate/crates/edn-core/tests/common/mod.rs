//! Independent oracles shared by the integration suites. These deliberately
//! re-derive results with the plainest possible algorithms and stay separate
//! from the library implementations they check.
#![allow(dead_code)] // each suite uses a different subset

use edn_core::layers::{ConvSpec, LayerParams};
use edn_core::metrics::GtMask;
use edn_core::tensor::Tensor4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Six-nested-loop direct convolution, f64 accumulation.
pub fn conv2d_six_loop(x: &Tensor4, spec: &ConvSpec, p: &LayerParams) -> Tensor4 {
    let (out_h, out_w) = spec.out_hw(x.h(), x.w()).expect("valid geometry");
    let cig = spec.c_in / spec.groups;
    let cog = spec.c_out / spec.groups;
    let mut out = Vec::with_capacity(x.n() * spec.c_out * out_h * out_w);
    for n in 0..x.n() {
        for o in 0..spec.c_out {
            let group = o / cog;
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut acc: f64 = p.bias.as_ref().map_or(0.0, |b| b[o] as f64);
                    for ic in 0..cig {
                        for ky in 0..spec.k {
                            for kx in 0..spec.k {
                                let iy = (oy * spec.stride + ky * spec.dilation) as i64
                                    - spec.pad as i64;
                                let ix = (ox * spec.stride + kx * spec.dilation) as i64
                                    - spec.pad as i64;
                                if iy < 0 || iy >= x.h() as i64 || ix < 0 || ix >= x.w() as i64 {
                                    continue;
                                }
                                acc += p.weight.at(o, ic, ky, kx) as f64
                                    * x.at(n, group * cig + ic, iy as usize, ix as usize) as f64;
                            }
                        }
                    }
                    out.push(acc as f32);
                }
            }
        }
    }
    Tensor4::new(x.n(), spec.c_out, out_h, out_w, out).expect("oracle shape")
}

/// All-pairs integer-squared-distance transform of foreground pixels to the
/// nearest background pixel.
pub fn brute_force_edt(g: &GtMask) -> Vec<f64> {
    let (h, w) = (g.h(), g.w());
    let bg: Vec<(i64, i64)> = (0..h * w)
        .filter(|&j| !g.data()[j])
        .map(|j| ((j / w) as i64, (j % w) as i64))
        .collect();
    (0..h * w)
        .map(|j| {
            if !g.data()[j] {
                return 0.0;
            }
            let (y, x) = ((j / w) as i64, (j % w) as i64);
            bg.iter()
                .map(|&(by, bx)| (y - by) * (y - by) + (x - bx) * (x - bx))
                .min()
                .map_or(f64::INFINITY, |d| (d as f64).sqrt())
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(r: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4 {
    let data = (0..n * c * h * w).map(|_| r.random_range(-1.0..1.0)).collect();
    Tensor4::new(n, c, h, w, data).expect("valid dims")
}

pub fn random_params(r: &mut ChaCha8Rng, spec: &ConvSpec) -> LayerParams {
    let (co, ci, k, _) = spec.weight_dims();
    LayerParams {
        name: "oracle-case".into(),
        weight: random_tensor(r, co, ci, k, k),
        bias: Some((0..co).map(|_| r.random_range(-0.5..0.5)).collect()),
        bn: None,
    }
}

pub fn max_abs_diff(a: &Tensor4, b: &Tensor4) -> f32 {
    assert_eq!(a.dims(), b.dims());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f32::max)
}

/// Random mask with at least one foreground pixel.
pub fn random_nonempty_mask(r: &mut ChaCha8Rng, h: usize, w: usize) -> GtMask {
    loop {
        let density = r.random_range(0.05..0.95);
        let bits: Vec<bool> = (0..h * w).map(|_| r.random_bool(density)).collect();
        if bits.iter().any(|&b| b) {
            return GtMask::new(h, w, bits).expect("valid dims");
        }
    }
}
