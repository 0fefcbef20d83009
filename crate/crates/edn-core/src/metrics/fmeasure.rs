//! Threshold-swept F-measure and the error-weighted F-measure.

use super::edt::squared_edt_with_indices;
use super::{binarization_counts, check_dims, GtMask, SaliencyMap, NUM_THRESHOLDS};
use crate::error::{EdnError, Result};

/// Maximum F_beta over the 256 binarization thresholds `i/255` with the
/// predicate `p >= t`. Zero-division yields F = 0 at that threshold.
pub fn f_beta_max(p: &SaliencyMap, g: &GtMask, beta2: f64) -> Result<f64> {
    check_dims(p, g)?;
    let nfg = g.fg_count() as f64;
    if nfg == 0.0 {
        return Err(EdnError::Undefined(
            "f_beta_max: empty ground truth, recall undefined".into(),
        ));
    }
    let (pos, tp) = binarization_counts(p, g);
    let mut best = 0.0f64;
    for i in 0..NUM_THRESHOLDS {
        let tpv = tp[i] as f64;
        let fpv = (pos[i] - tp[i]) as f64;
        let fnv = nfg - tpv;
        let precision = if tpv + fpv > 0.0 { tpv / (tpv + fpv) } else { 0.0 };
        let recall = tpv / (tpv + fnv);
        let denom = beta2 * precision + recall;
        let f = if denom > 0.0 {
            (1.0 + beta2) * precision * recall / denom
        } else {
            0.0
        };
        best = best.max(f);
    }
    Ok(best)
}

// Weighted F-measure constants: 7x7 Gaussian with sigma 5 for the error
// smoothing, distance-decayed background importance, beta^2 = 1.
const GAUSS_SIDE: usize = 7;
const GAUSS_SIGMA: f64 = 5.0;
const EPS: f64 = f64::EPSILON;

fn gaussian_kernel() -> [f64; GAUSS_SIDE * GAUSS_SIDE] {
    let mut k = [0.0; GAUSS_SIDE * GAUSS_SIDE];
    let r = (GAUSS_SIDE / 2) as i64;
    let mut sum = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let v = (-((dy * dy + dx * dx) as f64) / (2.0 * GAUSS_SIGMA * GAUSS_SIGMA)).exp();
            k[((dy + r) * GAUSS_SIDE as i64 + dx + r) as usize] = v;
            sum += v;
        }
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn gaussian_smooth(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let kernel = gaussian_kernel();
    let r = (GAUSS_SIDE / 2) as i64;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                let sy = y as i64 + dy;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                for dx in -r..=r {
                    let sx = x as i64 + dx;
                    if sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    acc += kernel[((dy + r) * GAUSS_SIDE as i64 + dx + r) as usize]
                        * src[sy as usize * w + sx as usize];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Weighted F-measure: the error map is made dependency-aware (background
/// errors copy their nearest foreground error before smoothing) and
/// importance-weighted (background weight decays with distance to the
/// foreground), then fed into weighted precision/recall.
pub fn f_weighted(p: &SaliencyMap, g: &GtMask) -> Result<f64> {
    check_dims(p, g)?;
    let (h, w) = g.dims();
    let nfg = g.fg_count();
    if nfg == 0 {
        return Err(EdnError::Undefined(
            "f_weighted: empty ground truth".into(),
        ));
    }
    let fg = g.data();
    let e: Vec<f64> = p
        .data()
        .iter()
        .zip(fg)
        .map(|(&pv, &gv)| (pv as f64 - if gv { 1.0 } else { 0.0 }).abs())
        .collect();

    // Distance and nearest-foreground index for every background pixel.
    let (d2, idx) = squared_edt_with_indices(fg, h, w);

    let mut et = e.clone();
    for j in 0..h * w {
        if !fg[j] {
            et[j] = e[idx[j]];
        }
    }
    let ea = gaussian_smooth(&et, h, w);

    let ln_half = 0.5f64.ln();
    let mut sum_ew_fg = 0.0;
    let mut sum_ew_bg = 0.0;
    for j in 0..h * w {
        if fg[j] {
            let min_e = if ea[j] < e[j] { ea[j] } else { e[j] };
            sum_ew_fg += min_e;
        } else {
            let dist = (d2[j] as f64).sqrt();
            let b = 2.0 - (ln_half / 5.0 * dist).exp();
            sum_ew_bg += e[j] * b;
        }
    }

    let tpw = nfg as f64 - sum_ew_fg;
    let fpw = sum_ew_bg;
    let recall = 1.0 - sum_ew_fg / nfg as f64;
    let precision = tpw / (EPS + tpw + fpw);
    let q = 2.0 * recall * precision / (EPS + recall + precision);
    Ok(q.clamp(0.0, 1.0))
}
