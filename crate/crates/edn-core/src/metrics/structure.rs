//! Structural similarity score: object-aware term over foreground/background
//! statistics plus a region-aware term over centroid-cut quadrants.

use super::{check_dims, GtMask, SaliencyMap};
use crate::error::Result;

const EPS: f64 = 1e-12;

/// `S = alpha * S_object + (1 - alpha) * S_region`, clamped to [0, 1].
/// Degenerate masks: all-background gives `1 - mean(P)`, all-foreground
/// gives `mean(P)`.
pub fn s_measure(p: &SaliencyMap, g: &GtMask, alpha: f64) -> Result<f64> {
    check_dims(p, g)?;
    let total = g.h() * g.w();
    let nfg = g.fg_count();
    if nfg == 0 {
        return Ok((1.0 - p.mean()).clamp(0.0, 1.0));
    }
    if nfg == total {
        return Ok(p.mean().clamp(0.0, 1.0));
    }
    let s = alpha * s_object(p, g) + (1.0 - alpha) * s_region(p, g);
    Ok(s.clamp(0.0, 1.0))
}

fn mean_and_sample_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let ss: f64 = vals.iter().map(|&v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0 + EPS)).sqrt())
}

fn object_score(vals: &[f64]) -> f64 {
    let (mean, std) = mean_and_sample_std(vals);
    2.0 * mean / (mean * mean + 1.0 + 2.0 * std + EPS)
}

fn s_object(p: &SaliencyMap, g: &GtMask) -> f64 {
    let mut fg_vals = Vec::new();
    let mut bg_vals = Vec::new();
    for (&pv, &gv) in p.data().iter().zip(g.data()) {
        if gv {
            fg_vals.push(pv as f64);
        } else {
            bg_vals.push(1.0 - pv as f64);
        }
    }
    let mu = g.fg_count() as f64 / (g.h() * g.w()) as f64;
    mu * object_score(&fg_vals) + (1.0 - mu) * object_score(&bg_vals)
}

fn centroid(g: &GtMask) -> (usize, usize) {
    let (mut sx, mut sy, mut n) = (0.0f64, 0.0f64, 0.0f64);
    for y in 0..g.h() {
        for x in 0..g.w() {
            if g.data()[y * g.w() + x] {
                sx += x as f64;
                sy += y as f64;
                n += 1.0;
            }
        }
    }
    ((sx / n).round() as usize, (sy / n).round() as usize)
}

struct Quadrant {
    y0: usize,
    y1: usize,
    x0: usize,
    x1: usize,
}

fn s_region(p: &SaliencyMap, g: &GtMask) -> f64 {
    let (h, w) = g.dims();
    let (cx, cy) = centroid(g);
    // The centroid row/column belongs to the upper-left block.
    let (sy, sx) = (cy + 1, cx + 1);
    let quads = [
        Quadrant { y0: 0, y1: sy, x0: 0, x1: sx },
        Quadrant { y0: 0, y1: sy, x0: sx, x1: w },
        Quadrant { y0: sy, y1: h, x0: 0, x1: sx },
        Quadrant { y0: sy, y1: h, x0: sx, x1: w },
    ];
    let total = (h * w) as f64;
    let mut score = 0.0;
    for q in &quads {
        let area = (q.y1 - q.y0) * (q.x1 - q.x0);
        if area == 0 {
            continue;
        }
        let mut pv = Vec::with_capacity(area);
        let mut gv = Vec::with_capacity(area);
        for y in q.y0..q.y1 {
            for x in q.x0..q.x1 {
                pv.push(p.data()[y * w + x] as f64);
                gv.push(if g.data()[y * w + x] { 1.0 } else { 0.0 });
            }
        }
        score += area as f64 / total * ssim(&pv, &gv);
    }
    score
}

fn ssim(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let denom_n = n - 1.0 + EPS;
    let vx = x.iter().map(|&v| (v - mx).powi(2)).sum::<f64>() / denom_n;
    let vy = y.iter().map(|&v| (v - my).powi(2)).sum::<f64>() / denom_n;
    let cov = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a - mx) * (b - my))
        .sum::<f64>()
        / denom_n;
    let numer = 4.0 * mx * my * cov;
    let denom = (mx * mx + my * my) * (vx + vy);
    if vx == 0.0 && vy == 0.0 && mx == my {
        1.0
    } else if numer == 0.0 {
        0.0
    } else {
        numer / (denom + EPS)
    }
}
