//! Exact Euclidean distance transform: separable two-pass squared-distance
//! transform with lower-envelope minimization over columns. Squared
//! distances are exact integers, so results match an all-pairs brute force
//! bit for bit after the final square root.

use super::GtMask;

/// Squared-distance sentinel for "no feature pixel exists".
pub(crate) const INF_D2: i64 = i64::MAX / 4;

/// For every pixel, the exact squared Euclidean distance to the nearest
/// `true` pixel of `features`, plus that pixel's flat index.
/// Returns `(INF_D2, usize::MAX)` everywhere when `features` is all-false.
pub fn squared_edt_with_indices(features: &[bool], h: usize, w: usize) -> (Vec<i64>, Vec<usize>) {
    assert_eq!(features.len(), h * w);
    // Pass 1: per-row squared distance to the nearest feature in that row,
    // remembering its column.
    let mut row_d2 = vec![INF_D2; h * w];
    let mut row_col = vec![usize::MAX; h * w];
    for y in 0..h {
        let base = y * w;
        let mut last: Option<usize> = None;
        for x in 0..w {
            if features[base + x] {
                last = Some(x);
            }
            if let Some(c) = last {
                let dx = (x - c) as i64;
                row_d2[base + x] = dx * dx;
                row_col[base + x] = c;
            }
        }
        last = None;
        for x in (0..w).rev() {
            if features[base + x] {
                last = Some(x);
            }
            if let Some(c) = last {
                let dx = (c - x) as i64;
                if dx * dx < row_d2[base + x] {
                    row_d2[base + x] = dx * dx;
                    row_col[base + x] = c;
                }
            }
        }
    }

    // Pass 2: per-column lower envelope of parabolas over y.
    let mut d2 = vec![INF_D2; h * w];
    let mut idx = vec![usize::MAX; h * w];
    let mut f = vec![0i64; h];
    let mut v = vec![0usize; h];
    let mut z = vec![0.0f64; h + 1];
    for x in 0..w {
        for y in 0..h {
            f[y] = row_d2[y * w + x];
        }
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..h {
            let mut s;
            loop {
                let p = v[k];
                s = ((f[q] + (q * q) as i64) - (f[p] + (p * p) as i64)) as f64
                    / (2.0 * (q as f64 - p as f64));
                if s <= z[k] {
                    k -= 1;
                } else {
                    break;
                }
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        k = 0;
        for y in 0..h {
            while z[k + 1] < y as f64 {
                k += 1;
            }
            let p = v[k];
            let dy = y as i64 - p as i64;
            let dist = dy * dy + f[p];
            let o = y * w + x;
            if f[p] >= INF_D2 {
                d2[o] = INF_D2;
                idx[o] = usize::MAX;
            } else {
                d2[o] = dist;
                idx[o] = p * w + row_col[p * w + x];
            }
        }
    }
    (d2, idx)
}

/// Exact Euclidean distance of each foreground pixel of `g` to the nearest
/// background pixel; background pixels map to 0. A mask with no background
/// at all yields `+inf` on every foreground pixel.
pub fn exact_edt(g: &GtMask) -> Vec<f64> {
    let background: Vec<bool> = g.data().iter().map(|&fg| !fg).collect();
    let (d2, _) = squared_edt_with_indices(&background, g.h(), g.w());
    d2.iter()
        .map(|&d| {
            if d >= INF_D2 {
                f64::INFINITY
            } else {
                (d as f64).sqrt()
            }
        })
        .collect()
}
