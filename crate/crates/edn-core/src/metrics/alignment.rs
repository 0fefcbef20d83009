//! Enhanced-alignment score between the binarized prediction and the binary
//! ground truth, reported as max and mean over the 256 thresholds.

use super::{binarization_counts, check_dims, GtMask, SaliencyMap, NUM_THRESHOLDS};
use crate::error::Result;

const EPS: f64 = f64::EPSILON;

fn enhanced(phi_g: f64, phi_p: f64) -> f64 {
    let xi = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + EPS);
    (xi + 1.0) * (xi + 1.0) / 4.0
}

/// `(e_max, e_mean)` over thresholds `i/255`, each per-threshold score
/// clamped to [0, 1].
///
/// Binary maps make the per-pixel enhanced-alignment value a function of the
/// (G, P) combination only, so each threshold reduces to four weighted terms.
pub fn e_measure(p: &SaliencyMap, g: &GtMask) -> Result<(f64, f64)> {
    check_dims(p, g)?;
    let total = (g.h() * g.w()) as f64;
    let nfg = g.fg_count() as f64;
    let (pos, tp) = binarization_counts(p, g);
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for i in 0..NUM_THRESHOLDS {
        let npos = pos[i] as f64;
        let n11 = tp[i] as f64;
        let enhanced_sum = if nfg == 0.0 {
            // All-background truth: enhanced map degenerates to 1 - P_bin.
            total - npos
        } else if nfg == total {
            // All-foreground truth: enhanced map degenerates to P_bin.
            npos
        } else {
            let mu_g = nfg / total;
            let mu_p = npos / total;
            let (g1, g0) = (1.0 - mu_g, -mu_g);
            let (p1, p0) = (1.0 - mu_p, -mu_p);
            n11 * enhanced(g1, p1)
                + (nfg - n11) * enhanced(g1, p0)
                + (npos - n11) * enhanced(g0, p1)
                + (total - nfg - npos + n11) * enhanced(g0, p0)
        };
        let score = (enhanced_sum / (total - 1.0 + EPS)).clamp(0.0, 1.0);
        max = max.max(score);
        sum += score;
    }
    Ok((max, sum / NUM_THRESHOLDS as f64))
}
