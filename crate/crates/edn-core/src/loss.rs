//! Hybrid BCE + Dice loss, the deep-supervision total, analytic gradients
//! with a finite-difference checker, and the poly learning-rate schedule.
//!
//! Losses and gradients are evaluated in 64-bit: the finite-difference
//! tolerances are unreachable in f32.

use crate::error::{EdnError, Result};
use crate::metrics::{GtMask, SaliencyMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clamp applied to predictions before the logarithms in BCE.
pub const BCE_EPS: f64 = 1e-7;
/// Smoothing added to numerator and denominator of the Dice ratio.
pub const DICE_EPS: f64 = 1.0;

/// One loss evaluation; `total = bce + dice` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub bce: f64,
    pub dice: f64,
    pub total: f64,
}

/// Poly learning-rate schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub init_lr: f64,
    pub power: f64,
    pub max_epoch: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            init_lr: 5e-5,
            power: 0.9,
            max_epoch: 30,
        }
    }
}

/// `init_lr * (1 - n/max_epoch)^power`; monotone non-increasing in `n`.
pub fn poly_lr(sched: &ScheduleSpec, epoch: usize) -> Result<f64> {
    if sched.init_lr <= 0.0 {
        return Err(EdnError::Domain(format!(
            "init_lr must be > 0, got {}",
            sched.init_lr
        )));
    }
    if epoch > sched.max_epoch {
        return Err(EdnError::Domain(format!(
            "epoch {} out of range 0..={}",
            epoch, sched.max_epoch
        )));
    }
    let frac = 1.0 - epoch as f64 / sched.max_epoch as f64;
    Ok(sched.init_lr * frac.powf(sched.power))
}

fn mask_to_f64(g: &GtMask) -> Vec<f64> {
    g.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

fn map_to_f64(p: &SaliencyMap) -> Vec<f64> {
    p.data().iter().map(|&v| v as f64).collect()
}

fn check_dims(p: &SaliencyMap, g: &GtMask) -> Result<()> {
    if p.dims() != g.dims() {
        return Err(EdnError::dimension(format!(
            "loss requires matching dims: prediction {:?} vs mask {:?}",
            p.dims(),
            g.dims()
        )));
    }
    Ok(())
}

/// Mean negated binary cross-entropy over pixels, predictions clamped to
/// `[BCE_EPS, 1 - BCE_EPS]`. Always >= 0.
pub fn bce_loss(p: &SaliencyMap, g: &GtMask) -> Result<f64> {
    check_dims(p, g)?;
    Ok(bce_loss_f64(&map_to_f64(p), &mask_to_f64(g)))
}

pub fn bce_loss_f64(p: &[f64], g: &[f64]) -> f64 {
    assert_eq!(p.len(), g.len());
    let n = p.len() as f64;
    let sum: f64 = p
        .iter()
        .zip(g)
        .map(|(&pv, &gv)| {
            let pc = pv.clamp(BCE_EPS, 1.0 - BCE_EPS);
            gv * pc.ln() + (1.0 - gv) * (1.0 - pc).ln()
        })
        .sum();
    -sum / n
}

/// Smoothed Dice loss: `1 - (2*sum(G*P) + eps) / (sum(G) + sum(P) + eps)`.
pub fn dice_loss(p: &SaliencyMap, g: &GtMask) -> Result<f64> {
    check_dims(p, g)?;
    Ok(dice_loss_f64(&map_to_f64(p), &mask_to_f64(g)))
}

pub fn dice_loss_f64(p: &[f64], g: &[f64]) -> f64 {
    assert_eq!(p.len(), g.len());
    let inter: f64 = p.iter().zip(g).map(|(&pv, &gv)| pv * gv).sum();
    let sum_p: f64 = p.iter().sum();
    let sum_g: f64 = g.iter().sum();
    1.0 - (2.0 * inter + DICE_EPS) / (sum_g + sum_p + DICE_EPS)
}

pub fn hybrid_loss(p: &SaliencyMap, g: &GtMask) -> Result<LossValue> {
    check_dims(p, g)?;
    let (pv, gv) = (map_to_f64(p), mask_to_f64(g));
    Ok(hybrid_loss_f64(&pv, &gv))
}

pub fn hybrid_loss_f64(p: &[f64], g: &[f64]) -> LossValue {
    let bce = bce_loss_f64(p, g);
    let dice = dice_loss_f64(p, g);
    LossValue {
        bce,
        dice,
        total: bce + dice,
    }
}

/// Deep-supervision total: sum of hybrid losses over the five side outputs.
pub fn total_deep_supervision_loss(preds: &[SaliencyMap], g: &GtMask) -> Result<f64> {
    if preds.len() != 5 {
        return Err(EdnError::dimension(format!(
            "deep supervision expects 5 predictions, got {}",
            preds.len()
        )));
    }
    let mut total = 0.0;
    for p in preds {
        total += hybrid_loss(p, g)?.total;
    }
    Ok(total)
}

/// Analytic per-pixel derivative of `bce + dice` with respect to P.
pub fn loss_grad(p: &SaliencyMap, g: &GtMask) -> Result<Vec<f64>> {
    check_dims(p, g)?;
    Ok(loss_grad_f64(&map_to_f64(p), &mask_to_f64(g)))
}

pub fn loss_grad_f64(p: &[f64], g: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), g.len());
    let n = p.len() as f64;
    let inter: f64 = p.iter().zip(g).map(|(&pv, &gv)| pv * gv).sum();
    let sum_p: f64 = p.iter().sum();
    let sum_g: f64 = g.iter().sum();
    let denom = sum_g + sum_p + DICE_EPS;
    let numer = 2.0 * inter + DICE_EPS;
    p.iter()
        .zip(g)
        .map(|(&pv, &gv)| {
            // d/dP of -mean(G ln P + (1-G) ln(1-P)); clamp region excluded by
            // the caller's precondition that P lies strictly inside (eps, 1-eps).
            let bce = -(gv / pv - (1.0 - gv) / (1.0 - pv)) / n;
            // Quotient rule on the smoothed global Dice ratio.
            let dice = -(2.0 * gv * denom - numer) / (denom * denom);
            bce + dice
        })
        .collect()
}

#[cfg(test)]
fn bce_grad_f64(p: &[f64], g: &[f64]) -> Vec<f64> {
    let n = p.len() as f64;
    p.iter()
        .zip(g)
        .map(|(&pv, &gv)| -(gv / pv - (1.0 - gv) / (1.0 - pv)) / n)
        .collect()
}

/// Outcome of the finite-difference gradient suite.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub instances: usize,
    pub pixels_per_instance: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare `loss_grad` against central finite differences (step 1e-4, 64-bit)
/// on `instances` random `side x side` prediction/mask pairs.
pub fn run_grad_check(seed: u64, instances: usize, side: usize, tolerance: f64) -> GradCheckReport {
    const STEP: f64 = 1e-4;
    let mut max_rel = 0.0f64;
    for inst in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(inst as u64));
        let len = side * side;
        let p: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..0.95)).collect();
        let g: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let analytic = loss_grad_f64(&p, &g);
        for j in 0..len {
            let mut plus = p.clone();
            plus[j] += STEP;
            let mut minus = p.clone();
            minus[j] -= STEP;
            let fd = (hybrid_loss_f64(&plus, &g).total - hybrid_loss_f64(&minus, &g).total)
                / (2.0 * STEP);
            let rel = (analytic[j] - fd).abs() / fd.abs().max(1e-12);
            max_rel = max_rel.max(rel);
        }
    }
    GradCheckReport {
        instances,
        pixels_per_instance: side * side,
        max_rel_err: max_rel,
        tolerance,
        pass: max_rel <= tolerance,
    }
}
