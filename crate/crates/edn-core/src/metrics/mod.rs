//! Saliency evaluation: MAE, maximum/weighted F-measure, S-measure,
//! E-measure, exact distance transform and the boundary/center/other
//! region-partition analysis.

pub mod alignment;
pub mod edt;
pub mod fmeasure;
pub mod region;
pub mod structure;

pub use alignment::e_measure;
pub use edt::{exact_edt, squared_edt_with_indices};
pub use fmeasure::{f_beta_max, f_weighted};
pub use region::{partition_regions, region_mae, relative_improvement, RegionLabel, RegionPartition};
pub use structure::s_measure;

use crate::error::{EdnError, Result};
use crate::tensor::Tensor4;

/// beta^2 used by the F-measure, weighting precision over recall.
pub const FBETA_BETA2: f64 = 0.3;
/// S-measure object/region mixing weight.
pub const SMEASURE_ALPHA: f64 = 0.5;
/// Number of binarization thresholds `{i/255 : i = 0..255}`.
pub const NUM_THRESHOLDS: usize = 256;

/// Single-channel real-valued map with every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    h: usize,
    w: usize,
    data: Vec<f32>,
}

impl SaliencyMap {
    pub fn new(h: usize, w: usize, data: Vec<f32>) -> Result<Self> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(EdnError::dimension(format!(
                "saliency map data length {} does not match {h}x{w}",
                data.len()
            )));
        }
        if data.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(EdnError::Domain(
                "saliency map values must lie in [0, 1]".into(),
            ));
        }
        Ok(SaliencyMap { h, w, data })
    }

    /// View a `(1, 1, h, w)` prediction tensor as a saliency map.
    pub fn from_prediction(t: &Tensor4) -> Result<Self> {
        let (n, c, h, w) = t.dims();
        if n != 1 || c != 1 {
            return Err(EdnError::dimension(format!(
                "prediction tensor must be (1,1,h,w), got {:?}",
                t.dims()
            )));
        }
        SaliencyMap::new(h, w, t.data().to_vec())
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / (self.h * self.w) as f64
    }
}

/// Binary ground-truth mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GtMask {
    h: usize,
    w: usize,
    data: Vec<bool>,
}

impl GtMask {
    pub fn new(h: usize, w: usize, data: Vec<bool>) -> Result<Self> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(EdnError::dimension(format!(
                "mask data length {} does not match {h}x{w}",
                data.len()
            )));
        }
        Ok(GtMask { h, w, data })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn fg_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Perfect prediction for this mask (1.0 on fg, 0.0 on bg).
    pub fn to_map(&self) -> SaliencyMap {
        SaliencyMap {
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

pub(crate) fn check_dims(p: &SaliencyMap, g: &GtMask) -> Result<()> {
    if p.dims() != g.dims() {
        return Err(EdnError::dimension(format!(
            "prediction {:?} and mask {:?} dims differ",
            p.dims(),
            g.dims()
        )));
    }
    Ok(())
}

/// Mean absolute per-pixel error.
pub fn mae(p: &SaliencyMap, g: &GtMask) -> Result<f64> {
    check_dims(p, g)?;
    let sum: f64 = p
        .data
        .iter()
        .zip(&g.data)
        .map(|(&pv, &gv)| (pv as f64 - if gv { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(sum / (p.h * p.w) as f64)
}

/// Per-threshold binarization counts with the predicate `p >= i/255`:
/// `(positives, true_positives)` for every i in 0..256.
pub(crate) fn binarization_counts(p: &SaliencyMap, g: &GtMask) -> (Vec<u64>, Vec<u64>) {
    let ts: Vec<f64> = (0..NUM_THRESHOLDS).map(|i| i as f64 / 255.0).collect();
    let mut hist_pos = vec![0u64; NUM_THRESHOLDS + 1];
    let mut hist_tp = vec![0u64; NUM_THRESHOLDS + 1];
    for (&pv, &gv) in p.data.iter().zip(&g.data) {
        let v = pv as f64;
        // Number of thresholds this pixel passes; identical outcome to the
        // per-threshold comparison loop because the predicate is shared.
        let k = ts.partition_point(|&t| v >= t);
        hist_pos[k] += 1;
        if gv {
            hist_tp[k] += 1;
        }
    }
    let mut pos = vec![0u64; NUM_THRESHOLDS];
    let mut tp = vec![0u64; NUM_THRESHOLDS];
    let mut acc_pos = 0u64;
    let mut acc_tp = 0u64;
    for i in (0..NUM_THRESHOLDS).rev() {
        acc_pos += hist_pos[i + 1];
        acc_tp += hist_tp[i + 1];
        pos[i] = acc_pos;
        tp[i] = acc_tp;
    }
    (pos, tp)
}

/// Per-image metric values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub mae: f64,
    pub f_max: f64,
    pub f_weighted: f64,
    pub s_measure: f64,
    pub e_max: f64,
    pub e_mean: f64,
}

/// All six metrics for one prediction/ground-truth pair. The mask must have
/// at least one foreground pixel (F-measures are undefined otherwise).
pub fn evaluate_pair(p: &SaliencyMap, g: &GtMask) -> Result<MetricsRow> {
    let (e_max, e_mean) = e_measure(p, g)?;
    Ok(MetricsRow {
        mae: mae(p, g)?,
        f_max: f_beta_max(p, g, FBETA_BETA2)?,
        f_weighted: f_weighted(p, g)?,
        s_measure: s_measure(p, g, SMEASURE_ALPHA)?,
        e_max,
        e_mean,
    })
}

/// Arithmetic mean of per-image rows; NaN row when `rows` is empty.
pub fn aggregate(rows: &[MetricsRow]) -> MetricsRow {
    if rows.is_empty() {
        return MetricsRow {
            mae: f64::NAN,
            f_max: f64::NAN,
            f_weighted: f64::NAN,
            s_measure: f64::NAN,
            e_max: f64::NAN,
            e_mean: f64::NAN,
        };
    }
    let n = rows.len() as f64;
    MetricsRow {
        mae: rows.iter().map(|r| r.mae).sum::<f64>() / n,
        f_max: rows.iter().map(|r| r.f_max).sum::<f64>() / n,
        f_weighted: rows.iter().map(|r| r.f_weighted).sum::<f64>() / n,
        s_measure: rows.iter().map(|r| r.s_measure).sum::<f64>() / n,
        e_max: rows.iter().map(|r| r.e_max).sum::<f64>() / n,
        e_mean: rows.iter().map(|r| r.e_mean).sum::<f64>() / n,
    }
}

/// Per-image rows (None = skipped) plus the aggregate over evaluated rows.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub per_image: Vec<(String, Option<MetricsRow>)>,
    pub aggregate: MetricsRow,
}
