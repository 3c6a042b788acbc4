//! Training objectives: 2D head terms, the disentangled 3D box loss, the
//! self-supervised confidence term and the dense depth loss.

mod assign;
mod disentangled;

pub use assign::{
    assign_targets, centerness, location_matches, AssignConfig, AssignmentResult, FeatureLevel, GtInstance,
    LocationTarget,
};
pub use disentangled::{corner_l1, disentangled_l3d, mean_over_positives, Box3DComponents, DisentangledLoss};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::depthmap::{Grid, SparseDepthMap};
use crate::error::{Error, Result};
use crate::geometry::{iou_2d, Box2D};

/// Lower bound applied to IoU before taking its logarithm.
pub const IOU_FLOOR: f64 = 1e-9;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x == f64::INFINITY {
        return x;
    }
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binary cross entropy of `sigmoid(logit)` against `target`.
pub fn bce_with_logits(logit: f64, target: f64) -> f64 {
    // -t·ln σ(x) - (1-t)·ln(1-σ(x)), with ln σ(x) = -softplus(-x).
    let pos = if target > 0.0 { target * softplus(-logit) } else { 0.0 };
    let neg = if target < 1.0 { (1.0 - target) * softplus(logit) } else { 0.0 };
    pos + neg
}

/// `-ln(IoU)` of the boxes spanned by two `(l, t, r, b)` offset sets around
/// the same location.
pub fn iou_loss_2d(pred: [f64; 4], gt: [f64; 4]) -> Result<f64> {
    if pred.iter().chain(&gt).any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::InvalidInput(format!("offsets must be finite and nonnegative: {pred:?}, {gt:?}")));
    }
    let g = Box2D::from_ltrb(0.0, 0.0, gt);
    if !(g.area() > 0.0) {
        return Err(Error::InvalidInput(format!("degenerate ground-truth offsets {gt:?}")));
    }
    let p = Box2D::from_ltrb(0.0, 0.0, pred);
    Ok(-iou_2d(&p, &g).max(IOU_FLOOR).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: 0.25, gamma: 2.0 }
    }
}

/// One-vs-all focal loss of a single location, summed over classes.
/// `target` is `None` for background.
pub fn focal_loss(logits: &[f64], target: Option<usize>, params: FocalParams) -> f64 {
    let FocalParams { alpha, gamma } = params;
    logits
        .iter()
        .enumerate()
        .map(|(c, &x)| {
            let p = crate::decode::sigmoid(x);
            if Some(c) == target {
                alpha * (1.0 - p).powf(gamma) * softplus(-x)
            } else {
                (1.0 - alpha) * p.powf(gamma) * softplus(x)
            }
        })
        .sum()
}

/// Focal loss summed over locations and divided by the number of positive
/// locations (at least one).
pub fn classification_loss<'a, I>(locations: I, params: FocalParams) -> f64
where
    I: IntoIterator<Item = (&'a [f64], Option<usize>)>,
{
    let (mut sum, mut positives) = (0.0, 0usize);
    for (logits, target) in locations {
        sum += focal_loss(logits, target, params);
        positives += target.is_some() as usize;
    }
    sum / positives.max(1) as f64
}

pub fn centerness_loss(logit: f64, target: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidProbability(target));
    }
    Ok(bce_with_logits(logit, target))
}

/// Self-supervised confidence target `exp(-l3d / T)`.
pub fn confidence_target(l3d: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if !(l3d >= 0.0) {
        return Err(Error::InvalidInput(format!("3D loss must be nonnegative, got {l3d}")));
    }
    Ok((-l3d / temperature).exp())
}

pub fn confidence_loss(beta3d: f64, p_star: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_star) {
        return Err(Error::InvalidProbability(p_star));
    }
    Ok(bce_with_logits(beta3d, p_star))
}

/// Sum over levels of the mean absolute error on pixels where the sparse
/// ground truth is positive.
pub fn dense_depth_loss(pred_maps: &[Grid], gt: &SparseDepthMap) -> Result<f64> {
    for (i, m) in pred_maps.iter().enumerate() {
        if !m.same_shape(gt.grid()) {
            return Err(Error::Shape(format!(
                "level {i} depth map is {}x{}, ground truth is {}x{}",
                m.width(),
                m.height(),
                gt.width(),
                gt.height()
            )));
        }
    }
    let valid = gt.valid_count();
    if valid == 0 {
        warn!("dense depth loss: ground truth has no valid pixels, loss set to 0");
        return Ok(0.0);
    }
    let mut total = 0.0;
    for m in pred_maps {
        let err: f64 = gt
            .grid()
            .data()
            .iter()
            .zip(m.data())
            .filter(|(g, _)| **g > 0.0)
            .map(|(g, p)| (g - p).abs())
            .sum();
        total += err / valid as f64;
    }
    Ok(total)
}

/// Terms of the dense 2D detection loss.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct L2dParts {
    pub reg: f64,
    pub cls: f64,
    pub ctr: f64,
}

impl L2dParts {
    pub fn sum(&self) -> f64 {
        self.reg + self.cls + self.ctr
    }
}

pub fn total_loss(l2d: L2dParts, l3d: f64, conf: f64) -> Result<f64> {
    for (term, v) in [("reg", l2d.reg), ("cls", l2d.cls), ("ctr", l2d.ctr), ("3d", l3d), ("conf", conf)] {
        if !v.is_finite() {
            return Err(Error::NonFinite { term, value: v });
        }
        if v < 0.0 {
            return Err(Error::InvalidInput(format!("loss term `{term}` is negative: {v}")));
        }
    }
    Ok(l2d.sum() + l3d + conf)
}
