//! Center-sampled positive assignment for the dense 2D head.

use serde::{Deserialize, Serialize};

use crate::decode::feature_location;
use crate::error::{Error, Result};
use crate::geometry::{Box2D, Box3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureLevel {
    pub stride: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtInstance {
    pub box2d: Box2D,
    pub box3d: Box3D,
    pub class_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignConfig {
    /// Half-width of the center-sampling window, in strides.
    pub radius_factor: f64,
    /// Per-level `(lo, hi]` bounds on the largest side distance, in pixels.
    pub level_ranges: Vec<(f64, f64)>,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            radius_factor: 1.5,
            level_ranges: vec![
                (0.0, 64.0),
                (64.0, 128.0),
                (128.0, 256.0),
                (256.0, 512.0),
                (512.0, f64::INFINITY),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationTarget {
    pub level: usize,
    pub col: usize,
    pub row: usize,
    pub x: f64,
    pub y: f64,
    pub gt_index: Option<usize>,
    /// Defined only for positive locations.
    pub centerness: Option<f64>,
    /// Side distances `(l, t, r, b)`; zero at negative locations.
    pub ltrb: [f64; 4],
}

impl LocationTarget {
    pub fn is_positive(&self) -> bool {
        self.gt_index.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentResult {
    /// One entry per location, ordered by level then row-major.
    pub targets: Vec<LocationTarget>,
}

impl AssignmentResult {
    pub fn num_positive(&self) -> usize {
        self.targets.iter().filter(|t| t.is_positive()).count()
    }

    pub fn positives(&self) -> impl Iterator<Item = &LocationTarget> {
        self.targets.iter().filter(|t| t.is_positive())
    }
}

/// `sqrt(min(l,r)/max(l,r) · min(t,b)/max(t,b))`.
pub fn centerness(ltrb: [f64; 4]) -> f64 {
    let [l, t, r, b] = ltrb;
    ((l.min(r) / l.max(r)) * (t.min(b) / t.max(b))).sqrt()
}

/// Whether location `(x, y)` of a level with `stride` and side-distance
/// range `range` may regress `gt`; returns the side distances if so.
pub fn location_matches(x: f64, y: f64, gt: &Box2D, stride: f64, radius_factor: f64, range: (f64, f64)) -> Option<[f64; 4]> {
    let ltrb = [x - gt.x1, y - gt.y1, gt.x2 - x, gt.y2 - y];
    if ltrb.iter().any(|d| !(*d > 0.0)) {
        return None;
    }
    let (cx, cy) = gt.center();
    let radius = radius_factor * stride;
    if !((x - cx).abs() < radius && (y - cy).abs() < radius) {
        return None;
    }
    let m = ltrb.iter().cloned().fold(0.0, f64::max);
    if !(m > range.0 && m <= range.1) {
        return None;
    }
    Some(ltrb)
}

pub fn assign_targets(levels: &[FeatureLevel], gt: &[GtInstance], cfg: &AssignConfig) -> Result<AssignmentResult> {
    if cfg.level_ranges.len() != levels.len() {
        return Err(Error::Shape(format!(
            "{} levels but {} level ranges",
            levels.len(),
            cfg.level_ranges.len()
        )));
    }
    if cfg.level_ranges.iter().any(|(lo, hi)| !(lo < hi))
        || cfg.level_ranges.windows(2).any(|w| w[1].0 < w[0].0)
    {
        return Err(Error::InvalidArgument("level ranges must be increasing intervals".into()));
    }
    if !(cfg.radius_factor > 0.0) {
        return Err(Error::InvalidArgument(format!("radius factor must be positive, got {}", cfg.radius_factor)));
    }
    let mut targets = Vec::with_capacity(levels.iter().map(|l| l.width * l.height).sum());
    for (li, level) in levels.iter().enumerate() {
        let range = cfg.level_ranges[li];
        for row in 0..level.height {
            for col in 0..level.width {
                let (x, y) = feature_location(col, row, level.stride);
                // Smallest-area GT wins; equal areas keep the lower index.
                let best = gt
                    .iter()
                    .enumerate()
                    .filter_map(|(i, g)| {
                        location_matches(x, y, &g.box2d, level.stride, cfg.radius_factor, range)
                            .map(|ltrb| (i, g.box2d.area(), ltrb))
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                targets.push(match best {
                    Some((i, _, ltrb)) => LocationTarget {
                        level: li,
                        col,
                        row,
                        x,
                        y,
                        gt_index: Some(i),
                        centerness: Some(centerness(ltrb)),
                        ltrb,
                    },
                    None => LocationTarget {
                        level: li,
                        col,
                        row,
                        x,
                        y,
                        gt_index: None,
                        centerness: None,
                        ltrb: [0.0; 4],
                    },
                });
            }
        }
    }
    Ok(AssignmentResult { targets })
}
