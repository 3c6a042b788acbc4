//! Sparse and dense depth maps.

mod io;

pub use io::{read_depth_png, write_depth_png, DEPTH_PNG_SCALE};

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::Vec3;

/// Depth cap applied by default when scoring depth predictions, in meters.
pub const DEFAULT_DEPTH_CAP: f64 = 80.0;

/// Row-major grid of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite grid value {v}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Depth grid in meters where `0` marks a pixel without a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDepthMap {
    grid: Grid,
}

impl SparseDepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_grid(Grid::new(width, height, values)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if let Some(v) = grid.data.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidInput(format!("negative depth {v}")));
        }
        Ok(Self { grid })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            grid: Grid::zeros(width, height),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.grid.get(col, row)
    }

    pub fn valid_count(&self) -> usize {
        self.grid.data.iter().filter(|v| **v > 0.0).count()
    }

    /// `(col, row, depth)` of every measured pixel, row-major.
    pub fn measurements(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.grid.width;
        self.grid
            .data
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(move |(i, d)| (i % w, i / w, *d))
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Index a source coordinate scatters to when an axis of length `from` is
/// resized to `to`: `round(i · to / from)`, clamped to the target range.
pub fn scatter_index(i: usize, from: usize, to: usize) -> usize {
    let t = round_half_up(i as f64 * to as f64 / from as f64);
    (t.max(0.0) as usize).min(to - 1)
}

/// Resize a sparse map by scattering each measurement to its nearest
/// target pixel. Colliding measurements keep the smaller depth.
pub fn resize_preserving(map: &SparseDepthMap, new_w: usize, new_h: usize) -> Result<SparseDepthMap> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidArgument(format!("target size {new_w}x{new_h} must be nonzero")));
    }
    let mut out = Grid::zeros(new_w, new_h);
    for (u, v, d) in map.measurements() {
        let tu = scatter_index(u, map.width(), new_w);
        let tv = scatter_index(v, map.height(), new_h);
        let cur = out.get(tu, tv);
        if cur == 0.0 || d < cur {
            out.set(tu, tv, d);
        }
    }
    Ok(SparseDepthMap { grid: out })
}

fn align_corners_coord(i: usize, from: usize, to: usize) -> f64 {
    if to <= 1 || from <= 1 {
        0.0
    } else {
        i as f64 * (from - 1) as f64 / (to - 1) as f64
    }
}

/// Bilinear resampling with aligned corners: target corner pixels sample
/// source corner pixels exactly.
pub fn bilinear_upsample(map: &Grid, target_w: usize, target_h: usize) -> Result<Grid> {
    if map.width == 0 || map.height == 0 {
        return Err(Error::InvalidArgument("source grid is empty".into()));
    }
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidArgument(format!("target size {target_w}x{target_h} must be nonzero")));
    }
    let mut data = Vec::with_capacity(target_w * target_h);
    for ty in 0..target_h {
        let sy = align_corners_coord(ty, map.height, target_h);
        let y0 = (sy.floor() as usize).min(map.height - 1);
        let y1 = (y0 + 1).min(map.height - 1);
        let fy = sy - y0 as f64;
        for tx in 0..target_w {
            let sx = align_corners_coord(tx, map.width, target_w);
            let x0 = (sx.floor() as usize).min(map.width - 1);
            let x1 = (x0 + 1).min(map.width - 1);
            let fx = sx - x0 as f64;
            let top = if fx == 0.0 {
                map.get(x0, y0)
            } else {
                map.get(x0, y0) * (1.0 - fx) + map.get(x1, y0) * fx
            };
            let value = if fy == 0.0 {
                top
            } else {
                let bottom = if fx == 0.0 {
                    map.get(x0, y1)
                } else {
                    map.get(x0, y1) * (1.0 - fx) + map.get(x1, y1) * fx
                };
                top * (1.0 - fy) + bottom * fy
            };
            data.push(value);
        }
    }
    Grid::new(target_w, target_h, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub rmse: f64,
    /// Fraction of pixels with `max(pred/gt, gt/pred) < 1.25`.
    pub delta1: f64,
    pub valid_pixels: usize,
}

impl DepthMetrics {
    /// Unweighted mean of per-image metrics; `valid_pixels` is summed.
    pub fn mean(items: &[DepthMetrics]) -> Option<DepthMetrics> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        Some(DepthMetrics {
            abs_rel: items.iter().map(|m| m.abs_rel).sum::<f64>() / n,
            rmse: items.iter().map(|m| m.rmse).sum::<f64>() / n,
            delta1: items.iter().map(|m| m.delta1).sum::<f64>() / n,
            valid_pixels: items.iter().map(|m| m.valid_pixels).sum(),
        })
    }
}

/// Depth error over ground-truth pixels with `0 < gt ≤ cap`.
pub fn depth_metrics(pred: &Grid, gt: &SparseDepthMap, cap: f64) -> Result<DepthMetrics> {
    if !pred.same_shape(gt.grid()) {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width,
            pred.height,
            gt.width(),
            gt.height()
        )));
    }
    let (mut abs_rel, mut sq, mut good, mut n) = (0.0, 0.0, 0usize, 0usize);
    for (p, g) in pred.data.iter().zip(&gt.grid.data) {
        let g = *g;
        if !(g > 0.0 && g <= cap) {
            continue;
        }
        let err = p - g;
        abs_rel += err.abs() / g;
        sq += err * err;
        if *p > 0.0 && (p / g).max(g / p) < 1.25 {
            good += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let nf = n as f64;
    Ok(DepthMetrics {
        abs_rel: abs_rel / nf,
        rmse: (sq / nf).sqrt(),
        delta1: good as f64 / nf,
        valid_pixels: n,
    })
}

/// Pseudo-lidar point cloud: every `stride`-th pixel (in both axes) with
/// positive depth, back-projected through `k`.
pub fn lift_to_pointcloud(depth: &Grid, k: &CameraIntrinsics, stride: usize) -> Result<Vec<Vec3>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let mut pts = Vec::new();
    for v in (0..depth.height).step_by(stride) {
        for u in (0..depth.width).step_by(stride) {
            let d = depth.get(u, v);
            if d > 0.0 {
                pts.push(k.unproject(u as f64, v as f64, d)?);
            }
        }
    }
    Ok(pts)
}
