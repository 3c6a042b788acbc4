//! Decoding of raw per-location head outputs into scored metric boxes.
//!
//! Every FPN level carries its own depth scale `sigma`, depth offset `mu`
//! and offset scale `alpha`; a global constant `c` ties normalized depth
//! to the camera's pixel size so that the same network output decodes to
//! proportionally larger depth under a longer focal length.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::depthmap::Grid;
use crate::error::{Error, Result};
use crate::geometry::{allo_to_ego, Box2D, Box3D, Quaternion};
use crate::Vec3;

/// Global depth constant `c` used for detector training.
pub const DEPTH_CONSTANT: f64 = 1.0 / 500.0;

/// Smallest depth scale produced by [`init_level_params`].
pub const SIGMA_FLOOR: f64 = 0.1;

/// Number of real values the 3D head emits per feature location.
pub const HEAD_3D_CHANNELS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub sigma: f64,
    pub mu: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub levels: Vec<LevelStats>,
    pub c: f64,
}

impl LevelParams {
    pub fn new(levels: Vec<LevelStats>, c: f64) -> Result<Self> {
        let p = Self { levels, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidInput(format!("depth constant c must be positive, got {}", self.c)));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if !(l.sigma > 0.0) || !(l.alpha > 0.0) || !l.mu.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "level {i}: sigma and alpha must be positive, got sigma={}, alpha={}",
                    l.sigma, l.alpha
                )));
            }
        }
        Ok(())
    }

    pub fn level(&self, level: usize) -> Result<&LevelStats> {
        self.levels.get(level).ok_or(Error::UnknownLevel {
            level,
            available: self.levels.len(),
        })
    }
}

/// Raw outputs at one feature location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadOutput {
    /// Unnormalized allocentric quaternion `(w, x, y, z)`.
    pub q_raw: [f64; 4],
    pub z_c: f64,
    pub z_p: f64,
    pub du: f64,
    pub dv: f64,
    /// Log-size deviations `(δW, δH, δD)` from the class canonical size.
    pub delta: [f64; 3],
    pub beta3d: f64,
    pub class_logits: Vec<f64>,
    /// 2D side distances `(l, t, r, b)` in pixels from the 2D box head.
    #[serde(default)]
    pub ltrb: [f64; 4],
}

impl HeadOutput {
    /// The twelve 3D-head channels in order `q, z_c, z_p, Δu, Δv, δ, β`.
    pub fn channels_3d(&self) -> [f64; HEAD_3D_CHANNELS] {
        let q = self.q_raw;
        let d = self.delta;
        [
            q[0], q[1], q[2], q[3], self.z_c, self.z_p, self.du, self.dv, d[0], d[1], d[2], self.beta3d,
        ]
    }

    pub fn from_channels(ch: &[f64; HEAD_3D_CHANNELS], class_logits: Vec<f64>, ltrb: [f64; 4]) -> Self {
        Self {
            q_raw: [ch[0], ch[1], ch[2], ch[3]],
            z_c: ch[4],
            z_p: ch[5],
            du: ch[6],
            dv: ch[7],
            delta: [ch[8], ch[9], ch[10]],
            beta3d: ch[11],
            class_logits,
            ltrb,
        }
    }
}

/// Row-major grid of head outputs for one FPN level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    pub stride: f64,
    pub width: usize,
    pub height: usize,
    pub outputs: Vec<HeadOutput>,
}

impl LevelGrid {
    /// Image-space location of cell `(col, row)`: the center of its stride
    /// window, `((col + 0.5)·s, (row + 0.5)·s)`.
    pub fn location(&self, col: usize, row: usize) -> (f64, f64) {
        feature_location(col, row, self.stride)
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.outputs.len() != self.width * self.height {
            return Err(Error::Shape(format!(
                "grid is {}x{} but holds {} outputs",
                self.width,
                self.height,
                self.outputs.len()
            )));
        }
        if !(self.stride > 0.0) {
            return Err(Error::Shape(format!("stride must be positive, got {}", self.stride)));
        }
        Ok(())
    }
}

pub fn feature_location(col: usize, row: usize, stride: f64) -> (f64, f64) {
    ((col as f64 + 0.5) * stride, (row as f64 + 0.5) * stride)
}

/// Per-class canonical box sizes `(W₀, H₀, D₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSizes {
    pub sizes: Vec<[f64; 3]>,
}

impl CanonicalSizes {
    pub fn new(sizes: Vec<[f64; 3]>) -> Result<Self> {
        if sizes.iter().flatten().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("canonical sizes must be positive".into()));
        }
        Ok(Self { sizes })
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn get(&self, class_id: usize) -> Result<[f64; 3]> {
        self.sizes.get(class_id).copied().ok_or(Error::UnknownClass {
            class: class_id,
            available: self.sizes.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox3D {
    pub box3d: Box3D,
    pub box2d: Box2D,
    pub class_id: usize,
    pub score: f64,
    pub camera_id: Option<usize>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Metric depth `d = (c / p) · (σ_l · z + μ_l)`.
pub fn decode_depth(z: f64, k: &CameraIntrinsics, params: &LevelParams, level: usize) -> Result<f64> {
    let l = params.level(level)?;
    Ok(params.c / k.pixel_size() * (l.sigma * z + l.mu))
}

/// Inverse of [`decode_depth`].
pub fn encode_depth(d: f64, k: &CameraIntrinsics, params: &LevelParams, level: usize) -> Result<f64> {
    let l = params.level(level)?;
    if l.sigma == 0.0 {
        return Err(Error::DegenerateScale);
    }
    Ok((d * k.pixel_size() / params.c - l.mu) / l.sigma)
}

/// 3D center from the feature location, its scaled offset and center depth.
pub fn decode_center(
    k: &CameraIntrinsics,
    u_b: f64,
    v_b: f64,
    du: f64,
    dv: f64,
    alpha: f64,
    d_c: f64,
) -> Result<Vec3> {
    k.unproject(u_b + alpha * du, v_b + alpha * dv, d_c)
}

pub fn decode_size(delta: [f64; 3], class_id: usize, canon: &CanonicalSizes) -> Result<[f64; 3]> {
    let s = canon.get(class_id)?;
    Ok([s[0] * delta[0].exp(), s[1] * delta[1].exp(), s[2] * delta[2].exp()])
}

/// Final candidate score: class probability times the 3D confidence.
pub fn fuse_confidence(beta3d: f64, p_class: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_class) {
        return Err(Error::InvalidProbability(p_class));
    }
    Ok(p_class * sigmoid(beta3d))
}

/// Decode every location of every level. A candidate is emitted per
/// (location, class) whose fused score is positive and at least
/// `score_floor`; candidates with nonpositive center depth are dropped.
/// Output order is level, row, column, class.
pub fn decode_detections(
    grids: &[LevelGrid],
    k: &CameraIntrinsics,
    params: &LevelParams,
    canon: &CanonicalSizes,
    score_floor: f64,
) -> Result<Vec<ScoredBox3D>> {
    if grids.len() != params.levels.len() {
        return Err(Error::Shape(format!(
            "{} grids but {} level parameter sets",
            grids.len(),
            params.levels.len()
        )));
    }
    let mut out = Vec::new();
    for (level, grid) in grids.iter().enumerate() {
        grid.check_shape()?;
        let alpha = params.level(level)?.alpha;
        for row in 0..grid.height {
            for col in 0..grid.width {
                let head = &grid.outputs[row * grid.width + col];
                if head.class_logits.len() != canon.len() {
                    return Err(Error::Shape(format!(
                        "level {level} cell ({col}, {row}) has {} class logits, expected {}",
                        head.class_logits.len(),
                        canon.len()
                    )));
                }
                let (u_b, v_b) = grid.location(col, row);
                let mut decoded: Option<(Box3D, Box2D)> = None;
                for (class_id, &logit) in head.class_logits.iter().enumerate() {
                    let score = fuse_confidence(head.beta3d, sigmoid(logit))?;
                    if !(score > 0.0) || score < score_floor {
                        continue;
                    }
                    let (base, box2d) = match decoded {
                        Some(v) => v,
                        None => {
                            let d_c = decode_depth(head.z_c, k, params, level)?;
                            if !(d_c > 0.0) {
                                break;
                            }
                            let center = decode_center(k, u_b, v_b, head.du, head.dv, alpha, d_c)?;
                            let q_allo = Quaternion::from(head.q_raw).normalize();
                            let orientation = allo_to_ego(&q_allo, &center)?;
                            let b = Box3D::new(center, [1.0; 3], orientation);
                            let b2 = Box2D::from_ltrb(u_b, v_b, head.ltrb);
                            decoded = Some((b, b2));
                            (b, b2)
                        }
                    };
                    let size = decode_size(head.delta, class_id, canon)?;
                    out.push(ScoredBox3D {
                        box3d: Box3D { size, ..base },
                        box2d,
                        class_id,
                        score,
                        camera_id: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Low-resolution dense depth of one level, decoded from the `z_p` channel.
pub fn decode_dense_depth(grid: &LevelGrid, k: &CameraIntrinsics, params: &LevelParams, level: usize) -> Result<Grid> {
    grid.check_shape()?;
    let data = grid
        .outputs
        .iter()
        .map(|h| decode_depth(h.z_p, k, params, level))
        .collect::<Result<Vec<_>>>()?;
    Grid::new(grid.width, grid.height, data)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Data-driven level parameters: `μ_l` and `σ_l` are the mean and
/// population standard deviation of the ground-truth box depths assigned
/// to level `l`, `α_l` is the level stride, and `c` is [`DEPTH_CONSTANT`].
/// Levels without boxes fall back to the statistics of all levels.
pub fn init_level_params(depths_per_level: &[Vec<f64>], strides: &[f64]) -> Result<LevelParams> {
    if depths_per_level.len() != strides.len() {
        return Err(Error::Shape(format!(
            "{} depth groups but {} strides",
            depths_per_level.len(),
            strides.len()
        )));
    }
    if let Some(s) = strides.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidArgument(format!("stride must be positive, got {s}")));
    }
    let all: Vec<f64> = depths_per_level.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::InvalidInput("no ground-truth depths on any level".into()));
    }
    if let Some(d) = all.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite depth {d}")));
    }
    let global = mean_std(&all);
    let levels = depths_per_level
        .iter()
        .zip(strides)
        .enumerate()
        .map(|(i, (depths, &stride))| {
            let (mu, std) = if depths.is_empty() {
                warn!("FPN level {i} has no assigned boxes; using global depth statistics");
                global
            } else {
                mean_std(depths)
            };
            LevelStats {
                sigma: std.max(SIGMA_FLOOR),
                mu,
                alpha: stride,
            }
        })
        .collect();
    LevelParams::new(levels, DEPTH_CONSTANT)
}
