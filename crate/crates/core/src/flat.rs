//! Array-in / array-out entry points for foreign-language wrappers.
//!
//! Every buffer is a contiguous row-major `f64` slice. Layouts:
//!
//! * intrinsics: `[fx, fy, px, py]`
//! * level parameters: `[sigma, mu, alpha]` per level, plus the scalar `c`
//! * canonical sizes: `[w, h, d]` per class
//! * head level: `height × width` cells of [`cell_width`] values: the twelve
//!   3D channels, `num_classes` class logits, then `(l, t, r, b)`
//! * detection row ([`DETECTION_COLUMNS`]): `class, score, x1, y1, x2, y2,
//!   cx, cy, cz, w, h, d, qw, qx, qy, qz, camera` (camera is -1 when unset)
//! * box row ([`BOX_COLUMNS`]): `cx, cy, cz, w, h, d, qw, qx, qy, qz`
//! * components row ([`COMPONENT_COLUMNS`]): `qw, qx, qy, qz, u, v, depth,
//!   w, h, d`
//! * ground-truth row ([`GT_COLUMNS`]): box row, `x1, y1, x2, y2, class,
//!   difficulty` (0 easy … 3 ignored)

use crate::camera::CameraIntrinsics;
use crate::decode::{
    decode_detections, CanonicalSizes, HeadOutput, LevelGrid, LevelParams, LevelStats, ScoredBox3D, HEAD_3D_CHANNELS,
};
use crate::depthmap::{depth_metrics, Grid, SparseDepthMap};
use crate::error::{Error, Result};
use crate::eval::{ap_r40, Difficulty, EvalConfig, GroundTruthBox};
use crate::geometry::{Box2D, Box3D, Quaternion};
use crate::losses::{confidence_target, dense_depth_loss, disentangled_l3d, Box3DComponents};
use crate::nms::nms_2d;
use crate::Vec3;

pub const DETECTION_COLUMNS: usize = 17;
pub const BOX_COLUMNS: usize = 10;
pub const COMPONENT_COLUMNS: usize = 10;
pub const GT_COLUMNS: usize = 16;

/// Values per head cell for `num_classes` classes.
pub fn cell_width(num_classes: usize) -> usize {
    HEAD_3D_CHANNELS + num_classes + 4
}

/// One level of head output in flat form.
#[derive(Debug, Clone, Copy)]
pub struct FlatLevel<'a> {
    pub stride: f64,
    pub width: usize,
    pub height: usize,
    pub data: &'a [f64],
}

fn rows(buf: &[f64], cols: usize, what: &str) -> Result<usize> {
    if buf.len() % cols != 0 {
        return Err(Error::Shape(format!("{what}: length {} is not a multiple of {cols}", buf.len())));
    }
    Ok(buf.len() / cols)
}

pub fn intrinsics_from(k: &[f64; 4]) -> Result<CameraIntrinsics> {
    CameraIntrinsics::new(k[0], k[1], k[2], k[3])
}

pub fn level_params_from(stats: &[f64], c: f64) -> Result<LevelParams> {
    let n = rows(stats, 3, "level parameters")?;
    LevelParams::new(
        (0..n).map(|i| LevelStats { sigma: stats[3 * i], mu: stats[3 * i + 1], alpha: stats[3 * i + 2] }).collect(),
        c,
    )
}

pub fn canonical_sizes_from(sizes: &[f64]) -> Result<CanonicalSizes> {
    let n = rows(sizes, 3, "canonical sizes")?;
    CanonicalSizes::new((0..n).map(|i| [sizes[3 * i], sizes[3 * i + 1], sizes[3 * i + 2]]).collect())
}

pub fn level_grid_from(level: &FlatLevel<'_>, num_classes: usize) -> Result<LevelGrid> {
    let w = cell_width(num_classes);
    let cells = level.width * level.height;
    if level.data.len() != cells * w {
        return Err(Error::Shape(format!(
            "head level {}x{} with {num_classes} classes needs {} values, got {}",
            level.width,
            level.height,
            cells * w,
            level.data.len()
        )));
    }
    let outputs = level
        .data
        .chunks_exact(w)
        .map(|cell| {
            let ch: [f64; HEAD_3D_CHANNELS] = cell[..HEAD_3D_CHANNELS].try_into().expect("chunk width");
            let logits = cell[HEAD_3D_CHANNELS..HEAD_3D_CHANNELS + num_classes].to_vec();
            let ltrb: [f64; 4] = cell[HEAD_3D_CHANNELS + num_classes..].try_into().expect("chunk width");
            HeadOutput::from_channels(&ch, logits, ltrb)
        })
        .collect();
    Ok(LevelGrid { stride: level.stride, width: level.width, height: level.height, outputs })
}

pub fn box_from_row(r: &[f64]) -> Box3D {
    Box3D::new(Vec3::new(r[0], r[1], r[2]), [r[3], r[4], r[5]], Quaternion::new(r[6], r[7], r[8], r[9]))
}

pub fn box_to_row(b: &Box3D) -> [f64; BOX_COLUMNS] {
    let c = b.center;
    let q = b.orientation;
    [c.x, c.y, c.z, b.size[0], b.size[1], b.size[2], q.w, q.x, q.y, q.z]
}

pub fn detection_to_row(d: &ScoredBox3D) -> [f64; DETECTION_COLUMNS] {
    let mut r = [0.0; DETECTION_COLUMNS];
    r[0] = d.class_id as f64;
    r[1] = d.score;
    r[2..6].copy_from_slice(&[d.box2d.x1, d.box2d.y1, d.box2d.x2, d.box2d.y2]);
    r[6..16].copy_from_slice(&box_to_row(&d.box3d));
    r[16] = d.camera_id.map_or(-1.0, |c| c as f64);
    r
}

pub fn detection_from_row(r: &[f64]) -> Result<ScoredBox3D> {
    let class_id = index_value(r[0], "class")?;
    let camera_id = if r[16] < 0.0 { None } else { Some(index_value(r[16], "camera")?) };
    Ok(ScoredBox3D {
        box3d: box_from_row(&r[6..16]),
        box2d: Box2D::new(r[2], r[3], r[4], r[5]),
        class_id,
        score: r[1],
        camera_id,
    })
}

fn index_value(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidInput(format!("{what} index must be a nonnegative integer, got {v}")))
    }
}

pub fn detections_from_rows(buf: &[f64]) -> Result<Vec<ScoredBox3D>> {
    rows(buf, DETECTION_COLUMNS, "detections")?;
    buf.chunks_exact(DETECTION_COLUMNS).map(detection_from_row).collect()
}

pub fn detections_to_rows(dets: &[ScoredBox3D]) -> Vec<f64> {
    dets.iter().flat_map(detection_to_row).collect()
}

pub fn components_from_row(r: &[f64]) -> Box3DComponents {
    Box3DComponents {
        orientation: Quaternion::new(r[0], r[1], r[2], r[3]),
        projected_center: [r[4], r[5]],
        depth: r[6],
        size: [r[7], r[8], r[9]],
    }
}

pub fn components_to_row(c: &Box3DComponents) -> [f64; COMPONENT_COLUMNS] {
    let q = c.orientation;
    [q.w, q.x, q.y, q.z, c.projected_center[0], c.projected_center[1], c.depth, c.size[0], c.size[1], c.size[2]]
}

fn difficulty_from_code(v: f64) -> Result<Difficulty> {
    Ok(match index_value(v, "difficulty")? {
        0 => Difficulty::Easy,
        1 => Difficulty::Moderate,
        2 => Difficulty::Hard,
        3 => Difficulty::Ignored,
        other => return Err(Error::InvalidInput(format!("unknown difficulty code {other}"))),
    })
}

pub fn difficulty_code(d: Difficulty) -> f64 {
    d as u8 as f64
}

pub fn ground_truth_from_row(r: &[f64]) -> Result<GroundTruthBox> {
    Ok(GroundTruthBox {
        box3d: box_from_row(&r[..BOX_COLUMNS]),
        box2d: Box2D::new(r[10], r[11], r[12], r[13]),
        class_id: index_value(r[14], "class")?,
        difficulty: difficulty_from_code(r[15])?,
    })
}

pub fn ground_truth_to_row(g: &GroundTruthBox) -> [f64; GT_COLUMNS] {
    let mut r = [0.0; GT_COLUMNS];
    r[..BOX_COLUMNS].copy_from_slice(&box_to_row(&g.box3d));
    r[10..14].copy_from_slice(&[g.box2d.x1, g.box2d.y1, g.box2d.x2, g.box2d.y2]);
    r[14] = g.class_id as f64;
    r[15] = difficulty_code(g.difficulty);
    r
}

/// Decoded detections as a `n × DETECTION_COLUMNS` buffer.
pub fn decode_detections_flat(
    levels: &[FlatLevel<'_>],
    num_classes: usize,
    intrinsics: &[f64; 4],
    level_stats: &[f64],
    c: f64,
    canonical: &[f64],
    score_floor: f64,
) -> Result<Vec<f64>> {
    let k = intrinsics_from(intrinsics)?;
    let params = level_params_from(level_stats, c)?;
    let canon = canonical_sizes_from(canonical)?;
    let grids = levels.iter().map(|l| level_grid_from(l, num_classes)).collect::<Result<Vec<_>>>()?;
    Ok(detections_to_rows(&decode_detections(&grids, &k, &params, &canon, score_floor)?))
}

/// `[orientation, projected_center, depth, size, total]`.
pub fn disentangled_l3d_flat(pred: &[f64], gt_box: &[f64], gt: &[f64], intrinsics: &[f64; 4]) -> Result<[f64; 5]> {
    if pred.len() != COMPONENT_COLUMNS || gt.len() != COMPONENT_COLUMNS || gt_box.len() != BOX_COLUMNS {
        return Err(Error::Shape(format!(
            "expected component rows of {COMPONENT_COLUMNS} and a box row of {BOX_COLUMNS}"
        )));
    }
    let k = intrinsics_from(intrinsics)?;
    let l = disentangled_l3d(&components_from_row(pred), &box_from_row(gt_box), &components_from_row(gt), &k)?;
    Ok([l.orientation, l.projected_center, l.depth, l.size, l.total])
}

/// `pred` holds `num_levels` maps of `width × height` back to back.
pub fn dense_depth_loss_flat(pred: &[f64], num_levels: usize, width: usize, height: usize, gt: &[f64]) -> Result<f64> {
    let n = width * height;
    if pred.len() != num_levels * n {
        return Err(Error::Shape(format!("expected {} predicted values, got {}", num_levels * n, pred.len())));
    }
    let gt = SparseDepthMap::new(width, height, gt.to_vec())?;
    let maps = pred.chunks(n.max(1)).take(num_levels).map(|c| Grid::new(width, height, c.to_vec())).collect::<Result<Vec<_>>>()?;
    dense_depth_loss(&maps, &gt)
}

pub fn confidence_target_flat(l3d: &[f64], temperature: f64) -> Result<Vec<f64>> {
    l3d.iter().map(|&l| confidence_target(l, temperature)).collect()
}

/// Surviving detection rows, best first.
pub fn nms_2d_flat(dets: &[f64], iou_threshold: f64) -> Result<Vec<f64>> {
    Ok(detections_to_rows(&nms_2d(&detections_from_rows(dets)?, iou_threshold)?))
}

/// `image_ids` tag each row of `dets` / `gts` with an image in
/// `0..num_images`. `config_json` is an [`EvalConfig`] in JSON; empty means
/// defaults.
pub fn ap_r40_flat(
    dets: &[f64],
    det_images: &[usize],
    gts: &[f64],
    gt_images: &[usize],
    num_images: usize,
    class_id: usize,
    config_json: &str,
) -> Result<f64> {
    let config: EvalConfig = if config_json.trim().is_empty() {
        EvalConfig::default()
    } else {
        serde_json::from_str(config_json).map_err(|e| Error::InvalidInput(format!("eval config: {e}")))?
    };
    let det_rows = detections_from_rows(dets)?;
    if rows(gts, GT_COLUMNS, "ground truth")? != gt_images.len() || det_rows.len() != det_images.len() {
        return Err(Error::Shape("image id count does not match row count".into()));
    }
    let mut d = vec![Vec::new(); num_images];
    let mut g = vec![Vec::new(); num_images];
    for (row, &img) in det_rows.into_iter().zip(det_images) {
        d.get_mut(img).ok_or(Error::Shape(format!("image id {img} out of range")))?.push(row);
    }
    for (row, &img) in gts.chunks_exact(GT_COLUMNS).zip(gt_images) {
        g.get_mut(img).ok_or(Error::Shape(format!("image id {img} out of range")))?.push(ground_truth_from_row(row)?);
    }
    Ok(ap_r40(&d, &g, class_id, &config)?.ap)
}

/// `[abs_rel, rmse, delta1, valid_pixels]`.
pub fn depth_metrics_flat(pred: &[f64], gt: &[f64], width: usize, height: usize, cap: f64) -> Result<[f64; 4]> {
    let m = depth_metrics(&Grid::new(width, height, pred.to_vec())?, &SparseDepthMap::new(width, height, gt.to_vec())?, cap)?;
    Ok([m.abs_rel, m.rmse, m.delta1, m.valid_pixels as f64])
}
