//! Greedy non-maximum suppression, in the image plane and in bird's-eye view
//! across several calibrated cameras.

use crate::camera::Pose;
use crate::decode::ScoredBox3D;
use crate::error::{Error, Result};
use crate::geometry::{iou_2d, iou_bev, Box3D};

pub const DEFAULT_NMS_2D_THRESHOLD: f64 = 0.3;

fn check_threshold(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("IoU threshold must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn check_scores(dets: &[ScoredBox3D]) -> Result<()> {
    match dets.iter().find(|d| !(0.0..=1.0).contains(&d.score)) {
        Some(d) => Err(Error::InvalidProbability(d.score)),
        None => Ok(()),
    }
}

/// Indices kept by greedy suppression: candidates are visited by descending
/// score (ties in input order) and dropped when `overlap` with any kept one
/// reaches `threshold`.
pub fn greedy_nms<T>(items: &[T], score: impl Fn(&T) -> f64, overlap: impl Fn(&T, &T) -> f64, threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| score(&items[b]).total_cmp(&score(&items[a])));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&j| overlap(&items[j], &items[i]) < threshold) {
            kept.push(i);
        }
    }
    kept
}

/// Image-plane NMS on the 2D boxes. Output is sorted by score, descending.
pub fn nms_2d(dets: &[ScoredBox3D], iou_threshold: f64) -> Result<Vec<ScoredBox3D>> {
    check_threshold(iou_threshold)?;
    check_scores(dets)?;
    let kept = greedy_nms(dets, |d| d.score, |a, b| iou_2d(&a.box2d, &b.box2d), iou_threshold);
    Ok(kept.into_iter().map(|i| dets[i]).collect())
}

/// Express a camera-frame box in the frame `pose` maps into.
pub fn box_to_global(b: &Box3D, pose: &Pose) -> Box3D {
    Box3D::new(
        pose.transform_point(&b.center),
        b.size,
        pose.rotation.mul(&b.orientation).normalize(),
    )
}

/// Moves every camera's detections into the shared frame (`poses[i]` maps
/// camera `i` into it) and suppresses duplicates by BEV IoU. Survivors carry
/// their source camera in `camera_id`.
pub fn nms_bev_global(dets_per_camera: &[Vec<ScoredBox3D>], poses: &[Pose], iou_threshold: f64) -> Result<Vec<ScoredBox3D>> {
    check_threshold(iou_threshold)?;
    let mut global = Vec::new();
    for (cam, dets) in dets_per_camera.iter().enumerate() {
        let pose = poses.get(cam).ok_or(Error::MissingPose(Some(cam)))?;
        check_scores(dets)?;
        global.extend(dets.iter().map(|d| ScoredBox3D {
            box3d: box_to_global(&d.box3d, pose),
            camera_id: Some(cam),
            ..*d
        }));
    }
    let kept = greedy_nms(&global, |d| d.score, |a, b| iou_bev(&a.box3d, &b.box3d), iou_threshold);
    Ok(kept.into_iter().map(|i| global[i]).collect())
}

/// Same as [`nms_bev_global`] for a flat list whose `camera_id` selects the
/// pose.
pub fn nms_bev_tagged(dets: &[ScoredBox3D], poses: &[Pose], iou_threshold: f64) -> Result<Vec<ScoredBox3D>> {
    check_threshold(iou_threshold)?;
    check_scores(dets)?;
    let global = dets
        .iter()
        .map(|d| {
            let cam = d.camera_id.ok_or(Error::MissingPose(None))?;
            let pose = poses.get(cam).ok_or(Error::MissingPose(Some(cam)))?;
            Ok(ScoredBox3D { box3d: box_to_global(&d.box3d, pose), ..*d })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept = greedy_nms(&global, |d| d.score, |a, b| iou_bev(&a.box3d, &b.box3d), iou_threshold);
    Ok(kept.into_iter().map(|i| global[i]).collect())
}
