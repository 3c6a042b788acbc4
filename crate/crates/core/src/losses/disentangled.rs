//! Corner-based 3D box loss, evaluated once per box component.

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::geometry::{Box3D, Quaternion};
use crate::Vec3;

/// A 3D box expressed by the quantities the head regresses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3DComponents {
    /// Egocentric orientation.
    pub orientation: Quaternion,
    /// Projection of the box center, in pixels.
    pub projected_center: [f64; 2],
    /// Depth of the box center, in meters.
    pub depth: f64,
    pub size: [f64; 3],
}

impl Box3DComponents {
    pub fn from_box(b: &Box3D, k: &CameraIntrinsics) -> Result<Self> {
        let (u, v, d) = k.project(&b.center)?;
        Ok(Self {
            orientation: b.orientation,
            projected_center: [u, v],
            depth: d,
            size: b.size,
        })
    }

    pub fn to_box(&self, k: &CameraIntrinsics) -> Result<Box3D> {
        let center = k.unproject(self.projected_center[0], self.projected_center[1], self.depth)?;
        Ok(Box3D::new(center, self.size, self.orientation))
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.depth > 0.0) {
            return Err(Error::InvalidInput(format!("{what} depth must be positive, got {}", self.depth)));
        }
        if self.size.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput(format!("{what} size must be positive, got {:?}", self.size)));
        }
        if !self.projected_center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("{what} projected center is not finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisentangledLoss {
    pub orientation: f64,
    pub projected_center: f64,
    pub depth: f64,
    pub size: f64,
    pub total: f64,
}

impl DisentangledLoss {
    pub fn replicas(&self) -> [f64; 4] {
        [self.orientation, self.projected_center, self.depth, self.size]
    }
}

/// Mean over corresponding corners of `|dx| + |dy| + |dz|`.
pub fn corner_l1(a: &[Vec3; 8], b: &[Vec3; 8]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs().sum()).sum::<f64>() / 8.0
}

/// Each replica swaps one predicted component into the ground truth box and
/// measures the corner distance to it. `gt` must describe `gt_box` under `k`.
pub fn disentangled_l3d(
    pred: &Box3DComponents,
    gt_box: &Box3D,
    gt: &Box3DComponents,
    k: &CameraIntrinsics,
) -> Result<DisentangledLoss> {
    gt.validate("ground-truth")?;
    pred.validate("predicted")?;
    let rebuilt = k.unproject(gt.projected_center[0], gt.projected_center[1], gt.depth)?;
    let tol = 1e-6 * (1.0 + gt_box.center.norm());
    let size_ok = gt.size.iter().zip(&gt_box.size).all(|(a, b)| (a - b).abs() <= 1e-6 * b.abs().max(1.0));
    let q_ok = gt.orientation.normalize().angular_distance(&gt_box.orientation.normalize()) <= 1e-6;
    if (rebuilt - gt_box.center).norm() > tol || !size_ok || !q_ok {
        return Err(Error::InvalidInput(
            "ground-truth components do not match the ground-truth box".into(),
        ));
    }

    // Every replica, and the target, is rebuilt from the components so that
    // an unperturbed component reproduces the target bit for bit.
    let gt_q = gt.orientation.normalize();
    let target = Box3D::new(rebuilt, gt.size, gt_q).corners();
    let loss_with = |b: Box3D| corner_l1(&b.corners(), &target);

    let orientation = loss_with(Box3D::new(rebuilt, gt.size, pred.orientation.normalize()));
    let projected_center = loss_with(Box3D::new(
        k.unproject(pred.projected_center[0], pred.projected_center[1], gt.depth)?,
        gt.size,
        gt_q,
    ));
    let depth = loss_with(Box3D::new(
        k.unproject(gt.projected_center[0], gt.projected_center[1], pred.depth)?,
        gt.size,
        gt_q,
    ));
    let size = loss_with(Box3D::new(rebuilt, pred.size, gt_q));

    Ok(DisentangledLoss {
        orientation,
        projected_center,
        depth,
        size,
        total: orientation + projected_center + depth + size,
    })
}

/// Average of the total 3D loss over the positive locations; 0 when empty.
pub fn mean_over_positives(losses: &[DisentangledLoss]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    losses.iter().map(|l| l.total).sum::<f64>() / losses.len() as f64
}
