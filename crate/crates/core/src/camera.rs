//! Pinhole camera model.
//!
//! Frame convention: x right, y down, z forward. Depth is always the
//! z-coordinate of a point, never the ray length.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Quaternion;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub px: f64,
    pub py: f64,
}

#[derive(Deserialize)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    px: f64,
    py: f64,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = Error;

    fn try_from(r: RawIntrinsics) -> Result<Self> {
        CameraIntrinsics::new(r.fx, r.fy, r.px, r.py)
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, px: f64, py: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive and finite, got fx={fx}, fy={fy}"
            )));
        }
        if !px.is_finite() || !py.is_finite() {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point must be finite, got ({px}, {py})"
            )));
        }
        Ok(Self { fx, fy, px, py })
    }

    pub fn as_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.px, 0.0, self.fy, self.py, 0.0, 0.0, 1.0)
    }

    /// `sqrt(1/fx² + 1/fy²)`: the scale that makes depth decoding camera-aware.
    pub fn pixel_size(&self) -> f64 {
        (1.0 / (self.fx * self.fx) + 1.0 / (self.fy * self.fy)).sqrt()
    }

    /// Intrinsics after resizing the image by `rx` horizontally and `ry`
    /// vertically. The principal point scales with the focal lengths.
    pub fn rescale(&self, rx: f64, ry: f64) -> Result<Self> {
        if !(rx > 0.0 && ry > 0.0) || !rx.is_finite() || !ry.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "resize ratios must be positive, got rx={rx}, ry={ry}"
            )));
        }
        Self::new(rx * self.fx, ry * self.fy, rx * self.px, ry * self.py)
    }

    /// Back-project pixel `(u, v)` at depth `d`.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Result<Vec3> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidDepth(d));
        }
        Ok(Vec3::new(
            (u - self.px) / self.fx * d,
            (v - self.py) / self.fy * d,
            d,
        ))
    }

    /// Pixel coordinates and depth `(u, v, d)` of a camera-frame point.
    pub fn project(&self, p: &Vec3) -> Result<(f64, f64, f64)> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera(p.z));
        }
        Ok((
            self.fx * p.x / p.z + self.px,
            self.fy * p.y / p.z + self.py,
            p.z,
        ))
    }
}

pub fn pixel_size(k: &CameraIntrinsics) -> f64 {
    k.pixel_size()
}

pub fn rescale_intrinsics(k: &CameraIntrinsics, rx: f64, ry: f64) -> Result<CameraIntrinsics> {
    k.rescale(rx, ry)
}

pub fn unproject(k: &CameraIntrinsics, u: f64, v: f64, d: f64) -> Result<Vec3> {
    k.unproject(u, v, d)
}

pub fn project(k: &CameraIntrinsics, p: &Vec3) -> Result<(f64, f64, f64)> {
    k.project(p)
}

/// Rigid camera-to-world transform: rotate, then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose", into = "RawPose")]
pub struct Pose {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<RawPose> for Pose {
    type Error = Error;

    fn try_from(r: RawPose) -> Result<Self> {
        let q = Quaternion::from(r.rotation);
        if !q.is_unit(1e-6) {
            return Err(Error::InvalidInput(format!(
                "pose rotation must be a unit quaternion, norm is {}",
                q.norm()
            )));
        }
        Ok(Pose::new(q, Vec3::from(r.translation)))
    }
}

impl From<Pose> for RawPose {
    fn from(p: Pose) -> Self {
        RawPose {
            rotation: p.rotation.to_array(),
            translation: p.translation.into(),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: Quaternion::IDENTITY,
        translation: Vec3::new(0.0, 0.0, 0.0),
    };

    /// The rotation is renormalized to unit length.
    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self {
            rotation: rotation.normalize(),
            translation,
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.conjugate();
        Pose {
            rotation: r,
            translation: -r.rotate(&self.translation),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.mul(&other.rotation).normalize(),
            translation: self.transform_point(&other.translation),
        }
    }
}

pub fn transform_point(pose: &Pose, p: &Vec3) -> Vec3 {
    pose.transform_point(p)
}
