//! Hamilton unit quaternions in `(w, x, y, z)` order.
//!
//! Rotations are right-handed: a positive angle about `+y` carries `+z`
//! toward `+x`. The camera frame is x right, y down, z forward.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Norm below which a raw quaternion is treated as a dead activation and
/// decoded as the identity.
pub const MIN_QUATERNION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(q: [f64; 4]) -> Self {
        Quaternion::new(q[0], q[1], q[2], q[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_array()
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about `axis`. The axis need not be unit
    /// length; a zero axis yields the identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let a = axis / n;
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, a.x * s, a.y * s, a.z * s)
    }

    /// Rotation about the vertical (`+y`) axis.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(Vec3::y(), yaw)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Unit-norm copy; near-zero inputs map to the identity.
    pub fn normalize(&self) -> Self {
        let n = self.norm();
        if !(n >= MIN_QUATERNION_NORM) || !n.is_finite() {
            return Self::IDENTITY;
        }
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Hamilton product `self ∘ rhs` (apply `rhs` first, then `self`).
    pub fn mul(&self, rhs: &Quaternion) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.to_rotation_matrix() * v
    }

    /// Rotation matrix of the normalized quaternion.
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let q = self.normalize();
        let (w, x, y, z) = (q.w, q.x, q.y, q.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Angle in `[0, π]` of the relative rotation between two orientations.
    pub fn angular_distance(&self, other: &Quaternion) -> f64 {
        let rel = self.normalize().conjugate().mul(&other.normalize());
        let v = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt();
        2.0 * v.atan2(rel.w.abs())
    }

    /// Heading in the x–z ground plane: the angle of the rotated local `+z`
    /// axis, measured from `+z` toward `+x`.
    pub fn yaw(&self) -> f64 {
        let h = self.rotate(&Vec3::z());
        h.x.atan2(h.z)
    }
}

/// Minimal geodesic rotation taking the optical axis `(0, 0, 1)` onto `ray`.
pub fn ray_rotation(ray: &Vec3) -> Result<Quaternion> {
    let n = ray.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidRay(format!("zero or non-finite norm {n}")));
    }
    if !(ray.z > 0.0) {
        return Err(Error::InvalidRay(format!(
            "ray must point forward, got z = {}",
            ray.z
        )));
    }
    let r = ray / n;
    let axis = Vec3::z().cross(&r);
    let s = axis.norm();
    if s == 0.0 {
        return Ok(Quaternion::IDENTITY);
    }
    Ok(Quaternion::from_axis_angle(axis, s.atan2(r.z)))
}

/// Egocentric orientation of an object seen along `ray` whose orientation
/// relative to that ray is `q_allo`.
pub fn allo_to_ego(q_allo: &Quaternion, ray: &Vec3) -> Result<Quaternion> {
    let q_ray = ray_rotation(ray)?;
    Ok(q_ray.mul(&q_allo.normalize()).normalize())
}

pub fn ego_to_allo(q_ego: &Quaternion, ray: &Vec3) -> Result<Quaternion> {
    let q_ray = ray_rotation(ray)?;
    Ok(q_ray.conjugate().mul(&q_ego.normalize()).normalize())
}
