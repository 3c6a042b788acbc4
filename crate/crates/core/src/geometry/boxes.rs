use serde::{Deserialize, Serialize};

use super::polygon;
use super::quaternion::Quaternion;
use crate::Vec3;

/// Axis-aligned image-space box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Box2D {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for Box2D {
    fn from(b: [f64; 4]) -> Self {
        Box2D::new(b[0], b[1], b[2], b[3])
    }
}

impl From<Box2D> for [f64; 4] {
    fn from(b: Box2D) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl Box2D {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// Box spanned by side distances `(l, t, r, b)` from a location.
    pub fn from_ltrb(x: f64, y: f64, ltrb: [f64; 4]) -> Self {
        Self::new(x - ltrb[0], y - ltrb[1], x + ltrb[2], y + ltrb[3])
    }

    pub fn is_valid(&self) -> bool {
        self.x1 <= self.x2 && self.y1 <= self.y2
    }

    pub fn width(&self) -> f64 {
        (self.x2 - self.x1).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y2 - self.y1).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    pub fn intersection_area(&self, other: &Box2D) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// Metric 3D box: center, size `(W, H, D)` along the local x, y and z
/// axes, and egocentric orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: Vec3,
    pub size: [f64; 3],
    pub orientation: Quaternion,
}

/// Local corner signs `(sx, sy, sz)` in canonical order, matching the bit
/// patterns 000, 001, 011, 010, 110, 111, 101, 100.
pub const CORNER_SIGNS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0],
    [1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
];

impl Box3D {
    pub fn new(center: Vec3, size: [f64; 3], orientation: Quaternion) -> Self {
        Self {
            center,
            size,
            orientation,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.size.iter().all(|s| *s > 0.0 && s.is_finite())
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    /// The 8 vertices in the canonical order of [`CORNER_SIGNS`].
    pub fn corners(&self) -> [Vec3; 8] {
        let r = self.orientation.to_rotation_matrix();
        let half = Vec3::new(self.size[0], self.size[1], self.size[2]) * 0.5;
        CORNER_SIGNS.map(|s| {
            let local = Vec3::new(s[0] * half.x, s[1] * half.y, s[2] * half.z);
            self.center + r * local
        })
    }

    pub fn yaw(&self) -> f64 {
        self.orientation.yaw()
    }

    /// Ground-plane footprint using the yaw component of the orientation.
    pub fn bev_polygon(&self) -> BevPolygon {
        let (s, c) = self.yaw().sin_cos();
        let (hw, hd) = (0.5 * self.size[0], 0.5 * self.size[2]);
        // Rotation about +y by yaw, restricted to (x, z).
        let place = |lx: f64, lz: f64| {
            [
                self.center.x + c * lx + s * lz,
                self.center.z - s * lx + c * lz,
            ]
        };
        BevPolygon {
            vertices: [
                place(-hw, -hd),
                place(hw, -hd),
                place(hw, hd),
                place(-hw, hd),
            ],
        }
    }

    /// Vertical extent `(min_y, max_y)`; the box is treated as upright.
    pub fn y_extent(&self) -> (f64, f64) {
        let h = 0.5 * self.size[1];
        (self.center.y - h, self.center.y + h)
    }
}

/// Counterclockwise footprint in the `(x, z)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BevPolygon {
    pub vertices: [[f64; 2]; 4],
}

impl BevPolygon {
    pub fn signed_area(&self) -> f64 {
        polygon::signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        polygon::contains_convex(&self.vertices, p)
    }
}
