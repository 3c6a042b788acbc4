//! KITTI plain-text label lines.
//!
//! Fields, whitespace separated: `type truncated occluded alpha x1 y1 x2 y2
//! h w l x y z ry [score]`. The location is the bottom-center of the box in
//! camera coordinates and `ry` rotates about the camera y axis, with the
//! object's length running along its local x axis at `ry = 0`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{Box2D, Box3D, Quaternion};
use crate::Vec3;

use super::{assign_difficulty, DifficultyTable, GroundTruthBox, LabelMeta};

/// Class names in class-id order.
pub const KITTI_CLASSES: [&str; 3] = ["Car", "Pedestrian", "Cyclist"];

pub fn class_id(name: &str) -> Option<usize> {
    KITTI_CLASSES.iter().position(|c| *c == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KittiLabel {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: i32,
    pub alpha: f64,
    pub box2d: Box2D,
    /// Height, width, length in meters.
    pub dimensions: [f64; 3],
    /// Bottom-center location.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiLabel {
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 15 && fields.len() != 16 {
            return Err(Error::InvalidInput(format!("label line has {} fields, expected 15 or 16", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("field {} is not a number: {:?}", i + 1, fields[i])))
        };
        let occlusion = fields[2]
            .parse::<i32>()
            .or_else(|_| num(2).map(|v| v as i32))
            .map_err(|_| Error::InvalidInput(format!("occlusion is not an integer: {:?}", fields[2])))?;
        Ok(Self {
            class_name: fields[0].to_string(),
            truncation: num(1)?,
            occlusion,
            alpha: num(3)?,
            box2d: Box2D::new(num(4)?, num(5)?, num(6)?, num(7)?),
            dimensions: [num(8)?, num(9)?, num(10)?],
            location: [num(11)?, num(12)?, num(13)?],
            rotation_y: num(14)?,
            score: if fields.len() == 16 { Some(num(15)?) } else { None },
        })
    }

    pub fn to_box3d(&self) -> Box3D {
        let [h, w, l] = self.dimensions;
        let [x, y, z] = self.location;
        Box3D::new(Vec3::new(x, y - h / 2.0, z), [w, h, l], Quaternion::from_yaw(self.rotation_y + FRAC_PI_2))
    }

    /// Inverse of [`KittiLabel::to_box3d`] for the 3D fields.
    pub fn from_box3d(class_name: &str, b: &Box3D, box2d: Box2D, score: Option<f64>) -> Self {
        let [w, h, l] = b.size;
        let ry = wrap_angle(b.yaw() - FRAC_PI_2);
        let c = b.center;
        Self {
            class_name: class_name.to_string(),
            truncation: 0.0,
            occlusion: 0,
            alpha: wrap_angle(ry - c.x.atan2(c.z)),
            box2d,
            dimensions: [h, w, l],
            location: [c.x, c.y + h / 2.0, c.z],
            rotation_y: ry,
            score,
        }
    }

    pub fn meta(&self) -> LabelMeta {
        LabelMeta {
            height_px: Some(self.box2d.height()),
            occlusion: u8::try_from(self.occlusion).ok(),
            truncation: Some(self.truncation),
        }
    }

    /// Ground-truth entry, or `None` for classes outside [`KITTI_CLASSES`].
    pub fn to_ground_truth(&self, table: &DifficultyTable) -> Option<GroundTruthBox> {
        Some(GroundTruthBox {
            box3d: self.to_box3d(),
            box2d: self.box2d,
            class_id: class_id(&self.class_name)?,
            difficulty: assign_difficulty(&self.meta(), table),
        })
    }
}

/// Wrap to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Parse every nonblank line of a label file.
pub fn parse_labels(text: &str) -> Result<Vec<KittiLabel>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| KittiLabel::parse(l).map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1))))
        .collect()
}
