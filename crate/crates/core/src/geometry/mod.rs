//! Box types, orientation conventions, and rotated-box overlap.

mod boxes;
mod iou;
pub mod polygon;
mod quaternion;

pub use boxes::{BevPolygon, Box2D, Box3D, CORNER_SIGNS};
pub use iou::{bev_intersection_area, iou_2d, iou_3d, iou_bev};
pub use quaternion::{allo_to_ego, ego_to_allo, ray_rotation, Quaternion, MIN_QUATERNION_NORM};
