//! On-disk detection records.

use mono3d::geometry::{Box2D, Box3D, Quaternion};
use mono3d::{ScoredBox3D, Vec3};
use serde::{Deserialize, Serialize};

/// One detection as written to JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub class: usize,
    pub score: f64,
    pub box2d: [f64; 4],
    pub center: [f64; 3],
    pub size: [f64; 3],
    /// `(w, x, y, z)`.
    pub quaternion: [f64; 4],
    #[serde(default)]
    pub camera_id: Option<usize>,
}

impl From<&ScoredBox3D> for DetectionRecord {
    fn from(d: &ScoredBox3D) -> Self {
        let c = d.box3d.center;
        Self {
            class: d.class_id,
            score: d.score,
            box2d: d.box2d.into(),
            center: [c.x, c.y, c.z],
            size: d.box3d.size,
            quaternion: d.box3d.orientation.to_array(),
            camera_id: d.camera_id,
        }
    }
}

impl From<&DetectionRecord> for ScoredBox3D {
    fn from(r: &DetectionRecord) -> Self {
        ScoredBox3D {
            box3d: Box3D::new(Vec3::from(r.center), r.size, Quaternion::from(r.quaternion)),
            box2d: Box2D::from(r.box2d),
            class_id: r.class,
            score: r.score,
            camera_id: r.camera_id,
        }
    }
}

pub fn to_records(dets: &[ScoredBox3D]) -> Vec<DetectionRecord> {
    dets.iter().map(DetectionRecord::from).collect()
}

pub fn from_records(records: &[DetectionRecord]) -> Vec<ScoredBox3D> {
    records.iter().map(ScoredBox3D::from).collect()
}
