//! Geometry, decoding, losses, suppression and evaluation for camera-aware
//! monocular 3D object detection.
//!
//! Conventions: camera frame with x right, y down, z forward; depth is the z
//! coordinate; quaternions are Hamilton `(w, x, y, z)`; box sizes are
//! `(W, H, D)` along the box's local x, y, z axes.

pub mod camera;
pub mod decode;
pub mod depthmap;
pub mod error;
pub mod eval;
pub mod flat;
pub mod geometry;
pub mod losses;
pub mod nms;

/// Column 3-vector used for points and directions.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use camera::{CameraIntrinsics, Pose};
pub use decode::{CanonicalSizes, HeadOutput, LevelGrid, LevelParams, LevelStats, ScoredBox3D};
pub use depthmap::{DepthMetrics, Grid, SparseDepthMap};
pub use error::{Error, Result};
pub use eval::{Difficulty, EvalConfig, GroundTruthBox, MatchMetric};
pub use geometry::{Box2D, Box3D, Quaternion};
pub use losses::{AssignConfig, AssignmentResult, Box3DComponents, DisentangledLoss};
