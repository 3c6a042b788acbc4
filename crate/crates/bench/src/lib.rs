//! Seeded inputs shared by the benchmarks.

use mono3d::decode::{HeadOutput, LevelGrid, LevelParams, LevelStats, DEPTH_CONSTANT};
use mono3d::eval::{Difficulty, GroundTruthBox};
use mono3d::geometry::{Box2D, Box3D, Quaternion};
use mono3d::{CameraIntrinsics, CanonicalSizes, ScoredBox3D, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kitti_k() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5377, 721.5377, 609.5593, 172.854).unwrap()
}

pub fn random_box(r: &mut ChaCha8Rng) -> Box3D {
    Box3D::new(
        Vec3::new(r.random_range(-20.0..20.0), r.random_range(0.5..2.0), r.random_range(5.0..60.0)),
        [r.random_range(0.5..2.0), r.random_range(1.0..2.0), r.random_range(0.5..5.0)],
        Quaternion::from_yaw(r.random_range(-3.1..3.1)),
    )
}

/// Pairs whose centers are close enough to overlap most of the time.
pub fn overlapping_pairs(n: usize, seed: u64) -> Vec<(Box3D, Box3D)> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let a = random_box(&mut r);
            let mut b = random_box(&mut r);
            b.center = a.center + Vec3::new(r.random_range(-1.0..1.0), r.random_range(-0.3..0.3), r.random_range(-1.0..1.0));
            (a, b)
        })
        .collect()
}

pub fn random_detections(n: usize, seed: u64) -> Vec<ScoredBox3D> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let (x, y) = (r.random_range(0.0..1200.0), r.random_range(0.0..350.0));
            ScoredBox3D {
                box3d: random_box(&mut r),
                box2d: Box2D::new(x, y, x + r.random_range(10.0..200.0), y + r.random_range(10.0..120.0)),
                class_id: r.random_range(0..3),
                score: r.random_range(0.0..1.0),
                camera_id: Some(r.random_range(0..6)),
            }
        })
        .collect()
}

pub fn ground_truth_for(dets: &[ScoredBox3D]) -> Vec<GroundTruthBox> {
    dets.iter()
        .map(|d| GroundTruthBox { box3d: d.box3d, box2d: d.box2d, class_id: d.class_id, difficulty: Difficulty::Moderate })
        .collect()
}

/// Five-level head outputs for a 1242x375 image with random channels.
pub fn head_grids(seed: u64) -> (Vec<LevelGrid>, LevelParams, CanonicalSizes) {
    let mut r = rng(seed);
    let mut grids = Vec::new();
    let mut stats = Vec::new();
    for level in 0..5 {
        let stride = 8.0 * (1 << level) as f64;
        let (w, h) = ((1242.0 / stride).ceil() as usize, (375.0 / stride).ceil() as usize);
        let outputs = (0..w * h)
            .map(|_| {
                let mut ch = [0.0; 12];
                ch.iter_mut().for_each(|c| *c = r.random_range(-1.0..1.0));
                let logits = (0..3).map(|_| r.random_range(-6.0..2.0)).collect();
                HeadOutput::from_channels(&ch, logits, [r.random_range(1.0..50.0), r.random_range(1.0..50.0), r.random_range(1.0..50.0), r.random_range(1.0..50.0)])
            })
            .collect();
        grids.push(LevelGrid { stride, width: w, height: h, outputs });
        stats.push(LevelStats { sigma: 5.0, mu: 15.0 + 5.0 * level as f64, alpha: stride });
    }
    let params = LevelParams::new(stats, DEPTH_CONSTANT).unwrap();
    let canon = CanonicalSizes::new(vec![[1.6, 1.5, 3.9], [0.6, 1.75, 0.8], [0.6, 1.75, 1.75]]).unwrap();
    (grids, params, canon)
}
