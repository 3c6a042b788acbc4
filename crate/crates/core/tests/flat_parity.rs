//! The flat-buffer entry points must agree bit for bit with the typed API.

use mono3d::camera::CameraIntrinsics;
use mono3d::decode::{decode_detections, CanonicalSizes, HeadOutput, LevelGrid, LevelParams, LevelStats, ScoredBox3D};
use mono3d::depthmap::{depth_metrics, Grid, SparseDepthMap};
use mono3d::eval::{ap_r40, Difficulty, EvalConfig, GroundTruthBox};
use mono3d::flat::*;
use mono3d::geometry::{Box2D, Box3D, Quaternion};
use mono3d::losses::{confidence_target, dense_depth_loss, disentangled_l3d, Box3DComponents};
use mono3d::nms::nms_2d;
use mono3d::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 100;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_k(r: &mut ChaCha8Rng) -> [f64; 4] {
    [r.random_range(300.0..1500.0), r.random_range(300.0..1500.0), r.random_range(200.0..800.0), r.random_range(100.0..400.0)]
}

fn random_box(r: &mut ChaCha8Rng) -> Box3D {
    Box3D::new(
        Vec3::new(r.random_range(-10.0..10.0), r.random_range(0.5..2.0), r.random_range(5.0..50.0)),
        [r.random_range(0.5..2.5), r.random_range(1.0..2.0), r.random_range(0.5..5.0)],
        Quaternion::from_yaw(r.random_range(-3.1..3.1)),
    )
}

fn random_det(r: &mut ChaCha8Rng) -> ScoredBox3D {
    let x = r.random_range(0.0..200.0);
    let y = r.random_range(0.0..100.0);
    ScoredBox3D {
        box3d: random_box(r),
        box2d: Box2D::new(x, y, x + r.random_range(5.0..80.0), y + r.random_range(5.0..60.0)),
        class_id: r.random_range(0..3),
        score: r.random_range(0.0..1.0),
        camera_id: if r.random_bool(0.5) { Some(r.random_range(0..6)) } else { None },
    }
}

#[test]
fn decode_parity() {
    let mut r = rng(1);
    for _ in 0..CASES {
        let num_classes = r.random_range(1..4);
        let k = random_k(&mut r);
        let n_levels = r.random_range(1..3);
        let stats: Vec<f64> = (0..n_levels)
            .flat_map(|i| [r.random_range(1.0..10.0), r.random_range(5.0..30.0), 8.0 * (1 << i) as f64])
            .collect();
        let canon: Vec<f64> = (0..num_classes * 3).map(|_| r.random_range(0.5..4.0)).collect();
        let shapes: Vec<(usize, usize, f64)> = (0..n_levels).map(|i| (r.random_range(0..4), r.random_range(0..4), 8.0 * (1 << i) as f64)).collect();
        let bufs: Vec<Vec<f64>> = shapes
            .iter()
            .map(|&(w, h, _)| (0..w * h * cell_width(num_classes)).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let levels: Vec<FlatLevel> = shapes
            .iter()
            .zip(&bufs)
            .map(|(&(width, height, stride), data)| FlatLevel { stride, width, height, data })
            .collect();
        let flat = decode_detections_flat(&levels, num_classes, &k, &stats, 1.0 / 500.0, &canon, 0.05).unwrap();

        let grids: Vec<LevelGrid> = shapes
            .iter()
            .zip(&bufs)
            .map(|(&(width, height, stride), data)| LevelGrid {
                stride,
                width,
                height,
                outputs: data
                    .chunks(cell_width(num_classes))
                    .map(|c| {
                        let ch: [f64; 12] = c[..12].try_into().unwrap();
                        HeadOutput::from_channels(&ch, c[12..12 + num_classes].to_vec(), c[12 + num_classes..].try_into().unwrap())
                    })
                    .collect(),
            })
            .collect();
        let params = LevelParams::new(
            stats.chunks(3).map(|s| LevelStats { sigma: s[0], mu: s[1], alpha: s[2] }).collect(),
            1.0 / 500.0,
        )
        .unwrap();
        let native = decode_detections(
            &grids,
            &CameraIntrinsics::new(k[0], k[1], k[2], k[3]).unwrap(),
            &params,
            &CanonicalSizes::new(canon.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()).unwrap(),
            0.05,
        )
        .unwrap();
        assert_eq!(flat, detections_to_rows(&native));
        assert_eq!(detections_from_rows(&flat).unwrap(), native);
    }
}

#[test]
fn empty_decode_round_trips() {
    let flat = decode_detections_flat(&[FlatLevel { stride: 8.0, width: 0, height: 0, data: &[] }], 2, &[700.0, 700.0, 600.0, 170.0], &[5.0, 20.0, 8.0], 0.002, &[1.0; 6], 0.0).unwrap();
    assert!(flat.is_empty());
    assert!(nms_2d_flat(&[], 0.5).unwrap().is_empty());
}

#[test]
fn disentangled_parity() {
    let mut r = rng(2);
    for _ in 0..CASES {
        let k = random_k(&mut r);
        let kk = CameraIntrinsics::new(k[0], k[1], k[2], k[3]).unwrap();
        let b = random_box(&mut r);
        let gt = Box3DComponents::from_box(&b, &kk).unwrap();
        let mut pred = gt;
        pred.depth *= r.random_range(0.8..1.2);
        pred.projected_center[0] += r.random_range(-10.0..10.0);
        pred.orientation = Quaternion::from_yaw(r.random_range(-3.0..3.0));
        pred.size[1] *= r.random_range(0.8..1.2);
        let flat = disentangled_l3d_flat(&components_to_row(&pred), &box_to_row(&b), &components_to_row(&gt), &k).unwrap();
        let n = disentangled_l3d(&pred, &b, &gt, &kk).unwrap();
        assert_eq!(flat, [n.orientation, n.projected_center, n.depth, n.size, n.total]);
        let zero = disentangled_l3d_flat(&components_to_row(&gt), &box_to_row(&b), &components_to_row(&gt), &k).unwrap();
        assert_eq!(zero, [0.0; 5]);
    }
}

#[test]
fn dense_depth_parity() {
    let mut r = rng(3);
    for _ in 0..CASES {
        let (w, h, levels) = (r.random_range(1..8), r.random_range(1..8), r.random_range(1..4));
        let gt: Vec<f64> = (0..w * h).map(|_| if r.random_bool(0.4) { r.random_range(1.0..80.0) } else { 0.0 }).collect();
        let pred: Vec<f64> = (0..w * h * levels).map(|_| r.random_range(0.0..80.0)).collect();
        let flat = dense_depth_loss_flat(&pred, levels, w, h, &gt).unwrap();
        let maps: Vec<Grid> = pred.chunks(w * h).map(|c| Grid::new(w, h, c.to_vec()).unwrap()).collect();
        let native = dense_depth_loss(&maps, &SparseDepthMap::new(w, h, gt).unwrap()).unwrap();
        assert_eq!(flat.to_bits(), native.to_bits());
    }
    assert!(dense_depth_loss_flat(&[0.0; 3], 1, 2, 2, &[0.0; 4]).is_err());
}

#[test]
fn confidence_parity() {
    let mut r = rng(4);
    for _ in 0..CASES {
        let t = r.random_range(0.1..5.0);
        let l: Vec<f64> = (0..r.random_range(0..20)).map(|_| r.random_range(0.0..10.0)).collect();
        let flat = confidence_target_flat(&l, t).unwrap();
        let native: Vec<f64> = l.iter().map(|&x| confidence_target(x, t).unwrap()).collect();
        assert_eq!(flat, native);
    }
    assert!(confidence_target_flat(&[1.0], 0.0).is_err());
}

#[test]
fn nms_parity() {
    let mut r = rng(5);
    for _ in 0..CASES {
        let dets: Vec<ScoredBox3D> = (0..r.random_range(0..12)).map(|_| random_det(&mut r)).collect();
        let thr = r.random_range(0.0..1.0);
        let flat = nms_2d_flat(&detections_to_rows(&dets), thr).unwrap();
        assert_eq!(flat, detections_to_rows(&nms_2d(&dets, thr).unwrap()));
    }
}

#[test]
fn ap_parity() {
    let mut r = rng(6);
    let mut defined = 0;
    for _ in 0..CASES {
        let images = r.random_range(1..4);
        let mut d: Vec<Vec<ScoredBox3D>> = vec![Vec::new(); images];
        let mut g: Vec<Vec<GroundTruthBox>> = vec![Vec::new(); images];
        let (mut d_rows, mut d_img, mut g_rows, mut g_img) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for img in 0..images {
            for _ in 0..r.random_range(0..4) {
                let b = random_box(&mut r);
                let gt = GroundTruthBox {
                    box3d: b,
                    box2d: Box2D::new(0.0, 0.0, 40.0, 40.0),
                    class_id: 0,
                    difficulty: [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard, Difficulty::Ignored][r.random_range(0..4)],
                };
                let mut near = b;
                near.center.x += r.random_range(-0.5..0.5);
                let det = ScoredBox3D { box3d: near, box2d: gt.box2d, class_id: 0, score: r.random_range(0.0..1.0), camera_id: None };
                g_rows.extend(ground_truth_to_row(&gt));
                g_img.push(img);
                g[img].push(gt);
                d_rows.extend(detection_to_row(&det));
                d_img.push(img);
                d[img].push(det);
            }
        }
        let config = EvalConfig { iou_thresholds: vec![0.5], ..EvalConfig::default() };
        let json = serde_json::to_string(&config).unwrap();
        let flat = ap_r40_flat(&d_rows, &d_img, &g_rows, &g_img, images, 0, &json);
        let native = ap_r40(&d, &g, 0, &config).map(|a| a.ap);
        match (flat, native) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.to_bits(), b.to_bits());
                defined += 1;
            }
            (Err(a), Err(b)) => assert_eq!(a, b),
            (a, b) => panic!("flat {a:?} vs native {b:?}"),
        }
    }
    assert!(defined > 50);
}

#[test]
fn depth_metrics_parity() {
    let mut r = rng(7);
    for _ in 0..CASES {
        let (w, h) = (r.random_range(1..10), r.random_range(1..10));
        let mut gt: Vec<f64> = (0..w * h).map(|_| if r.random_bool(0.5) { r.random_range(0.5..100.0) } else { 0.0 }).collect();
        gt[0] = 10.0;
        let pred: Vec<f64> = (0..w * h).map(|_| r.random_range(0.1..90.0)).collect();
        let flat = depth_metrics_flat(&pred, &gt, w, h, 80.0).unwrap();
        let m = depth_metrics(&Grid::new(w, h, pred).unwrap(), &SparseDepthMap::new(w, h, gt).unwrap(), 80.0).unwrap();
        assert_eq!(flat, [m.abs_rel, m.rmse, m.delta1, m.valid_pixels as f64]);
    }
}

#[test]
fn shape_errors_name_the_problem() {
    let e = decode_detections_flat(&[FlatLevel { stride: 8.0, width: 2, height: 1, data: &[0.0; 3] }], 1, &[700.0, 700.0, 600.0, 170.0], &[5.0, 20.0, 8.0], 0.002, &[1.0; 3], 0.0).unwrap_err();
    assert!(e.to_string().contains("needs 34 values"), "{e}");
    assert!(nms_2d_flat(&[0.0; 5], 0.5).is_err());
}
