//! Seeded synthetic scenes: ground-truth labels, perturbed detections and
//! sparse ground-plane depth, written in the same formats the other
//! subcommands read.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use mono3d::depthmap::write_depth_png;
use mono3d::eval::kitti::{wrap_angle, KittiLabel, KITTI_CLASSES};
use mono3d::geometry::{iou_bev, Box2D, Box3D, Quaternion};
use mono3d::losses::{confidence_target, disentangled_l3d, Box3DComponents, DEFAULT_TEMPERATURE};
use mono3d::{CameraIntrinsics, CanonicalSizes, Grid, ScoredBox3D, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::io::{format_label, to_json, write_file};
use crate::records::to_records;

pub const IMAGE_WIDTH: usize = 1242;
pub const IMAGE_HEIGHT: usize = 375;
pub const CAMERA_HEIGHT: f64 = 1.65;
pub const MAX_DEPTH: f64 = 80.0;
pub const MANIFEST: &str = "manifest.sha256";
const MIN_BOX_HEIGHT_PX: f64 = 25.0;
const PLACEMENT_ATTEMPTS: usize = 200;

/// KITTI-like calibration for the left color camera.
pub fn kitti_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(721.5377, 721.5377, 609.5593, 172.854).expect("valid constants")
}

/// `(W, H, D)` per class, in [`KITTI_CLASSES`] order.
pub fn canonical_sizes() -> CanonicalSizes {
    CanonicalSizes::new(vec![[1.6, 1.5, 3.9], [0.6, 1.75, 0.8], [0.6, 1.75, 1.75]]).expect("valid constants")
}

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub seed: u64,
    pub num_images: usize,
    pub boxes_per_image: usize,
    /// Center noise, meters per axis.
    pub center_sigma: f64,
    /// Log-size noise.
    pub size_sigma: f64,
    /// Heading noise, radians.
    pub yaw_sigma: f64,
    /// Fraction of below-horizon pixels that carry a depth measurement.
    pub depth_density: f64,
    /// Multiplicative log-noise of the predicted dense depth.
    pub depth_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_images: 10,
            boxes_per_image: 4,
            center_sigma: 0.2,
            size_sigma: 0.05,
            yaw_sigma: 0.05,
            depth_density: 0.05,
            depth_sigma: 0.05,
        }
    }
}

pub struct Scene {
    pub labels: Vec<KittiLabel>,
    pub detections: Vec<ScoredBox3D>,
    pub depth_gt: Grid,
    pub depth_pred: Grid,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn projected_box(b: &Box3D, k: &CameraIntrinsics) -> Option<Box2D> {
    let mut bb = Box2D::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in b.corners() {
        if c.z < 0.5 {
            return None;
        }
        let (u, v, _) = k.project(&c).ok()?;
        bb = Box2D::new(bb.x1.min(u), bb.y1.min(v), bb.x2.max(u), bb.y2.max(v));
    }
    Some(bb)
}

fn inside_image(b: &Box2D) -> bool {
    b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= (IMAGE_WIDTH - 1) as f64 && b.y2 <= (IMAGE_HEIGHT - 1) as f64
}

/// A label whose numbers all have two decimals, so its text form parses
/// back to exactly the same values.
fn sample_label(rng: &mut ChaCha8Rng, k: &CameraIntrinsics, canon: &CanonicalSizes) -> Option<KittiLabel> {
    let class = rng.random_range(0..KITTI_CLASSES.len());
    let [w0, h0, d0] = canon.get(class).expect("class in range");
    let dims = [h0, w0, d0].map(|s| round2(s * (0.05 * normal(rng)).exp()));
    let z = round2(rng.random_range(6.0..45.0));
    let x = round2(rng.random_range(-0.6..0.6) * z);
    let ry = round2(rng.random_range(-PI..PI));
    let mut label = KittiLabel {
        class_name: KITTI_CLASSES[class].to_string(),
        truncation: 0.0,
        occlusion: 0,
        alpha: round2(wrap_angle(ry - x.atan2(z))),
        box2d: Box2D::new(0.0, 0.0, 0.0, 0.0),
        dimensions: dims,
        location: [x, CAMERA_HEIGHT, z],
        rotation_y: ry,
        score: None,
    };
    let bb = projected_box(&label.to_box3d(), k)?;
    label.box2d = Box2D::new(round2(bb.x1), round2(bb.y1), round2(bb.x2), round2(bb.y2));
    (inside_image(&label.box2d) && label.box2d.height() >= MIN_BOX_HEIGHT_PX).then_some(label)
}

fn perturb(label: &KittiLabel, rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Box3D {
    let gt = label.to_box3d();
    let dc = Vec3::new(normal(rng), normal(rng), normal(rng)) * cfg.center_sigma;
    let size = gt.size.map(|s| s * (cfg.size_sigma * normal(rng)).exp());
    let yaw = label.rotation_y + std::f64::consts::FRAC_PI_2 + cfg.yaw_sigma * normal(rng);
    Box3D::new(gt.center + dc, size, Quaternion::from_yaw(yaw))
}

fn detection(label: &KittiLabel, rng: &mut ChaCha8Rng, cfg: &SynthConfig, k: &CameraIntrinsics) -> Option<ScoredBox3D> {
    let gt_box = label.to_box3d();
    let pred = perturb(label, rng, cfg);
    let box2d = projected_box(&pred, k)?;
    let gt_c = Box3DComponents::from_box(&gt_box, k).ok()?;
    let pred_c = Box3DComponents::from_box(&pred, k).ok()?;
    let l3d = disentangled_l3d(&pred_c, &gt_box, &gt_c, k).ok()?;
    Some(ScoredBox3D {
        box3d: pred,
        box2d,
        class_id: mono3d::eval::kitti::class_id(&label.class_name)?,
        score: confidence_target(l3d.total, DEFAULT_TEMPERATURE).ok()?,
        camera_id: None,
    })
}

fn ground_depth(v: usize, k: &CameraIntrinsics) -> Option<f64> {
    let dv = v as f64 - k.py;
    (dv > 0.0).then(|| CAMERA_HEIGHT * k.fy / dv).filter(|d| *d <= MAX_DEPTH)
}

fn depth_maps(rng: &mut ChaCha8Rng, cfg: &SynthConfig, k: &CameraIntrinsics) -> (Grid, Grid) {
    let mut gt = Grid::zeros(IMAGE_WIDTH, IMAGE_HEIGHT);
    let mut pred = Grid::zeros(IMAGE_WIDTH, IMAGE_HEIGHT);
    for v in 0..IMAGE_HEIGHT {
        let Some(d) = ground_depth(v, k) else { continue };
        for u in 0..IMAGE_WIDTH {
            if rng.random_bool(cfg.depth_density) {
                gt.set(u, v, d);
            }
            pred.set(u, v, d * (cfg.depth_sigma * normal(rng)).exp());
        }
    }
    (gt, pred)
}

pub fn generate_scene(rng: &mut ChaCha8Rng, cfg: &SynthConfig, k: &CameraIntrinsics, canon: &CanonicalSizes) -> Scene {
    let mut labels: Vec<KittiLabel> = Vec::new();
    let mut boxes: Vec<Box3D> = Vec::new();
    for _ in 0..cfg.boxes_per_image {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let Some(l) = sample_label(rng, k, canon) else { continue };
            let b = l.to_box3d();
            if boxes.iter().all(|o| iou_bev(o, &b) == 0.0) {
                boxes.push(b);
                labels.push(l);
                break;
            }
        }
    }
    let detections = labels.iter().filter_map(|l| detection(l, rng, cfg, k)).collect();
    let (depth_gt, depth_pred) = depth_maps(rng, cfg, k);
    Scene { labels, detections, depth_gt, depth_pred }
}

pub fn image_id(i: usize) -> String {
    format!("{i:06}")
}

/// Writes the dataset under `out` and returns the manifest text.
///
/// Layout: `intrinsics.json`, `canonical_sizes.json`, `gt/<id>.txt`,
/// `dets/<id>.json`, `depth/gt/<id>.png`, `depth/pred/<id>.png` and
/// [`MANIFEST`] listing the SHA-256 of every other file.
pub fn write_dataset(cfg: &SynthConfig, out: &Path) -> Result<String> {
    ensure!(cfg.num_images > 0, "--num-images must be positive");
    for s in [cfg.center_sigma, cfg.size_sigma, cfg.yaw_sigma, cfg.depth_sigma] {
        ensure!(s >= 0.0 && s.is_finite(), "noise levels must be finite and nonnegative");
    }
    ensure!((0.0..=1.0).contains(&cfg.depth_density), "--depth-density must lie in [0, 1]");
    let k = kitti_intrinsics();
    let canon = canonical_sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    write_file(&out.join("intrinsics.json"), to_json(&k)?.as_bytes())?;
    write_file(&out.join("canonical_sizes.json"), to_json(&canon)?.as_bytes())?;
    for i in 0..cfg.num_images {
        let id = image_id(i);
        let scene = generate_scene(&mut rng, cfg, &k, &canon);
        let mut text: String = scene.labels.iter().map(|l| format_label(l) + "\n").collect();
        if text.is_empty() {
            text.push('\n');
        }
        write_file(&out.join("gt").join(format!("{id}.txt")), text.as_bytes())?;
        write_file(&out.join("dets").join(format!("{id}.json")), to_json(&to_records(&scene.detections))?.as_bytes())?;
        for (sub, grid) in [("gt", &scene.depth_gt), ("pred", &scene.depth_pred)] {
            let path = out.join("depth").join(sub).join(format!("{id}.png"));
            fs::create_dir_all(path.parent().expect("has parent"))?;
            write_depth_png(&path, grid).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    let manifest = manifest(out)?;
    write_file(&out.join(MANIFEST), manifest.as_bytes())?;
    Ok(manifest)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.strip_prefix(root)? != Path::new(MANIFEST) {
            out.push(path);
        }
    }
    Ok(())
}

/// `sha256  relative/path` lines for every file under `root` except the
/// manifest itself, sorted by path with `/` separators.
pub fn manifest(root: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    let mut lines: Vec<(String, String)> = files
        .iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
            let rel = p.strip_prefix(root)?.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            Ok((rel, format!("{:x}", Sha256::digest(&bytes))))
        })
        .collect::<Result<_>>()?;
    lines.sort();
    Ok(lines.into_iter().map(|(rel, hash)| format!("{hash}  {rel}\n")).collect())
}
