//! End-to-end runs of the `mono3d` binary against golden fixtures.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the fixtures from their generators.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mono3d::geometry::{iou_3d, Box2D, Box3D, Quaternion};
use mono3d::Vec3;
use mono3d_cli::records::DetectionRecord;
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mono3d"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

/// Compare `actual` to the golden file, or rewrite it when updating.
fn golden(path: &Path, actual: &str) {
    if updating() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, actual).unwrap();
        return;
    }
    let want = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, want, "output differs from {}", path.display());
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

// ---------------------------------------------------------------- decode

struct Placed {
    col: usize,
    row: usize,
    class: usize,
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
    beta: f64,
}

const STRIDE: f64 = 16.0;
const GRID_W: usize = 8;
const GRID_H: usize = 4;
const SIGMA: f64 = 4.0;
const MU: f64 = 12.0;
const ALPHA: f64 = 16.0;
const C: f64 = 1.0 / 500.0;
const CANON: [[f64; 3]; 2] = [[1.6, 1.5, 3.9], [0.6, 1.75, 0.8]];
const FOCAL: [f64; 4] = [200.0, 210.0, 64.0, 32.0];

/// In decode output order: row-major over the grid.
fn placements() -> Vec<Placed> {
    vec![
        Placed { col: 5, row: 1, class: 1, center: [2.5, -0.3, 9.0], size: [0.55, 1.8, 0.7], yaw: -2.2, beta: 0.0 },
        Placed { col: 1, row: 2, class: 0, center: [-4.0, 1.2, 14.0], size: [1.7, 1.4, 4.2], yaw: 0.4, beta: 1.5 },
        Placed { col: 6, row: 3, class: 0, center: [6.0, 2.0, 21.0], size: [1.5, 1.6, 3.5], yaw: 2.9, beta: -0.7 },
    ]
}

/// Rotation taking +z onto the unit ray through `c`, by Rodrigues' formula.
fn ray_rotation_oracle(c: [f64; 3]) -> [f64; 4] {
    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let r = [c[0] / n, c[1] / n, c[2] / n];
    let axis = [-r[1], r[0], 0.0];
    let s = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
    let angle = r[2].clamp(-1.0, 1.0).acos();
    if s < 1e-15 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let h = 0.5 * angle;
    [h.cos(), h.sin() * axis[0] / s, h.sin() * axis[1] / s, 0.0]
}

fn qmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn heads_fixture() -> Value {
    let [fx, fy, px, py] = FOCAL;
    let pixel = (1.0 / (fx * fx) + 1.0 / (fy * fy)).sqrt();
    let empty = json!({
        "q_raw": [1.0, 0.0, 0.0, 0.0], "z_c": 0.0, "z_p": 0.0, "du": 0.0, "dv": 0.0,
        "delta": [0.0, 0.0, 0.0], "beta3d": -5.0, "class_logits": [-20.0, -20.0], "ltrb": [0.0, 0.0, 0.0, 0.0]
    });
    let mut cells = vec![empty; GRID_W * GRID_H];
    for o in placements() {
        let [x, y, z] = o.center;
        let (u, v) = (fx * x / z + px, fy * y / z + py);
        let (ub, vb) = ((o.col as f64 + 0.5) * STRIDE, (o.row as f64 + 0.5) * STRIDE);
        let q_ego = [(o.yaw / 2.0).cos(), 0.0, (o.yaw / 2.0).sin(), 0.0];
        let ray = ray_rotation_oracle(o.center);
        let q_allo = qmul([ray[0], -ray[1], -ray[2], -ray[3]], q_ego);
        let delta: Vec<f64> = (0..3).map(|i| (o.size[i] / CANON[o.class][i]).ln()).collect();
        let mut logits = vec![-20.0, -20.0];
        logits[o.class] = 3.0;
        cells[o.row * GRID_W + o.col] = json!({
            "q_raw": q_allo.map(|c| 2.0 * c),
            "z_c": (z * pixel / C - MU) / SIGMA,
            "z_p": 0.0,
            "du": (u - ub) / ALPHA,
            "dv": (v - vb) / ALPHA,
            "delta": delta,
            "beta3d": o.beta,
            "class_logits": logits,
            "ltrb": [10.0, 12.0, 14.0, 16.0],
        });
    }
    json!([{ "stride": STRIDE, "width": GRID_W, "height": GRID_H, "outputs": cells }])
}

fn write_decode_inputs(dir: &Path) {
    let [fx, fy, px, py] = FOCAL;
    let files = [
        ("heads.json", heads_fixture()),
        ("intrinsics.json", json!({ "fx": fx, "fy": fy, "px": px, "py": py })),
        ("params.json", json!({ "levels": [{ "sigma": SIGMA, "mu": MU, "alpha": ALPHA }], "c": C })),
        ("canon.json", json!({ "sizes": CANON })),
    ];
    fs::create_dir_all(dir).unwrap();
    for (name, v) in files {
        fs::write(dir.join(name), serde_json::to_string_pretty(&v).unwrap() + "\n").unwrap();
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn decode_recovers_the_encoded_boxes() {
    let dir = fixtures().join("decode");
    if updating() {
        write_decode_inputs(&dir);
    }
    let out = run(&[
        "decode",
        "--heads", p(&dir.join("heads.json")),
        "--intrinsics", p(&dir.join("intrinsics.json")),
        "--params", p(&dir.join("params.json")),
        "--canon", p(&dir.join("canon.json")),
        "--score-floor", "0.05",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    golden(&dir.join("expected.json"), &text);

    let recs: Vec<DetectionRecord> = serde_json::from_str(&text).unwrap();
    let want = placements();
    assert_eq!(recs.len(), want.len());
    for (r, o) in recs.iter().zip(&want) {
        assert_eq!(r.class, o.class);
        for i in 0..3 {
            assert!((r.center[i] - o.center[i]).abs() < 1e-9, "center {:?} vs {:?}", r.center, o.center);
            assert!((r.size[i] - o.size[i]).abs() < 1e-9);
        }
        let got = Quaternion::from(r.quaternion);
        assert!(got.angular_distance(&Quaternion::from_yaw(o.yaw)) < 1e-9);
        assert!((r.score - sigmoid(3.0) * sigmoid(o.beta)).abs() < 1e-12);
        let (ub, vb) = ((o.col as f64 + 0.5) * STRIDE, (o.row as f64 + 0.5) * STRIDE);
        assert_eq!(r.box2d, [ub - 10.0, vb - 12.0, ub + 14.0, vb + 16.0]);
    }
}

#[test]
fn corrupt_json_is_an_input_error_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inputs");
    write_decode_inputs(&dir);
    let bad = tmp.path().join("broken_heads.json");
    fs::write(&bad, "[{\"stride\": 16, ").unwrap();
    let out = run(&[
        "decode",
        "--heads", p(&bad),
        "--intrinsics", p(&dir.join("intrinsics.json")),
        "--params", p(&dir.join("params.json")),
        "--canon", p(&dir.join("canon.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("broken_heads.json"), "{}", stderr(&out));

    let missing = run(&["nms", "--input", p(&tmp.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope.json"));

    fs::write(tmp.path().join("k.json"), r#"{"fx": -1, "fy": 1, "px": 0, "py": 0}"#).unwrap();
    let neg = run(&[
        "decode",
        "--heads", p(&dir.join("heads.json")),
        "--intrinsics", p(&tmp.path().join("k.json")),
        "--params", p(&dir.join("params.json")),
        "--canon", p(&dir.join("canon.json")),
    ]);
    assert_eq!(neg.status.code(), Some(2));
    assert!(stderr(&neg).contains("k.json"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["nms"]).status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

// ------------------------------------------------------------------- nms

fn record(class: usize, score: f64, box2d: [f64; 4], center: [f64; 3], camera: Option<usize>) -> DetectionRecord {
    DetectionRecord { class, score, box2d, center, size: [1.6, 1.5, 4.0], quaternion: [1.0, 0.0, 0.0, 0.0], camera_id: camera }
}

fn write_records(path: &Path, recs: &[DetectionRecord]) {
    fs::write(path, serde_json::to_string_pretty(recs).unwrap()).unwrap();
}

#[test]
fn nms_2d_drops_the_duplicate() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("dets.json");
    let recs = [
        record(0, 0.6, [10.0, 10.0, 50.0, 50.0], [0.0, 1.0, 10.0], None),
        record(0, 0.9, [12.0, 10.0, 52.0, 50.0], [0.1, 1.0, 10.0], None),
        record(0, 0.5, [100.0, 10.0, 140.0, 50.0], [5.0, 1.0, 10.0], None),
    ];
    write_records(&input, &recs);
    let out_path = tmp.path().join("kept.json");
    let out = run(&["nms", "--input", p(&input), "-o", p(&out_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let kept: Vec<DetectionRecord> = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(kept, vec![recs[1], recs[2]]);
}

#[test]
fn bev_nms_needs_threshold_and_poses() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("dets.json");
    // Camera 1 is the same rig shifted 2 m along +x, so both detections are
    // the same object in the global frame.
    let recs = [
        record(0, 0.8, [0.0, 0.0, 10.0, 10.0], [2.0, 1.0, 15.0], Some(0)),
        record(0, 0.7, [0.0, 0.0, 10.0, 10.0], [0.0, 1.0, 15.0], Some(1)),
    ];
    write_records(&input, &recs);
    let poses = tmp.path().join("poses.json");
    fs::write(
        &poses,
        r#"[{"rotation":[1,0,0,0],"translation":[0,0,0]},{"rotation":[1,0,0,0],"translation":[2,0,0]}]"#,
    )
    .unwrap();

    let no_thr = run(&["nms", "--mode", "bev", "--input", p(&input), "--extrinsics", p(&poses)]);
    assert_eq!(no_thr.status.code(), Some(2));
    assert!(stderr(&no_thr).contains("--threshold"));

    let no_pose = run(&["nms", "--mode", "bev", "--threshold", "0.5", "--input", p(&input)]);
    assert_eq!(no_pose.status.code(), Some(2));

    let one_pose = tmp.path().join("one.json");
    fs::write(&one_pose, r#"[{"rotation":[1,0,0,0],"translation":[0,0,0]}]"#).unwrap();
    let missing = run(&["nms", "--mode", "bev", "--threshold", "0.5", "--input", p(&input), "--extrinsics", p(&one_pose)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("camera"), "{}", stderr(&missing));

    let ok = run(&["nms", "--mode", "bev", "--threshold", "0.5", "--input", p(&input), "--extrinsics", p(&poses)]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let kept: Vec<DetectionRecord> = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].score, 0.8);
}

// ------------------------------------------------------------------ eval

fn kitti_line(class: &str, b: &Box3D, box2d: [f64; 4]) -> String {
    let l = mono3d::eval::kitti::KittiLabel::from_box3d(class, b, Box2D::from(box2d), None);
    mono3d_cli::io::format_label(&l)
}

/// Three images, six annotated cars with two-decimal coordinates so the
/// label text is exact, and eight detections.
fn write_eval_fixture(dir: &Path) {
    let car = |x: f64, z: f64, yaw: f64| Box3D::new(Vec3::new(x, 0.9, z), [1.6, 1.5, 3.9], Quaternion::from_yaw(yaw));
    let tall = [100.0, 100.0, 200.0, 180.0];
    let gts = [
        vec![car(-3.0, 15.0, 1.57), car(4.0, 25.0, 0.0)],
        vec![car(0.0, 12.0, 0.5), car(-6.0, 30.0, 2.0), car(5.0, 40.0, -1.0)],
        vec![car(2.0, 18.0, 1.0)],
    ];
    let shift = |b: &Box3D, dx: f64, dz: f64| Box3D::new(b.center + Vec3::new(dx, 0.0, dz), b.size, b.orientation);
    let dets = [
        vec![(shift(&gts[0][0], 0.1, 0.0), 0.9), (shift(&gts[0][1], 0.0, 0.6), 0.6), (car(10.0, 20.0, 0.0), 0.8)],
        vec![(shift(&gts[1][0], 0.0, 0.2), 0.95), (shift(&gts[1][1], 1.2, 0.0), 0.5), (shift(&gts[1][0], 0.3, 0.0), 0.4)],
        vec![(shift(&gts[2][0], 0.05, 0.05), 0.7), (car(-8.0, 9.0, 0.0), 0.3)],
    ];
    fs::create_dir_all(dir.join("gt")).unwrap();
    fs::create_dir_all(dir.join("dets")).unwrap();
    for (i, (g, d)) in gts.iter().zip(&dets).enumerate() {
        let text: String = g.iter().map(|b| kitti_line("Car", b, tall) + "\n").collect();
        fs::write(dir.join(format!("gt/{i:06}.txt")), text).unwrap();
        let recs: Vec<DetectionRecord> = d
            .iter()
            .map(|(b, s)| DetectionRecord {
                class: 0,
                score: *s,
                box2d: tall,
                center: [b.center.x, b.center.y, b.center.z],
                size: b.size,
                quaternion: b.orientation.to_array(),
                camera_id: None,
            })
            .collect();
        fs::write(dir.join(format!("dets/{i:06}.json")), serde_json::to_string_pretty(&recs).unwrap() + "\n").unwrap();
    }
    fs::write(dir.join("config.json"), r#"{"iou_thresholds": [0.5, 0.5, 0.5]}"#.to_string() + "\n").unwrap();
}

#[test]
fn eval_three_image_fixture() {
    let dir = fixtures().join("eval");
    if updating() {
        write_eval_fixture(&dir);
    }
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("pr.csv");
    let out = run(&[
        "eval",
        "--dets", p(&dir.join("dets")),
        "--gt", p(&dir.join("gt")),
        "--config", p(&dir.join("config.json")),
        "--pr-csv", p(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    golden(&dir.join("expected_metrics.json"), &stdout(&out));
    golden(&dir.join("expected_pr.csv"), &fs::read_to_string(&csv).unwrap());

    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let car = &v["classes"][0];
    assert_eq!(car["num_gt"], 6);
    assert_eq!(car["num_detections"], 8);
    let ap = car["ap"].as_f64().unwrap();
    // Precision envelope: 1 up to recall 1/3, 0.8 up to 2/3, nothing beyond.
    // That covers 13 and 13 of the 40 recall positions.
    assert!((ap - (13.0 + 13.0 * 0.8) / 40.0).abs() < 1e-12, "{ap}");
    assert!(v["classes"][1]["ap"].is_null());
    assert_eq!(v["mean_ap"].as_f64().unwrap(), ap);
}

#[test]
fn eval_perfect_and_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, dets) = (tmp.path().join("gt"), tmp.path().join("dets"));
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(&dets).unwrap();
    let b = Box3D::new(Vec3::new(1.0, 0.9, 20.0), [1.6, 1.5, 3.9], Quaternion::from_yaw(0.3));
    fs::write(gt.join("a.txt"), kitti_line("Car", &b, [50.0, 50.0, 150.0, 120.0]) + "\n").unwrap();
    let parsed = mono3d::eval::kitti::parse_labels(&fs::read_to_string(gt.join("a.txt")).unwrap()).unwrap();
    let exact = parsed[0].to_box3d();
    assert!(iou_3d(&exact, &b) > 0.999_99);
    let rec = DetectionRecord {
        class: 0,
        score: 0.9,
        box2d: [50.0, 50.0, 150.0, 120.0],
        center: [exact.center.x, exact.center.y, exact.center.z],
        size: exact.size,
        quaternion: exact.orientation.to_array(),
        camera_id: None,
    };
    write_records(&dets.join("a.json"), &[rec]);
    let out = run(&["eval", "--dets", p(&dets), "--gt", p(&gt)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["classes"][0]["ap"].as_f64(), Some(1.0));
    assert_eq!(v["mean_ap"].as_f64(), Some(1.0));
    assert_eq!(v["classes"][0]["tp_metrics"]["ate"].as_f64(), Some(0.0));

    write_records(&dets.join("a.json"), &[]);
    let none = run(&["eval", "--dets", p(&dets), "--gt", p(&gt)]);
    assert!(none.status.success());
    let v: Value = serde_json::from_str(&stdout(&none)).unwrap();
    assert_eq!(v["classes"][0]["ap"].as_f64(), Some(0.0));

    fs::write(gt.join("a.txt"), "\n").unwrap();
    let undefined = run(&["eval", "--dets", p(&dets), "--gt", p(&gt)]);
    assert_eq!(undefined.status.code(), Some(1), "{}", stderr(&undefined));
    let v: Value = serde_json::from_str(&stdout(&undefined)).unwrap();
    assert!(v["mean_ap"].is_null());

    fs::write(gt.join("a.txt"), "Car 0 0 0 1 2 3\n").unwrap();
    let bad = run(&["eval", "--dets", p(&dets), "--gt", p(&gt)]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("a.txt") && stderr(&bad).contains("line 1"), "{}", stderr(&bad));
}

// ----------------------------------------------------------------- synth

fn synth(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--seed", "42", "--num-images", "10", "-o", p(dir)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn synth_manifest_is_golden_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = synth(&a, &[]);
    assert!(first.status.success(), "{}", stderr(&first));
    let second = synth(&b, &[]);
    assert_eq!(first.stdout, second.stdout);
    let manifest = fs::read_to_string(a.join("manifest.sha256")).unwrap();
    assert_eq!(manifest, stdout(&first));
    golden(&fixtures().join("synth_seed42.sha256"), &manifest);
    for line in manifest.lines() {
        let rel = line.split_once("  ").unwrap().1;
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    let other = synth(&tmp.path().join("c"), &["--seed", "43"]);
    assert_ne!(other.stdout, first.stdout);
}

#[test]
fn noiseless_synth_scores_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("s");
    let out = synth(&d, &["--center-sigma", "0", "--size-sigma", "0", "--yaw-sigma", "0", "--depth-sigma", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let ev = run(&["eval", "--dets", p(&d.join("dets")), "--gt", p(&d.join("gt"))]);
    assert!(ev.status.success(), "{}", stderr(&ev));
    let v: Value = serde_json::from_str(&stdout(&ev)).unwrap();
    assert_eq!(v["mean_ap"].as_f64(), Some(1.0), "{v}");
    for c in v["classes"].as_array().unwrap() {
        if let Some(tp) = c["tp_metrics"].as_object() {
            assert_eq!(tp["ate"].as_f64(), Some(0.0));
            assert_eq!(tp["aoe"].as_f64(), Some(0.0));
        }
    }
    let depth = run(&["depth", "--pred", p(&d.join("depth/pred")), "--gt", p(&d.join("depth/gt"))]);
    assert!(depth.status.success(), "{}", stderr(&depth));
    let v: Value = serde_json::from_str(&stdout(&depth)).unwrap();
    assert_eq!(v["mean"]["abs_rel"].as_f64(), Some(0.0));
    assert_eq!(v["mean"]["delta1"].as_f64(), Some(1.0));
}

// ------------------------------------------------------------ depth maps

#[test]
fn depth_tools_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred, gt) = (tmp.path().join("pred"), tmp.path().join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    let mut g = mono3d::Grid::zeros(4, 2);
    g.set(1, 0, 10.0);
    g.set(3, 1, 20.0);
    mono3d::depthmap::write_depth_png(&gt.join("x.png"), &g).unwrap();
    mono3d::depthmap::write_depth_png(&pred.join("x.png"), &mono3d::Grid::filled(4, 2, 12.5)).unwrap();
    mono3d::depthmap::write_depth_png(&gt.join("y.png"), &mono3d::Grid::zeros(4, 2)).unwrap();
    mono3d::depthmap::write_depth_png(&pred.join("y.png"), &mono3d::Grid::zeros(4, 2)).unwrap();

    let out = run(&["depth", "--pred", p(&pred), "--gt", p(&gt)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["images"][0]["metrics"]["abs_rel"].as_f64(), Some(0.5 * (0.25 + 0.375)));
    assert!(v["images"][1]["metrics"].is_null());
    assert_eq!(v["mean"]["valid_pixels"], 2);

    fs::remove_file(gt.join("x.png")).unwrap();
    let empty = run(&["depth", "--pred", p(&pred), "--gt", p(&gt)]);
    assert_eq!(empty.status.code(), Some(1));

    let k = tmp.path().join("k.json");
    fs::write(&k, r#"{"fx": 500, "fy": 500, "px": 2, "py": 1}"#).unwrap();
    let lifted = run(&["lift", "--depth", p(&pred.join("x.png")), "--intrinsics", p(&k), "--stride", "2"]);
    assert!(lifted.status.success(), "{}", stderr(&lifted));
    assert_eq!(stdout(&lifted), "x,y,z\n-0.05,-0.025,12.5\n0,-0.025,12.5\n");

    mono3d::depthmap::write_depth_png(&gt.join("x.png"), &g).unwrap();
    let small = tmp.path().join("small.png");
    let r = run(&["resize-depth", "--input", p(&gt.join("x.png")), "--width", "2", "--height", "1", "-o", p(&small)]);
    assert!(r.status.success(), "{}", stderr(&r));
    let m = mono3d::depthmap::read_depth_png(&small).unwrap();
    // Columns 1 and 3 land on target column 1 (round half up, then clamp);
    // the nearer depth wins.
    assert_eq!(m.grid().data(), &[0.0, 10.0]);
}

#[test]
fn empty_head_grid_gives_empty_list() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_decode_inputs(dir);
    fs::write(dir.join("heads.json"), r#"[{"stride": 16, "width": 0, "height": 0, "outputs": []}]"#).unwrap();
    let out = run(&[
        "decode",
        "--heads", p(&dir.join("heads.json")),
        "--intrinsics", p(&dir.join("intrinsics.json")),
        "--params", p(&dir.join("params.json")),
        "--canon", p(&dir.join("canon.json")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "[]\n");
}

#[test]
fn threshold_one_keeps_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("dets.json");
    let recs = [
        record(0, 0.5, [10.0, 10.0, 50.0, 50.0], [0.0, 1.0, 10.0], Some(0)),
        record(1, 0.9, [12.0, 10.0, 52.0, 50.0], [0.4, 1.0, 10.0], Some(1)),
        record(0, 0.7, [11.0, 10.0, 51.0, 50.0], [0.2, 1.0, 10.0], Some(0)),
    ];
    write_records(&input, &recs);
    let out = run(&["nms", "--input", p(&input), "--threshold", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let kept: Vec<DetectionRecord> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(kept, vec![recs[1], recs[2], recs[0]]);

    let poses = tmp.path().join("poses.json");
    let yaw = Quaternion::from_yaw(0.5).to_array();
    fs::write(
        &poses,
        format!(r#"[{{"rotation":[1,0,0,0],"translation":[0,0,0]}},{{"rotation":{yaw:?},"translation":[3,0,-1]}}]"#),
    )
    .unwrap();
    let bev = run(&["nms", "--mode", "bev", "--input", p(&input), "--threshold", "1", "--extrinsics", p(&poses)]);
    assert!(bev.status.success(), "{}", stderr(&bev));
    let kept: Vec<DetectionRecord> = serde_json::from_str(&stdout(&bev)).unwrap();
    assert_eq!(kept.len(), 3);
    let moved = Quaternion::from(yaw).rotate(&Vec3::from(recs[1].center)) + Vec3::new(3.0, 0.0, -1.0);
    for i in 0..3 {
        assert!((kept[0].center[i] - moved[i]).abs() < 1e-12);
    }
    assert_eq!(kept[1].center, recs[2].center);
    assert_eq!(kept[2].center, recs[0].center);
}
