//! Subcommand definitions and their implementations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use mono3d::decode::decode_detections;
use mono3d::depthmap::{read_depth_png, write_depth_png};
use mono3d::depthmap::{depth_metrics, lift_to_pointcloud, resize_preserving, DEFAULT_DEPTH_CAP};
use mono3d::eval::kitti::{parse_labels, KITTI_CLASSES};
use mono3d::eval::{ap_r40, mean_ap, tp_metrics, Difficulty, MatchCriterion, TpMetrics};
use mono3d::nms::{nms_2d, nms_bev_tagged, DEFAULT_NMS_2D_THRESHOLD};
use mono3d::{
    CameraIntrinsics, CanonicalSizes, DepthMetrics, Error as CoreError, EvalConfig, GroundTruthBox, LevelGrid, LevelParams, Pose,
    ScoredBox3D,
};
use serde::Serialize;

use crate::error::MetricFailure;
use crate::format::{csv_row, fmt_g6};
use crate::io::{file_stem, list_files, read_json, to_json, write_file, write_output};
use crate::records::{from_records, to_records, DetectionRecord};
use crate::synth::{write_dataset, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "mono3d", version, about = "Monocular 3D detection post-processing and evaluation")]
pub struct Cli {
    /// Repeat for more log output (warn, info, debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw head outputs into scored 3D boxes.
    Decode(DecodeArgs),
    /// Suppress duplicate detections.
    Nms(NmsArgs),
    /// AP and true-positive errors against KITTI-format labels.
    Eval(EvalArgs),
    /// Dense depth error against sparse ground truth.
    Depth(DepthArgs),
    /// Back-project a depth PNG into a point cloud CSV.
    Lift(LiftArgs),
    /// Resize a sparse depth PNG without interpolating measurements.
    ResizeDepth(ResizeArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// JSON array of per-level grids.
    #[arg(long)]
    pub heads: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Per-level depth statistics.
    #[arg(long)]
    pub params: PathBuf,
    /// Canonical sizes per class.
    #[arg(long)]
    pub canon: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub score_floor: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NmsMode {
    #[value(name = "2d")]
    TwoD,
    Bev,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    /// JSON array of detection records.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "2d")]
    pub mode: NmsMode,
    /// IoU threshold; defaults to 0.3 in 2d mode and is required in bev mode.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// JSON array of camera-to-global poses, indexed by `camera_id`.
    #[arg(long)]
    pub extrinsics: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `<id>.json` detection files.
    #[arg(long)]
    pub dets: PathBuf,
    /// Directory of `<id>.txt` KITTI label files.
    #[arg(long)]
    pub gt: PathBuf,
    /// Evaluation settings as JSON; unset fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Center-distance gate for ATE/ASE/AOE, meters.
    #[arg(long, default_value_t = 2.0)]
    pub tp_distance: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write every precision/recall point as CSV.
    #[arg(long)]
    pub pr_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// Directory of predicted depth PNGs.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of sparse ground-truth depth PNGs with matching names.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH_CAP)]
    pub cap: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub num_images: usize,
    #[arg(long, default_value_t = 4)]
    pub boxes_per_image: usize,
    #[arg(long, default_value_t = 0.2)]
    pub center_sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub size_sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub yaw_sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub depth_density: f64,
    #[arg(long, default_value_t = 0.05)]
    pub depth_sigma: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode(a) => decode(&a),
        Command::Nms(a) => nms(&a),
        Command::Eval(a) => eval(&a),
        Command::Depth(a) => depth(&a),
        Command::Lift(a) => lift(&a),
        Command::ResizeDepth(a) => resize(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn decode(a: &DecodeArgs) -> Result<()> {
    let grids: Vec<LevelGrid> = read_json(&a.heads)?;
    let k: CameraIntrinsics = read_json(&a.intrinsics)?;
    let params: LevelParams = read_json(&a.params)?;
    params.validate().with_context(|| format!("invalid parameters in {}", a.params.display()))?;
    let canon: CanonicalSizes = read_json(&a.canon)?;
    let canon = CanonicalSizes::new(canon.sizes).with_context(|| format!("invalid sizes in {}", a.canon.display()))?;
    let dets = decode_detections(&grids, &k, &params, &canon, a.score_floor)?;
    info!("decoded {} detections", dets.len());
    write_output(a.output.as_deref(), &to_json(&to_records(&dets))?)
}

fn nms(a: &NmsArgs) -> Result<()> {
    let records: Vec<DetectionRecord> = read_json(&a.input)?;
    let dets = from_records(&records);
    let kept = match a.mode {
        NmsMode::TwoD => nms_2d(&dets, a.threshold.unwrap_or(DEFAULT_NMS_2D_THRESHOLD))?,
        NmsMode::Bev => {
            let Some(thr) = a.threshold else { bail!("--threshold is required in bev mode") };
            let Some(path) = &a.extrinsics else { bail!("--extrinsics is required in bev mode") };
            let poses: Vec<Pose> = read_json(path)?;
            nms_bev_tagged(&dets, &poses, thr)?
        }
    };
    info!("kept {} of {} detections", kept.len(), dets.len());
    write_output(a.output.as_deref(), &to_json(&to_records(&kept))?)
}

#[derive(Debug, Serialize)]
struct ClassReport {
    class_id: usize,
    name: &'static str,
    num_gt: usize,
    num_detections: usize,
    ap: Option<f64>,
    tp_metrics: Option<TpMetrics>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    config: EvalConfig,
    images: usize,
    classes: Vec<ClassReport>,
    mean_ap: Option<f64>,
}

fn load_split(a: &EvalArgs, config: &EvalConfig) -> Result<(Vec<Vec<ScoredBox3D>>, Vec<Vec<GroundTruthBox>>)> {
    let gt_files = list_files(&a.gt, "txt")?;
    if gt_files.is_empty() {
        bail!("no .txt label files in {}", a.gt.display());
    }
    let det_ids: Vec<String> = list_files(&a.dets, "json")?.iter().map(|p| file_stem(p)).collect();
    let mut dets = Vec::new();
    let mut gts = Vec::new();
    for path in &gt_files {
        let id = file_stem(path);
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let labels = parse_labels(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        gts.push(labels.iter().filter_map(|l| l.to_ground_truth(&config.difficulty_table)).collect());
        let det_path = a.dets.join(format!("{id}.json"));
        if det_ids.contains(&id) {
            let records: Vec<DetectionRecord> = read_json(&det_path)?;
            dets.push(from_records(&records));
        } else {
            warn!("no detections for image {id}; treating it as empty");
            dets.push(Vec::new());
        }
    }
    for id in det_ids.iter().filter(|id| !gt_files.iter().any(|p| &&file_stem(p) == id)) {
        warn!("ignoring detections for {id}: no label file");
    }
    Ok((dets, gts))
}

fn criterion_fields(c: &MatchCriterion) -> (&'static str, f64) {
    match *c {
        MatchCriterion::Iou3d(t) => ("iou3d", t),
        MatchCriterion::IouBev(t) => ("iou_bev", t),
        MatchCriterion::CenterDistance(t) => ("center_distance", t),
    }
}

fn eval(a: &EvalArgs) -> Result<()> {
    let config: EvalConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => EvalConfig::default(),
    };
    if config.difficulty == Difficulty::Ignored {
        bail!("target difficulty cannot be `ignored`");
    }
    let (dets, gts) = load_split(a, &config)?;
    let mut classes = Vec::new();
    let mut csv = String::from("class,criterion,threshold,score,tp,fp,precision,recall\n");
    for (class_id, name) in KITTI_CLASSES.iter().enumerate() {
        let num_detections = dets.iter().flatten().filter(|d| d.class_id == class_id).count();
        let (ap, num_gt) = match ap_r40(&dets, &gts, class_id, &config) {
            Ok(r) => {
                for curve in &r.curves {
                    let (kind, thr) = criterion_fields(&curve.criterion);
                    for p in &curve.points {
                        let nums = csv_row(&[p.score, p.tp as f64, p.fp as f64, p.precision, p.recall]);
                        csv.push_str(&format!("{name},{kind},{},{nums}\n", fmt_g6(thr)));
                    }
                }
                (Some(r.ap), r.num_gt)
            }
            Err(CoreError::UndefinedAp(_)) => (None, 0),
            Err(e) => return Err(e.into()),
        };
        let tp = tp_metrics(&dets, &gts, class_id, a.tp_distance)?;
        classes.push(ClassReport { class_id, name, num_gt, num_detections, ap, tp_metrics: tp });
    }
    let per_class: Vec<Option<f64>> = classes.iter().map(|c| c.ap).collect();
    let report = EvalReport { config, images: gts.len(), mean_ap: mean_ap(&per_class).ok(), classes };
    write_output(a.output.as_deref(), &to_json(&report)?)?;
    if let Some(p) = &a.pr_csv {
        write_file(p, csv.as_bytes())?;
    }
    if report.mean_ap.is_none() {
        return Err(MetricFailure("no class has ground truth at the target difficulty; mean AP is undefined".into()).into());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DepthImage {
    id: String,
    metrics: Option<DepthMetrics>,
}

#[derive(Debug, Serialize)]
struct DepthReport {
    cap: f64,
    images: Vec<DepthImage>,
    mean: Option<DepthMetrics>,
}

fn depth(a: &DepthArgs) -> Result<()> {
    let gt_files = list_files(&a.gt, "png")?;
    if gt_files.is_empty() {
        bail!("no .png files in {}", a.gt.display());
    }
    let mut images = Vec::new();
    for gt_path in &gt_files {
        let id = file_stem(gt_path);
        let pred_path = a.pred.join(format!("{id}.png"));
        let gt = read_depth_png(gt_path).with_context(|| format!("cannot read {}", gt_path.display()))?;
        let pred = read_depth_png(&pred_path).with_context(|| format!("cannot read {}", pred_path.display()))?;
        let metrics = match depth_metrics(pred.grid(), &gt, a.cap) {
            Ok(m) => Some(m),
            Err(CoreError::EmptyMask) => {
                warn!("{id}: no valid ground-truth pixels");
                None
            }
            Err(e) => return Err(anyhow::Error::from(e).context(format!("image {id}"))),
        };
        images.push(DepthImage { id, metrics });
    }
    let valid: Vec<DepthMetrics> = images.iter().filter_map(|i| i.metrics).collect();
    let report = DepthReport { cap: a.cap, mean: DepthMetrics::mean(&valid), images };
    write_output(a.output.as_deref(), &to_json(&report)?)?;
    if report.mean.is_none() {
        return Err(MetricFailure("no image has valid ground-truth pixels".into()).into());
    }
    Ok(())
}

fn lift(a: &LiftArgs) -> Result<()> {
    let k: CameraIntrinsics = read_json(&a.intrinsics)?;
    let map = read_depth_png(&a.depth).with_context(|| format!("cannot read {}", a.depth.display()))?;
    let points = lift_to_pointcloud(map.grid(), &k, a.stride)?;
    let mut csv = String::from("x,y,z\n");
    for p in &points {
        csv.push_str(&csv_row(&[p.x, p.y, p.z]));
        csv.push('\n');
    }
    write_output(a.output.as_deref(), &csv)
}

fn resize(a: &ResizeArgs) -> Result<()> {
    let map = read_depth_png(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let out = resize_preserving(&map, a.width, a.height)?;
    write_depth_png(&a.output, out.grid()).with_context(|| format!("cannot write {}", a.output.display()))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: a.seed,
        num_images: a.num_images,
        boxes_per_image: a.boxes_per_image,
        center_sigma: a.center_sigma,
        size_sigma: a.size_sigma,
        yaw_sigma: a.yaw_sigma,
        depth_density: a.depth_density,
        depth_sigma: a.depth_sigma,
    };
    let manifest = write_dataset(&cfg, &a.output)?;
    print!("{manifest}");
    Ok(())
}

/// Convenience for tests and embedding: parse `args` (without the program
/// name) and run.
pub fn run_args<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("mono3d")).chain(args.into_iter().map(Into::into));
    run(Cli::try_parse_from(argv)?)
}

