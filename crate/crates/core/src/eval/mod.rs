//! Detection metrics: AP at 40 recall positions, mean AP, and the
//! translation / scale / orientation errors of center-distance matches.

mod difficulty;
pub mod kitti;

pub use difficulty::{assign_difficulty, Difficulty, DifficultyTable, DifficultyTier, LabelMeta};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decode::ScoredBox3D;
use crate::error::{Error, Result};
use crate::geometry::{iou_3d, iou_bev, Box2D, Box3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub box3d: Box3D,
    pub box2d: Box2D,
    pub class_id: usize,
    pub difficulty: Difficulty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMetric {
    Iou3d,
    IouBev,
    CenterDistance,
}

/// A concrete matching rule: which affinity and what cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MatchCriterion {
    Iou3d(f64),
    IouBev(f64),
    /// BEV center distance in meters.
    CenterDistance(f64),
}

impl MatchCriterion {
    /// Affinity (larger is better) if the pair qualifies as a match.
    pub fn affinity(&self, det: &Box3D, gt: &Box3D) -> Option<f64> {
        match *self {
            MatchCriterion::Iou3d(t) => Some(iou_3d(det, gt)).filter(|v| *v >= t),
            MatchCriterion::IouBev(t) => Some(iou_bev(det, gt)).filter(|v| *v >= t),
            MatchCriterion::CenterDistance(t) => {
                let d = bev_center_distance(det, gt);
                (d <= t).then_some(-d)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MatchCriterion::Iou3d(t) | MatchCriterion::IouBev(t) => t > 0.0 && t <= 1.0,
            MatchCriterion::CenterDistance(t) => t > 0.0 && t.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid match threshold in {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// IoU threshold per class id; the defaults are the KITTI values for
    /// car, pedestrian and cyclist.
    pub iou_thresholds: Vec<f64>,
    pub recall_positions: usize,
    pub match_metric: MatchMetric,
    /// Center-distance cutoffs in meters (nuScenes convention).
    pub distance_thresholds: Vec<f64>,
    /// Ground truth harder than this tier is treated as ignored.
    pub difficulty: Difficulty,
    pub difficulty_table: DifficultyTable,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.7, 0.5, 0.5],
            recall_positions: 40,
            match_metric: MatchMetric::Iou3d,
            distance_thresholds: vec![0.5, 1.0, 2.0, 4.0],
            difficulty: Difficulty::Moderate,
            difficulty_table: DifficultyTable::default(),
        }
    }
}

impl EvalConfig {
    /// The criteria AP is averaged over for `class_id`.
    pub fn criteria(&self, class_id: usize) -> Result<Vec<MatchCriterion>> {
        let crit: Vec<MatchCriterion> = match self.match_metric {
            MatchMetric::Iou3d | MatchMetric::IouBev => {
                let t = *self.iou_thresholds.get(class_id).ok_or(Error::UnknownClass {
                    class: class_id,
                    available: self.iou_thresholds.len(),
                })?;
                vec![if self.match_metric == MatchMetric::Iou3d {
                    MatchCriterion::Iou3d(t)
                } else {
                    MatchCriterion::IouBev(t)
                }]
            }
            MatchMetric::CenterDistance => {
                self.distance_thresholds.iter().map(|&t| MatchCriterion::CenterDistance(t)).collect()
            }
        };
        if crit.is_empty() {
            return Err(Error::InvalidArgument("no match thresholds configured".into()));
        }
        for c in &crit {
            c.validate()?;
        }
        Ok(crit)
    }
}

pub fn bev_center_distance(a: &Box3D, b: &Box3D) -> f64 {
    (a.center.x - b.center.x).hypot(a.center.z - b.center.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    /// Score cutoff: all detections scoring at least this much are kept.
    pub score: f64,
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApCurve {
    pub criterion: MatchCriterion,
    pub ap: f64,
    pub points: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub class_id: usize,
    /// Mean over `curves`.
    pub ap: f64,
    pub num_gt: usize,
    pub curves: Vec<ApCurve>,
}

/// Outcome of one detection after matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    TruePositive(usize),
    FalsePositive,
    /// Matched an ignored ground truth; excluded from the curve.
    Ignored,
}

fn counts(gt: &GroundTruthBox, target: Difficulty) -> bool {
    gt.difficulty <= target
}

/// Greedy matching within one image. Detections are visited by descending
/// score (ties in input order); each takes the unmatched ground truth of its
/// class with the best affinity. Ground truth harder than `target` is
/// ignored. Returns `(detection index, outcome)` for every detection of
/// `class_id`, in visiting order.
pub fn match_image(
    dets: &[ScoredBox3D],
    gts: &[GroundTruthBox],
    class_id: usize,
    criterion: MatchCriterion,
    target: Difficulty,
) -> Vec<(usize, MatchOutcome)> {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].class_id == class_id).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(order.len());
    for i in order {
        let d = &dets[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] || g.class_id != class_id {
                continue;
            }
            if let Some(a) = criterion.affinity(&d.box3d, &g.box3d) {
                if best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
        }
        let outcome = match best {
            Some((j, _)) => {
                taken[j] = true;
                if counts(&gts[j], target) {
                    MatchOutcome::TruePositive(j)
                } else {
                    MatchOutcome::Ignored
                }
            }
            None => MatchOutcome::FalsePositive,
        };
        out.push((i, outcome));
    }
    out
}

/// Precision/recall after each distinct score cutoff.
pub fn pr_curve(mut outcomes: Vec<(f64, MatchOutcome)>, num_gt: usize) -> Vec<PrPoint> {
    outcomes.retain(|(_, o)| *o != MatchOutcome::Ignored);
    outcomes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < outcomes.len() {
        let score = outcomes[i].0;
        while i < outcomes.len() && outcomes[i].0 == score {
            match outcomes[i].1 {
                MatchOutcome::TruePositive(_) => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push(PrPoint {
            score,
            tp,
            fp,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / num_gt as f64,
        });
    }
    points
}

/// Mean of interpolated precision at recall `k / n` for `k = 1..=n`, where
/// interpolated precision at `r` is the best precision at recall `>= r`.
pub fn interpolated_ap(points: &[PrPoint], num_gt: usize, positions: usize) -> f64 {
    let mut sum = 0.0;
    for k in 1..=positions {
        // tp / num_gt >= k / positions, in integers.
        let best = points
            .iter()
            .filter(|p| p.tp * positions >= k * num_gt)
            .map(|p| p.precision)
            .fold(0.0, f64::max);
        sum += best;
    }
    sum / positions as f64
}

fn validate_inputs(dets: &[Vec<ScoredBox3D>], gts: &[Vec<GroundTruthBox>], config: &EvalConfig) -> Result<()> {
    if dets.len() != gts.len() {
        return Err(Error::Shape(format!("{} detection images but {} ground-truth images", dets.len(), gts.len())));
    }
    if config.recall_positions == 0 {
        return Err(Error::InvalidArgument("recall_positions must be positive".into()));
    }
    if config.difficulty == Difficulty::Ignored {
        return Err(Error::InvalidArgument("evaluation difficulty must be easy, moderate or hard".into()));
    }
    Ok(())
}

/// AP for one class; `dets[i]` and `gts[i]` belong to the same image.
pub fn ap_r40(dets: &[Vec<ScoredBox3D>], gts: &[Vec<GroundTruthBox>], class_id: usize, config: &EvalConfig) -> Result<ApResult> {
    validate_inputs(dets, gts, config)?;
    let num_gt = gts.iter().flatten().filter(|g| g.class_id == class_id && counts(g, config.difficulty)).count();
    if num_gt == 0 {
        return Err(Error::UndefinedAp(class_id));
    }
    let mut curves = Vec::new();
    for criterion in config.criteria(class_id)? {
        let outcomes: Vec<_> = dets
            .iter()
            .zip(gts)
            .flat_map(|(d, g)| {
                match_image(d, g, class_id, criterion, config.difficulty)
                    .into_iter()
                    .map(|(i, o)| (d[i].score, o))
            })
            .collect();
        let points = pr_curve(outcomes, num_gt);
        let ap = interpolated_ap(&points, num_gt, config.recall_positions);
        curves.push(ApCurve { criterion, ap, points });
    }
    let ap = curves.iter().map(|c| c.ap).sum::<f64>() / curves.len() as f64;
    Ok(ApResult { class_id, ap, num_gt, curves })
}

/// Unweighted mean of the defined per-class APs.
pub fn mean_ap(per_class: &[Option<f64>]) -> Result<f64> {
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::InvalidInput("no class has a defined AP".into()));
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpMetrics {
    /// Mean BEV center distance, meters.
    pub ate: f64,
    /// Mean `1 - IoU` of the sizes once centers and headings coincide.
    pub ase: f64,
    /// Mean absolute heading difference, radians in `[0, π]`.
    pub aoe: f64,
    pub matches: usize,
}

/// IoU of two boxes that share center and heading.
pub fn aligned_iou(a: [f64; 3], b: [f64; 3]) -> f64 {
    let inter: f64 = (0..3).map(|i| a[i].min(b[i])).product();
    let union = a.iter().product::<f64>() + b.iter().product::<f64>() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Absolute angle difference wrapped to `[0, π]`.
pub fn yaw_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// True-positive error metrics under center-distance matching. `None` when
/// nothing matched.
pub fn tp_metrics(
    dets: &[Vec<ScoredBox3D>],
    gts: &[Vec<GroundTruthBox>],
    class_id: usize,
    distance_threshold: f64,
) -> Result<Option<TpMetrics>> {
    if dets.len() != gts.len() {
        return Err(Error::Shape(format!("{} detection images but {} ground-truth images", dets.len(), gts.len())));
    }
    let criterion = MatchCriterion::CenterDistance(distance_threshold);
    criterion.validate()?;
    let (mut ate, mut ase, mut aoe, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (d, g) in dets.iter().zip(gts) {
        // Every annotated box counts here, whatever its tier.
        for (i, outcome) in match_image(d, g, class_id, criterion, Difficulty::Ignored) {
            let MatchOutcome::TruePositive(j) = outcome else { continue };
            let (db, gb) = (&d[i].box3d, &g[j].box3d);
            ate += bev_center_distance(db, gb);
            ase += 1.0 - aligned_iou(db.size, gb.size);
            aoe += yaw_difference(db.yaw(), gb.yaw());
            n += 1;
        }
    }
    if n == 0 {
        return Ok(None);
    }
    let n_f = n as f64;
    Ok(Some(TpMetrics { ate: ate / n_f, ase: ase / n_f, aoe: aoe / n_f, matches: n }))
}
