use serde::{Deserialize, Serialize};

/// KITTI difficulty tiers, ordered from easiest to excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyTier {
    pub min_height: f64,
    pub max_occlusion: u8,
    pub max_truncation: f64,
}

impl DifficultyTier {
    fn admits(&self, height: f64, occlusion: u8, truncation: f64) -> bool {
        height >= self.min_height && occlusion <= self.max_occlusion && truncation <= self.max_truncation
    }
}

/// Tier bounds. The defaults follow the public KITTI benchmark convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyTable {
    pub easy: DifficultyTier,
    pub moderate: DifficultyTier,
    pub hard: DifficultyTier,
}

impl Default for DifficultyTable {
    fn default() -> Self {
        Self {
            easy: DifficultyTier { min_height: 40.0, max_occlusion: 0, max_truncation: 0.15 },
            moderate: DifficultyTier { min_height: 25.0, max_occlusion: 1, max_truncation: 0.30 },
            hard: DifficultyTier { min_height: 25.0, max_occlusion: 2, max_truncation: 0.50 },
        }
    }
}

/// Annotation attributes that decide the tier. Any missing field makes the
/// box ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelMeta {
    pub height_px: Option<f64>,
    pub occlusion: Option<u8>,
    pub truncation: Option<f64>,
}

pub fn assign_difficulty(meta: &LabelMeta, table: &DifficultyTable) -> Difficulty {
    let (Some(h), Some(o), Some(t)) = (meta.height_px, meta.occlusion, meta.truncation) else {
        return Difficulty::Ignored;
    };
    if table.easy.admits(h, o, t) {
        Difficulty::Easy
    } else if table.moderate.admits(h, o, t) {
        Difficulty::Moderate
    } else if table.hard.admits(h, o, t) {
        Difficulty::Hard
    } else {
        Difficulty::Ignored
    }
}
