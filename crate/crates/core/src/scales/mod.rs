//! Psychometric instrument repository, item scoring and scale-plan checks.

mod plan;
mod repository;
mod scoring;

pub use plan::{validate_plan, PlanEntry, PlanViolation, ScalePlan};
pub use repository::{load_repository, Repository, BUNDLED_SCALES, EXPECTED_SCALE_COUNT};
pub use scoring::{score_scale, ScoreContext, Scored};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScaleDomain {
    Depression,
    Anxiety,
    #[serde(rename = "PTSD")]
    Ptsd,
    Sleep,
    MoodPersonality,
}

impl ScaleDomain {
    /// Depression, Anxiety and PTSD are mutually exclusive within a plan.
    pub fn is_primary(self) -> bool {
        matches!(self, ScaleDomain::Depression | ScaleDomain::Anxiety | ScaleDomain::Ptsd)
    }
}

impl fmt::Display for ScaleDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScaleDomain::Depression => "Depression",
            ScaleDomain::Anxiety => "Anxiety",
            ScaleDomain::Ptsd => "PTSD",
            ScaleDomain::Sleep => "Sleep",
            ScaleDomain::MoodPersonality => "MoodPersonality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Administration {
    SelfReport,
    ClinicianRated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoringMode {
    SumBands,
    ReverseBands,
    ConditionalCutoff,
    Classification,
    AlgorithmStub,
}

/// Coarse severity a band maps onto, used when comparing instruments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    Normal,
    Mild,
    Moderate,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRange {
    pub min: i32,
    pub max: i32,
}

/// One severity band. For `SumBands` and `Classification` the threshold is
/// the smallest total inside the band; for `ReverseBands` it is the largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub threshold: i32,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDefinition {
    pub name: String,
    pub abbr: String,
    pub domain: ScaleDomain,
    pub admin: Administration,
    pub item_count: usize,
    pub item_range: ItemRange,
    pub scoring_mode: ScoringMode,
    #[serde(default)]
    pub bands: Vec<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_key: Option<String>,
    /// Positive-screen cut-off per condition value (`ConditionalCutoff` only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conditional_cutoffs: BTreeMap<String, i32>,
}

impl ScaleDefinition {
    /// Structural checks on a single definition.
    pub fn check(&self) -> Result<(), String> {
        if self.item_count == 0 {
            return Err(format!("{}: item_count must be >= 1", self.abbr));
        }
        if self.item_range.min > self.item_range.max {
            return Err(format!("{}: item_range min > max", self.abbr));
        }
        let increasing = match self.scoring_mode {
            ScoringMode::SumBands | ScoringMode::Classification => Some(true),
            ScoringMode::ReverseBands => Some(false),
            ScoringMode::ConditionalCutoff | ScoringMode::AlgorithmStub => None,
        };
        if let Some(increasing) = increasing {
            if self.bands.is_empty() {
                return Err(format!("{}: banded scale without bands", self.abbr));
            }
            let ok = self.bands.windows(2).all(|w| {
                if increasing {
                    w[0].threshold < w[1].threshold
                } else {
                    w[0].threshold > w[1].threshold
                }
            });
            if !ok {
                return Err(format!("{}: band thresholds not strictly monotone", self.abbr));
            }
        }
        if self.scoring_mode == ScoringMode::ConditionalCutoff
            && (self.condition_key.is_none() || self.conditional_cutoffs.is_empty())
        {
            return Err(format!("{}: conditional cut-off without condition data", self.abbr));
        }
        Ok(())
    }

    pub fn min_total(&self) -> i32 {
        self.item_count as i32 * self.item_range.min
    }

    pub fn max_total(&self) -> i32 {
        self.item_count as i32 * self.item_range.max
    }

    /// Grade attached to a severity label, if the label is one of this
    /// scale's graded bands.
    pub fn grade_of(&self, label: &str) -> Option<Grade> {
        self.bands.iter().find(|b| b.label == label).and_then(|b| b.grade)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rater {
    Patient,
    Evaluator,
}

/// Direction of a suspicion-driven rating adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjustmentDirection {
    Upward,
    Downward,
}

/// Record of the literal (pre-adjustment) rating when the rater shifted
/// item scores because the patient was flagged as unreliable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingAdjustment {
    pub direction: AdjustmentDirection,
    pub literal_item_scores: Vec<i32>,
    pub literal_total: i32,
    pub literal_severity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleResponse {
    pub scale_abbr: String,
    pub item_scores: Vec<i32>,
    pub total_score: i32,
    pub severity: String,
    pub interpretation: String,
    /// Item index (0-based) to the rounds that support it.
    pub dialogue_evidence: BTreeMap<usize, Vec<u32>>,
    pub rater: Rater,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjustment: Option<RatingAdjustment>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("cannot parse scale repository: {0}")]
    Parse(String),
    #[error("cannot read scale repository: {0}")]
    Io(String),
    #[error("expected {expected} scale definitions, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("duplicate scale abbreviation {0}")]
    DuplicateAbbr(String),
    #[error("invalid scale definition: {0}")]
    InvalidDefinition(String),
    #[error("{abbr}: expected {expected} item scores, got {found}")]
    ItemCountMismatch { abbr: String, expected: usize, found: usize },
    #[error("{abbr}: item {index} score {value} outside [{min}, {max}]")]
    ItemOutOfRange { abbr: String, index: usize, value: i32, min: i32, max: i32 },
    #[error("{abbr}: scoring needs context key {key}")]
    MissingContext { abbr: String, key: String },
    #[error("unknown scale {0}")]
    UnknownScale(String),
}
