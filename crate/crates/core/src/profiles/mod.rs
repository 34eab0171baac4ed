//! Patient profiles: schema, validation, PHQ-8 tiering and honesty
//! augmentation from the deception feature bank.

mod augment;
mod extract;
mod feature_bank;

pub use augment::augment_profile;
pub use extract::{extract_profile, ABSENT};
pub use feature_bank::{
    load_feature_bank, DeceptionFeature, FeatureBank, FieldPath, BUNDLED_FEATURE_BANK, DEFAULT_FEATURES_PER_CASE,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::topics::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Unspecified,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::Unspecified => "Unspecified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: i32,
    pub gender: Gender,
    pub occupation: String,
    pub living_status: String,
}

impl Demographics {
    pub fn summary(&self) -> String {
        format!(
            "{}-year-old {}, {}, {}",
            self.age,
            self.gender.as_str().to_lowercase(),
            self.occupation,
            self.living_status
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskLevel {
    Denied,
    Suspected,
    Endorsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClinicalStatus {
    Healthy,
    Depression,
    Anxiety,
    #[serde(rename = "PTSD")]
    Ptsd,
}

impl ClinicalStatus {
    pub const ALL: [ClinicalStatus; 4] =
        [ClinicalStatus::Healthy, ClinicalStatus::Depression, ClinicalStatus::Anxiety, ClinicalStatus::Ptsd];

    pub fn as_str(self) -> &'static str {
        match self {
            ClinicalStatus::Healthy => "Healthy",
            ClinicalStatus::Depression => "Depression",
            ClinicalStatus::Anxiety => "Anxiety",
            ClinicalStatus::Ptsd => "PTSD",
        }
    }

    pub fn parse(text: &str) -> Option<ClinicalStatus> {
        ClinicalStatus::ALL
            .into_iter()
            .find(|s| s.as_str().eq_ignore_ascii_case(text.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    NotApplicable,
    Mild,
    Moderate,
    Severe,
}

impl Severity {
    pub const GRADED: [Severity; 3] = [Severity::Mild, Severity::Moderate, Severity::Severe];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::NotApplicable => "NotApplicable",
            Severity::Mild => "Mild",
            Severity::Moderate => "Moderate",
            Severity::Severe => "Severe",
        }
    }

    /// Accepts "None" and "N/A" as spellings of `NotApplicable`.
    pub fn parse(text: &str) -> Option<Severity> {
        match text.trim().to_lowercase().as_str() {
            "notapplicable" | "not applicable" | "none" | "n/a" | "na" => Some(Severity::NotApplicable),
            "mild" => Some(Severity::Mild),
            "moderate" => Some(Severity::Moderate),
            "severe" => Some(Severity::Severe),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub status: ClinicalStatus,
    pub severity: Severity,
}

impl GroundTruth {
    pub fn is_consistent(&self) -> bool {
        (self.severity == Severity::NotApplicable) == (self.status == ClinicalStatus::Healthy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeceptionStrategy {
    Frankness,
    Concealment,
    Exaggeration,
}

impl DeceptionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            DeceptionStrategy::Frankness => "Frankness",
            DeceptionStrategy::Concealment => "Concealment",
            DeceptionStrategy::Exaggeration => "Exaggeration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HonestyState {
    pub deception_strategy: DeceptionStrategy,
    #[serde(default)]
    pub active_features: Vec<String>,
    #[serde(default)]
    pub topic_overrides: BTreeMap<Topic, DeceptionStrategy>,
}

impl Default for HonestyState {
    fn default() -> Self {
        HonestyState {
            deception_strategy: DeceptionStrategy::Frankness,
            active_features: Vec::new(),
            topic_overrides: BTreeMap::new(),
        }
    }
}

impl HonestyState {
    /// Strategy in force for a topic (override, else the global strategy).
    pub fn strategy_for(&self, topic: Option<Topic>) -> DeceptionStrategy {
        topic
            .and_then(|t| self.topic_overrides.get(&t).copied())
            .unwrap_or(self.deception_strategy)
    }

    /// Check the honesty invariants against a feature bank.
    pub fn check(&self, bank: &FeatureBank) -> Result<(), ProfileError> {
        let frank = self.deception_strategy == DeceptionStrategy::Frankness;
        if frank != self.active_features.is_empty() {
            return Err(ProfileError::Invalid(
                "active_features must be empty exactly when the strategy is Frankness".into(),
            ));
        }
        for id in &self.active_features {
            let feature = bank.get(id).ok_or_else(|| ProfileError::UnknownFeature(id.clone()))?;
            if feature.strategy_class != self.deception_strategy {
                return Err(ProfileError::StrategyMismatch {
                    id: id.clone(),
                    expected: self.deception_strategy,
                    found: feature.strategy_class,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub id: String,
    pub demographics: Demographics,
    pub chief_complaint: String,
    pub symptom_history: String,
    #[serde(default)]
    pub treatment_history: String,
    #[serde(default)]
    pub psychosocial_factors: BTreeMap<String, String>,
    #[serde(default)]
    pub risk_flags: BTreeMap<String, RiskLevel>,
    /// Presentation rules for risk topics; augmentation writes here so the
    /// tri-state `risk_flags` never change.
    #[serde(default)]
    pub risk_presentation: BTreeMap<String, String>,
    pub behavior_tendency: String,
    pub communication_style: String,
    pub affect_baseline: String,
    #[serde(default)]
    pub psychometrics: BTreeMap<String, String>,
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub honesty: HonestyState,
}

impl PatientProfile {
    /// Field-level invariants that do not need the feature bank.
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !(0..=120).contains(&self.demographics.age) {
            return Err(ProfileError::OutOfRange {
                what: "demographics.age".into(),
                value: self.demographics.age.to_string(),
            });
        }
        if self.chief_complaint.trim().is_empty() {
            return Err(ProfileError::Invalid("chief_complaint is empty".into()));
        }
        if self.id.trim().is_empty() {
            return Err(ProfileError::Invalid("id is empty".into()));
        }
        if !self.ground_truth.is_consistent() {
            return Err(ProfileError::Invalid(
                "ground_truth severity must be NotApplicable exactly when status is Healthy".into(),
            ));
        }
        let frank = self.honesty.deception_strategy == DeceptionStrategy::Frankness;
        if frank != self.honesty.active_features.is_empty() {
            return Err(ProfileError::Invalid(
                "honesty.active_features must be empty exactly when the strategy is Frankness".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_with(&self, bank: &FeatureBank) -> Result<(), ProfileError> {
        self.validate()?;
        self.honesty.check(bank)
    }

    pub fn from_json(text: &str) -> Result<PatientProfile, ProfileError> {
        let profile: PatientProfile =
            serde_json::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<PatientProfile, ProfileError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProfileError::Io(format!("{}: {e}", path.display())))?;
        PatientProfile::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityTier {
    pub tier: Tier,
    pub source_score: i32,
}

/// Discretize a PHQ-8 total: 0-9 Low, 10-19 Medium, 20-24 High.
pub fn phq8_to_tier(score: i32) -> Result<SeverityTier, ProfileError> {
    let tier = match score {
        0..=9 => Tier::Low,
        10..=19 => Tier::Medium,
        20..=24 => Tier::High,
        _ => {
            return Err(ProfileError::OutOfRange { what: "PHQ-8 score".into(), value: score.to_string() })
        }
    };
    Ok(SeverityTier { tier, source_score: score })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{what} out of range: {value}")]
    OutOfRange { what: String, value: String },
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("feature {id} belongs to {found:?}, not {expected:?}")]
    StrategyMismatch { id: String, expected: DeceptionStrategy, found: DeceptionStrategy },
    #[error("a non-Frankness strategy needs at least one feature")]
    MissingFeatures,
    #[error("duplicate feature id {0}")]
    DuplicateFeatureId(String),
    #[error("feature {id}: target {path} does not resolve to a profile field")]
    UnresolvedTarget { id: String, path: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}
