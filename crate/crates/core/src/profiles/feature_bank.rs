use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use super::{DeceptionStrategy, PatientProfile, ProfileError};
use crate::rng::stream;

/// Features injected into an augmented case unless the caller says otherwise.
pub const DEFAULT_FEATURES_PER_CASE: usize = 2;

pub const BUNDLED_FEATURE_BANK: &str = include_str!("../../data/feature_bank.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeceptionFeature {
    pub id: String,
    pub strategy_class: DeceptionStrategy,
    pub label: String,
    pub observables: Vec<String>,
    pub target_fields: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBank {
    pub features: Vec<DeceptionFeature>,
}

impl FeatureBank {
    pub fn bundled() -> FeatureBank {
        FeatureBank::from_json(BUNDLED_FEATURE_BANK).expect("bundled feature bank is valid")
    }

    /// Parse a bank document. Blank input yields an empty bank.
    pub fn from_json(text: &str) -> Result<FeatureBank, ProfileError> {
        if text.trim().is_empty() {
            return Ok(FeatureBank::default());
        }
        let bank: FeatureBank = serde_json::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        let mut seen = HashSet::new();
        for f in &bank.features {
            if !seen.insert(f.id.as_str()) {
                return Err(ProfileError::DuplicateFeatureId(f.id.clone()));
            }
            if f.strategy_class == DeceptionStrategy::Frankness {
                return Err(ProfileError::Invalid(format!("feature {} has class Frankness", f.id)));
            }
            for path in &f.target_fields {
                if FieldPath::parse(path).is_none() {
                    return Err(ProfileError::UnresolvedTarget { id: f.id.clone(), path: path.clone() });
                }
            }
        }
        Ok(bank)
    }

    pub fn get(&self, id: &str) -> Option<&DeceptionFeature> {
        self.features.iter().find(|f| f.id == id)
    }

    pub fn of_class(&self, class: DeceptionStrategy) -> impl Iterator<Item = &DeceptionFeature> {
        self.features.iter().filter(move |f| f.strategy_class == class)
    }

    /// Up to `count` distinct feature ids of `class`, drawn without
    /// replacement and returned in bank order. Frankness draws nothing.
    pub fn choose(&self, class: DeceptionStrategy, count: usize, seed: u64) -> Vec<String> {
        let mut ids: Vec<&str> = self.of_class(class).map(|f| f.id.as_str()).collect();
        ids.shuffle(&mut stream(seed, "features", 0));
        ids.truncate(count);
        let keep: HashSet<&str> = ids.into_iter().collect();
        self.of_class(class).filter(|f| keep.contains(f.id.as_str())).map(|f| f.id.clone()).collect()
    }
}

pub fn load_feature_bank(path: &Path) -> Result<FeatureBank, ProfileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProfileError::Io(format!("{}: {e}", path.display())))?;
    FeatureBank::from_json(&text)
}

/// A writable text location inside a [`PatientProfile`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldPath {
    ChiefComplaint,
    SymptomHistory,
    TreatmentHistory,
    BehaviorTendency,
    CommunicationStyle,
    AffectBaseline,
    Psychosocial(String),
    Psychometrics(String),
    Risk(String),
}

fn valid_key(key: &str) -> bool {
    !key.is_empty() && key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl FieldPath {
    pub fn parse(path: &str) -> Option<FieldPath> {
        let simple = match path {
            "chief_complaint" => Some(FieldPath::ChiefComplaint),
            "symptom_history" => Some(FieldPath::SymptomHistory),
            "treatment_history" => Some(FieldPath::TreatmentHistory),
            "behavior_tendency" => Some(FieldPath::BehaviorTendency),
            "communication_style" => Some(FieldPath::CommunicationStyle),
            "affect_baseline" => Some(FieldPath::AffectBaseline),
            _ => None,
        };
        if simple.is_some() {
            return simple;
        }
        let (head, key) = path.split_once('.')?;
        if !valid_key(key) {
            return None;
        }
        match head {
            "psychosocial_factors" => Some(FieldPath::Psychosocial(key.to_string())),
            "psychometrics" => Some(FieldPath::Psychometrics(key.to_string())),
            "risk_flags" => Some(FieldPath::Risk(key.to_string())),
            _ => None,
        }
    }

    pub fn get<'a>(&self, p: &'a PatientProfile) -> Option<&'a str> {
        match self {
            FieldPath::ChiefComplaint => Some(&p.chief_complaint),
            FieldPath::SymptomHistory => Some(&p.symptom_history),
            FieldPath::TreatmentHistory => Some(&p.treatment_history),
            FieldPath::BehaviorTendency => Some(&p.behavior_tendency),
            FieldPath::CommunicationStyle => Some(&p.communication_style),
            FieldPath::AffectBaseline => Some(&p.affect_baseline),
            FieldPath::Psychosocial(k) => p.psychosocial_factors.get(k).map(String::as_str),
            FieldPath::Psychometrics(k) => p.psychometrics.get(k).map(String::as_str),
            FieldPath::Risk(k) => p.risk_presentation.get(k).map(String::as_str),
        }
    }

    /// Append `text` as a new line; a risk path writes its presentation
    /// note, never the tri-state flag.
    pub fn append(&self, p: &mut PatientProfile, text: &str) {
        let slot: &mut String = match self {
            FieldPath::ChiefComplaint => &mut p.chief_complaint,
            FieldPath::SymptomHistory => &mut p.symptom_history,
            FieldPath::TreatmentHistory => &mut p.treatment_history,
            FieldPath::BehaviorTendency => &mut p.behavior_tendency,
            FieldPath::CommunicationStyle => &mut p.communication_style,
            FieldPath::AffectBaseline => &mut p.affect_baseline,
            FieldPath::Psychosocial(k) => p.psychosocial_factors.entry(k.clone()).or_default(),
            FieldPath::Psychometrics(k) => p.psychometrics.entry(k.clone()).or_default(),
            FieldPath::Risk(k) => p.risk_presentation.entry(k.clone()).or_default(),
        };
        if slot.trim().is_empty() || slot.trim() == super::ABSENT {
            *slot = text.to_string();
        } else {
            slot.push('\n');
            slot.push_str(text);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_bank_has_both_classes() {
        let bank = FeatureBank::bundled();
        let conceal: Vec<&str> =
            bank.of_class(DeceptionStrategy::Concealment).map(|f| f.id.as_str()).collect();
        assert_eq!(conceal, ["C01", "C02", "C03", "C04", "C05", "C06"]);
        assert_eq!(bank.of_class(DeceptionStrategy::Exaggeration).count(), 6);
    }

    #[test]
    fn choose_draws_distinct_ids_of_one_class() {
        let bank = FeatureBank::bundled();
        let picked = bank.choose(DeceptionStrategy::Exaggeration, DEFAULT_FEATURES_PER_CASE, 4);
        assert_eq!(picked.len(), 2);
        assert!(picked.iter().all(|id| bank.get(id).unwrap().strategy_class == DeceptionStrategy::Exaggeration));
        assert_ne!(picked[0], picked[1]);
        assert_eq!(picked, bank.choose(DeceptionStrategy::Exaggeration, 2, 4));
        assert_eq!(bank.choose(DeceptionStrategy::Concealment, 99, 1).len(), 6);
        assert!(bank.choose(DeceptionStrategy::Frankness, 2, 1).is_empty());
        let draws: HashSet<Vec<String>> =
            (0..40).map(|s| bank.choose(DeceptionStrategy::Concealment, 2, s)).collect();
        assert!(draws.len() > 1);
    }

    #[test]
    fn every_bundled_target_resolves() {
        for f in FeatureBank::bundled().features {
            for t in &f.target_fields {
                assert!(FieldPath::parse(t).is_some(), "{} {}", f.id, t);
            }
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let bank = FeatureBank::bundled();
        let mut features = bank.features.clone();
        features.push(features[0].clone());
        let text = serde_json::to_string(&FeatureBank { features }).unwrap();
        assert_eq!(FeatureBank::from_json(&text), Err(ProfileError::DuplicateFeatureId("C01".into())));
    }

    #[test]
    fn empty_file_is_an_empty_bank() {
        assert!(FeatureBank::from_json("").unwrap().features.is_empty());
    }

    #[test]
    fn bad_paths() {
        assert!(FieldPath::parse("demographics.age").is_none());
        assert!(FieldPath::parse("psychometrics.").is_none());
        assert!(FieldPath::parse("nonsense").is_none());
        assert_eq!(FieldPath::parse("risk_flags.suicide"), Some(FieldPath::Risk("suicide".into())));
    }
}
