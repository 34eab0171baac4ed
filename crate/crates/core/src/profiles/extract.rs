use serde_json::Value;

use super::{GroundTruth, HonestyState, PatientProfile, ProfileError};
use crate::backends::{BackendError, JsonContract, ModelBackend, ModelRequest, ResponseContract, RoleTag};
use crate::prompts::{bind, PromptSet};
use crate::rng::fnv1a;

/// Marker for dimensions the transcript does not support.
pub const ABSENT: &str = "ABSENT";

const TEXT_FIELDS: [&str; 6] = [
    "chief_complaint",
    "symptom_history",
    "treatment_history",
    "behavior_tendency",
    "communication_style",
    "affect_baseline",
];
const MAP_FIELDS: [(&str, &[&str]); 2] = [
    ("psychosocial_factors", &["stressors", "coping_mechanism", "social_support", "goals"]),
    ("psychometrics", &["impression_management", "agreeableness", "openness"]),
];

/// Fill every expected dimension that the model left out with [`ABSENT`].
fn complete_dimensions(mut v: Value) -> Value {
    let Some(obj) = v.as_object_mut() else { return v };
    for f in TEXT_FIELDS {
        let missing = obj.get(f).and_then(Value::as_str).is_none_or(|s| s.trim().is_empty());
        if missing && f != "chief_complaint" {
            obj.insert(f.to_string(), Value::String(ABSENT.into()));
        }
    }
    for (f, keys) in MAP_FIELDS {
        let map = obj.entry(f).or_insert_with(|| Value::Object(Default::default()));
        if let Some(m) = map.as_object_mut() {
            for k in keys {
                m.entry(k.to_string()).or_insert_with(|| Value::String(ABSENT.into()));
            }
        }
    }
    let demo = obj.entry("demographics").or_insert_with(|| Value::Object(Default::default()));
    if let Some(d) = demo.as_object_mut() {
        for k in ["occupation", "living_status"] {
            d.entry(k).or_insert_with(|| Value::String(ABSENT.into()));
        }
        d.entry("gender").or_insert_with(|| Value::String("Unspecified".into()));
    }
    v
}

fn parse_profile(v: &Value, id: &str) -> Result<PatientProfile, String> {
    let mut v = complete_dimensions(v.clone());
    if let Some(obj) = v.as_object_mut() {
        obj.insert("id".into(), Value::String(id.to_string()));
        obj.remove("honesty");
    }
    let profile: PatientProfile = serde_json::from_value(v).map_err(|e| e.to_string())?;
    profile.validate().map_err(|e| e.to_string())?;
    Ok(profile)
}

/// Derive a profile from a raw interview transcript with one backend call
/// (plus one repair). Honesty defaults to Frankness.
pub fn extract_profile(
    raw_transcript: &str,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<PatientProfile, ProfileError> {
    if raw_transcript.trim().is_empty() {
        return Err(ProfileError::OutOfRange { what: "transcript".into(), value: "empty".into() });
    }
    let id = format!("ext-{:08x}", fnv1a(raw_transcript) as u32);
    let check_id = id.clone();
    let contract = JsonContract::new("patient_profile", move |v| parse_profile(v, &check_id).map(|_| ()));
    let system = prompts.render("extractor", &bind([("absent_marker", ABSENT)]));
    let req = ModelRequest::new(RoleTag::Extractor, 0, system)
        .user(format!("Transcript:\n{raw_transcript}"))
        .contract(ResponseContract::JsonSchema(contract));
    let resp = backend.complete(&req).map_err(|e| match e {
        BackendError::SchemaViolation { last_value: Some(_), detail, .. } => ProfileError::SchemaViolation(detail),
        other => ProfileError::BackendFailure(other.to_string()),
    })?;
    let parsed = resp.parsed.ok_or_else(|| ProfileError::BackendFailure("no parsed reply".into()))?;
    let mut profile = parse_profile(&parsed, &id).map_err(ProfileError::SchemaViolation)?;
    profile.honesty = HonestyState::default();
    debug_assert!(GroundTruth::is_consistent(&profile.ground_truth));
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{ScriptEntry, ScriptOptions, ScriptedBackend};
    use serde_json::json;
    use std::collections::BTreeMap;

    fn backend(entry: ScriptEntry) -> ScriptedBackend {
        ScriptedBackend::new("extract", BTreeMap::from([("Extractor/0".to_string(), entry)]), ScriptOptions::default())
    }

    fn canned() -> Value {
        json!({
            "demographics": {"age": 52, "gender": "Male", "occupation": "driver", "living_status": "married"},
            "chief_complaint": "trouble sleeping",
            "symptom_history": "Two months of poor sleep.",
            "risk_flags": {"suicide": "Denied"},
            "behavior_tendency": "guarded",
            "communication_style": "brief",
            "affect_baseline": "tired",
            "psychosocial_factors": {"stressors": "job loss"},
            "ground_truth": {"status": "Depression", "severity": "Mild"}
        })
    }

    #[test]
    fn canned_profile_round_trip() {
        let b = backend(ScriptEntry::json(canned()));
        let p = extract_profile("Interviewer: hi\nParticipant: hello", &b, &PromptSet::bundled()).unwrap();
        assert_eq!(p.chief_complaint, "trouble sleeping");
        assert_eq!(p.demographics.age, 52);
        assert_eq!(p.treatment_history, ABSENT);
        assert_eq!(p.psychometrics["openness"], ABSENT);
        assert_eq!(p.psychosocial_factors["stressors"], "job loss");
        assert_eq!(p.honesty, HonestyState::default());
    }

    #[test]
    fn empty_transcript_rejected() {
        let b = backend(ScriptEntry::json(canned()));
        assert!(matches!(
            extract_profile("  ", &b, &PromptSet::bundled()),
            Err(ProfileError::OutOfRange { .. })
        ));
    }

    #[test]
    fn malformed_replies_are_backend_failures() {
        let b = backend(ScriptEntry::json(canned()).malformed_first(3));
        assert!(matches!(
            extract_profile("t", &b, &PromptSet::bundled()),
            Err(ProfileError::BackendFailure(_))
        ));
    }

    #[test]
    fn invalid_profiles_are_schema_violations() {
        let mut bad = canned();
        bad["demographics"]["age"] = json!(300);
        let b = backend(ScriptEntry::json(bad));
        assert!(matches!(
            extract_profile("t", &b, &PromptSet::bundled()),
            Err(ProfileError::SchemaViolation(_))
        ));
    }
}
