//! Structural checks for every JSON reply the agents request.

use regex::Regex;
use serde_json::Value;
use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::backends::{JsonContract, ResponseContract};
use crate::profiles::{ClinicalStatus, Severity};

fn number_in(v: &Value, key: &str, lo: f64, hi: f64) -> Result<f64, String> {
    let x = v.get(key).and_then(Value::as_f64).ok_or_else(|| format!("\"{key}\" must be a number"))?;
    if x < lo || x > hi {
        return Err(format!("\"{key}\" = {x} is outside [{lo}, {hi}]"));
    }
    Ok(x)
}

fn optional_string(v: &Value, key: &str) -> Result<(), String> {
    match v.get(key) {
        None | Some(Value::Null) | Some(Value::String(_)) => Ok(()),
        Some(_) => Err(format!("\"{key}\" must be a string")),
    }
}

pub(crate) fn appraisal() -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("patient_appraisal", |v| {
        number_in(v, "empathy", -1.0, 1.0)?;
        number_in(v, "pressure", -1.0, 1.0)?;
        optional_string(v, "thought_trace")?;
        optional_string(v, "strategy_directive")
    }))
}

pub(crate) fn evaluator_cot() -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("evaluator_cot", |v| {
        number_in(v, "suspicion_score", 0.0, 1.0)?;
        match v.get("next_move_type").and_then(Value::as_str) {
            Some("Proceed" | "Investigate" | "Terminate") => {}
            _ => return Err("\"next_move_type\" must be Proceed, Investigate or Terminate".into()),
        }
        if v.get("guidance_for_chat").and_then(Value::as_str).is_none() {
            return Err("\"guidance_for_chat\" must be a string".into());
        }
        optional_string(v, "reasoning_step")?;
        optional_string(v, "target_topic")?;
        match v.get("inconsistency_flags") {
            None | Some(Value::Null) => {}
            Some(Value::Array(a)) if a.iter().all(Value::is_string) => {}
            Some(_) => return Err("\"inconsistency_flags\" must be a list of strings".into()),
        }
        match v.get("nonverbal_mismatch") {
            None | Some(Value::Null) | Some(Value::Bool(_)) => {}
            Some(_) => return Err("\"nonverbal_mismatch\" must be a boolean".into()),
        }
        match v.get("deception_hint") {
            None | Some(Value::Null) => Ok(()),
            Some(Value::String(s)) if matches!(s.as_str(), "Concealing" | "Exaggerating" | "None") => Ok(()),
            Some(_) => Err("\"deception_hint\" must be Concealing, Exaggerating or None".into()),
        }
    }))
}

pub(crate) fn scale_plan() -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("scale_plan", |v| {
        for key in ["clinician_scales", "self_report_scales"] {
            let list = v.get(key).and_then(Value::as_array).ok_or_else(|| format!("\"{key}\" must be a list"))?;
            for entry in list {
                if entry.get("name").and_then(Value::as_str).is_none() {
                    return Err(format!("every \"{key}\" entry needs a string \"name\""));
                }
            }
        }
        Ok(())
    }))
}

/// Item scores as integers, without range checks.
pub(crate) fn item_scores(v: &Value) -> Result<Vec<i32>, String> {
    let list = v.get("item_scores").and_then(Value::as_array).ok_or("\"item_scores\" must be a list")?;
    list.iter()
        .map(|x| x.as_i64().and_then(|n| i32::try_from(n).ok()).ok_or_else(|| "item scores must be integers".to_string()))
        .collect()
}

/// `dialogue_evidence` as item → rounds, without range checks.
pub(crate) fn evidence_map(v: &Value) -> Result<BTreeMap<usize, Vec<u32>>, String> {
    let mut out = BTreeMap::new();
    let Some(obj) = v.get("dialogue_evidence") else { return Ok(out) };
    if obj.is_null() {
        return Ok(out);
    }
    let obj = obj.as_object().ok_or("\"dialogue_evidence\" must be an object")?;
    for (k, rounds) in obj {
        let item: usize = k.trim().parse().map_err(|_| format!("evidence key {k} is not an item index"))?;
        let rounds = rounds
            .as_array()
            .ok_or("evidence values must be lists of rounds")?
            .iter()
            .map(|r| r.as_u64().and_then(|n| u32::try_from(n).ok()).ok_or("rounds must be non-negative integers"))
            .collect::<Result<Vec<u32>, _>>()?;
        out.insert(item, rounds);
    }
    Ok(out)
}

pub(crate) fn scale_answers(
    count: usize,
    min: i32,
    max: i32,
    last_round: Option<u32>,
) -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("scale_answers", move |v| {
        let scores = item_scores(v)?;
        if scores.len() != count {
            return Err(format!("expected {count} item scores, got {}", scores.len()));
        }
        if let Some(s) = scores.iter().find(|s| **s < min || **s > max) {
            return Err(format!("item score {s} outside [{min}, {max}]"));
        }
        optional_string(v, "interpretation")?;
        if let Some(last) = last_round {
            for (item, rounds) in evidence_map(v)? {
                if item >= count {
                    return Err(format!("evidence for item {item}, scale has {count} items"));
                }
                if let Some(r) = rounds.iter().find(|r| **r > last) {
                    return Err(format!("evidence cites round {r}, transcript ends at round {last}"));
                }
            }
        }
        Ok(())
    }))
}

fn round_ref() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:turn|round)s?\s*#?\s*(\d+)").expect("valid regex"))
}

/// Round numbers cited as "Turn 14" / "round 3" in free text.
pub fn parse_round_refs(text: &str) -> Vec<u32> {
    round_ref()
        .captures_iter(text)
        .filter_map(|c| c[1].parse::<u32>().ok())
        .collect()
}

/// Rounds cited by each string of a `key_evidence` list.
pub fn evidence_rounds(entries: &[String]) -> Vec<Vec<u32>> {
    entries.iter().map(|e| parse_round_refs(e)).collect()
}

pub(crate) fn diagnosis(last_round: u32) -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("diagnosis", move |v| {
        let fd = v.get("final_diagnosis").ok_or("missing \"final_diagnosis\"")?;
        let status = fd.get("status").and_then(Value::as_str).ok_or("missing final_diagnosis.status")?;
        if ClinicalStatus::parse(status).is_none() {
            return Err(format!("unknown status {status}"));
        }
        let sev = fd.get("severity").and_then(Value::as_str).ok_or("missing final_diagnosis.severity")?;
        if Severity::parse(sev).is_none() {
            return Err(format!("unknown severity {sev}"));
        }
        let reasoning = v.get("reasoning").ok_or("missing \"reasoning\"")?;
        optional_string(reasoning, "symptom_match")?;
        optional_string(reasoning, "discrepancy_resolution")?;
        let evidence = reasoning
            .get("key_evidence")
            .and_then(Value::as_array)
            .ok_or("reasoning.key_evidence must be a list")?;
        if evidence.is_empty() {
            return Err("reasoning.key_evidence is empty".into());
        }
        for e in evidence {
            let text = e.as_str().ok_or("key_evidence entries must be strings")?;
            let rounds = parse_round_refs(text);
            if rounds.is_empty() {
                return Err(format!("key_evidence entry \"{text}\" cites no round"));
            }
            if let Some(r) = rounds.iter().find(|r| **r > last_round) {
                return Err(format!("key_evidence cites round {r}, transcript ends at round {last_round}"));
            }
        }
        Ok(())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn validate(c: &ResponseContract, v: Value) -> Result<(), String> {
        match c {
            ResponseContract::JsonSchema(c) => c.validate(&v),
            ResponseContract::FreeText => Ok(()),
        }
    }

    #[test]
    fn round_references() {
        assert_eq!(parse_round_refs("Turn 14: admitted; round 3 and Round #7"), vec![14, 3, 7]);
        assert!(parse_round_refs("no refs").is_empty());
    }

    #[test]
    fn scale_answer_checks() {
        let c = scale_answers(3, 0, 3, Some(20));
        assert!(validate(&c, json!({"item_scores": [0, 1, 3]})).is_ok());
        assert!(validate(&c, json!({"item_scores": [0, 1]})).is_err());
        assert!(validate(&c, json!({"item_scores": [0, 1, 4]})).is_err());
        assert!(validate(&c, json!({"item_scores": [0, 1, 2], "dialogue_evidence": {"0": [99]}})).is_err());
        assert!(validate(&c, json!({"item_scores": [0, 1, 2], "dialogue_evidence": {"5": [1]}})).is_err());
        assert!(validate(&c, json!({"item_scores": [0, 1, 2], "dialogue_evidence": {"2": [20]}})).is_ok());
    }

    #[test]
    fn evaluator_cot_checks() {
        let c = evaluator_cot();
        let ok = json!({"suspicion_score": 0.4, "next_move_type": "Proceed", "guidance_for_chat": "ask"});
        assert!(validate(&c, ok.clone()).is_ok());
        let mut bad = ok.clone();
        bad["suspicion_score"] = json!(1.5);
        assert!(validate(&c, bad).is_err());
        let mut bad = ok;
        bad["deception_hint"] = json!("Lying");
        assert!(validate(&c, bad).is_err());
    }

    #[test]
    fn diagnosis_checks() {
        let c = diagnosis(10);
        let ok = json!({
            "final_diagnosis": {"status": "Depression", "severity": "Moderate"},
            "reasoning": {"key_evidence": ["Turn 4: low mood"]}
        });
        assert!(validate(&c, ok.clone()).is_ok());
        let mut bad = ok.clone();
        bad["reasoning"]["key_evidence"] = json!(["Turn 40: nothing"]);
        assert!(validate(&c, bad).is_err());
        let mut bad = ok;
        bad["reasoning"]["key_evidence"] = json!([]);
        assert!(validate(&c, bad).is_err());
    }
}
