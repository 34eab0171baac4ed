use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use crate::backends::{BackendError, DecodeParams, JsonContract, ModelBackend, ModelRequest, ResponseContract, RoleTag};
use crate::prompts::{bind, PromptSet};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RealismDimension {
    DiscourseOrganicness,
    LinguisticTexture,
    EmotionalGranularity,
    DefenseResistance,
    InteractionDynamics,
}

impl RealismDimension {
    pub const ALL: [RealismDimension; 5] = [
        RealismDimension::DiscourseOrganicness,
        RealismDimension::LinguisticTexture,
        RealismDimension::EmotionalGranularity,
        RealismDimension::DefenseResistance,
        RealismDimension::InteractionDynamics,
    ];

    /// Key used in the rater's JSON reply.
    pub fn key(self) -> &'static str {
        match self {
            RealismDimension::DiscourseOrganicness => "Discourse_Organicness",
            RealismDimension::LinguisticTexture => "Linguistic_Texture",
            RealismDimension::EmotionalGranularity => "Emotional_Granularity",
            RealismDimension::DefenseResistance => "Defense_Resistance",
            RealismDimension::InteractionDynamics => "Interaction_Dynamics",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub score: u8,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealismScore {
    pub dimensions: BTreeMap<RealismDimension, DimensionScore>,
}

impl RealismScore {
    pub fn score(&self, d: RealismDimension) -> u8 {
        self.dimensions[&d].score
    }
}

fn contract() -> ResponseContract {
    ResponseContract::JsonSchema(JsonContract::new("realism_rating", |v| {
        for d in RealismDimension::ALL {
            let entry = v.get(d.key()).ok_or_else(|| format!("missing \"{}\"", d.key()))?;
            let score = entry.get("score").and_then(Value::as_f64).ok_or_else(|| format!("\"{}.score\" must be a number", d.key()))?;
            if score.fract() != 0.0 || !(1.0..=10.0).contains(&score) {
                return Err(format!("\"{}.score\" = {score} must be an integer in 1..=10", d.key()));
            }
            if !entry.get("reason").is_none_or(Value::is_string) {
                return Err(format!("\"{}.reason\" must be a string", d.key()));
            }
        }
        Ok(())
    }))
}

/// Score one transcript on the five realism dimensions. `index` numbers the
/// call among a rating run so scripted backends and decode seeds stay
/// reproducible.
pub fn rate_realism(
    transcript: &str,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    seed: u64,
    index: u32,
) -> Result<RealismScore, BackendError> {
    if transcript.trim().is_empty() {
        return Err(BackendError::InvalidRequest("empty transcript".into()));
    }
    let bindings = bind([("transcript", transcript)]);
    let req = ModelRequest::new(RoleTag::Rater, index, prompts.render("rater", &bindings))
        .user(format!("Dialogue to evaluate:\n{transcript}"))
        .contract(contract())
        .decode(DecodeParams { temperature: 0.0, max_tokens: 1024, seed: Some(derive_seed(seed, "rater", u64::from(index))) })
        .bindings(bindings);
    let parsed = backend.complete(&req)?.parsed.expect("JSON contract yields a parsed value");
    let dimensions = RealismDimension::ALL
        .into_iter()
        .map(|d| {
            let e = &parsed[d.key()];
            let score = e["score"].as_f64().unwrap_or_default() as u8;
            let reason = e.get("reason").and_then(Value::as_str).unwrap_or_default().to_string();
            (d, DimensionScore { score, reason })
        })
        .collect();
    Ok(RealismScore { dimensions })
}

/// Seeded presentation order of `systems` compared systems for dialogue
/// `index`, so the rater never sees a fixed system first.
pub fn presentation_order(systems: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..systems).collect();
    order.shuffle(&mut stream(seed, "presentation", index));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single rating.
    pub sd: f64,
    pub n: usize,
}

/// Per-system, per-dimension mean (SD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealismTable {
    pub rows: BTreeMap<String, BTreeMap<RealismDimension, DimensionSummary>>,
}

impl RealismTable {
    pub fn render(&self) -> String {
        let mut out = String::from("system");
        for d in RealismDimension::ALL {
            out.push('\t');
            out.push_str(d.key());
        }
        out.push('\n');
        for (system, dims) in &self.rows {
            out.push_str(system);
            for d in RealismDimension::ALL {
                let s = &dims[&d];
                out.push_str(&format!("\t{:.2} ({:.2})", s.mean, s.sd));
            }
            out.push('\n');
        }
        out
    }
}

pub fn realism_table(scores: &[(String, RealismScore)]) -> RealismTable {
    let mut grouped: BTreeMap<String, Vec<&RealismScore>> = BTreeMap::new();
    for (system, s) in scores {
        grouped.entry(system.clone()).or_default().push(s);
    }
    let rows = grouped
        .into_iter()
        .map(|(system, list)| {
            let dims = RealismDimension::ALL
                .into_iter()
                .map(|d| {
                    let xs: Vec<f64> = list.iter().map(|s| f64::from(s.score(d))).collect();
                    let n = xs.len();
                    let mean = xs.iter().sum::<f64>() / n as f64;
                    let sd = if n > 1 {
                        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    (d, DimensionSummary { mean, sd, n })
                })
                .collect();
            (system, dims)
        })
        .collect();
    RealismTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{ScriptEntry, ScriptOptions, ScriptedBackend};
    use serde_json::json;

    fn reply(first: u8) -> Value {
        json!({
            "Discourse_Organicness": {"score": first, "reason": "a"},
            "Linguistic_Texture": {"score": 5, "reason": "b"},
            "Emotional_Granularity": {"score": 6, "reason": "c"},
            "Defense_Resistance": {"score": 7, "reason": "d"},
            "Interaction_Dynamics": {"score": 6, "reason": "e"}
        })
    }

    fn backend(first: u8) -> ScriptedBackend {
        let entries = BTreeMap::from([("Rater/*".to_string(), ScriptEntry::json(reply(first)))]);
        ScriptedBackend::new("rater", entries, ScriptOptions::default())
    }

    #[test]
    fn scripted_scores_parse() {
        let s = rate_realism("Doctor: hi\nPatient: hello", &backend(6), &PromptSet::bundled(), 0, 0).unwrap();
        let got: Vec<u8> = RealismDimension::ALL.iter().map(|d| s.score(*d)).collect();
        assert_eq!(got, vec![6, 5, 6, 7, 6]);
        assert_eq!(s.dimensions[&RealismDimension::DefenseResistance].reason, "d");
    }

    #[test]
    fn out_of_range_score_is_a_schema_violation() {
        let err = rate_realism("Doctor: hi", &backend(11), &PromptSet::bundled(), 0, 0).unwrap_err();
        assert!(matches!(err, BackendError::SchemaViolation { .. }), "{err:?}");
        let err = rate_realism("  ", &backend(6), &PromptSet::bundled(), 0, 0).unwrap_err();
        assert!(matches!(err, BackendError::InvalidRequest(_)));
    }

    #[test]
    fn table_mean_and_sd() {
        let b = [backend(4), backend(8)];
        let scores: Vec<(String, RealismScore)> = b
            .iter()
            .enumerate()
            .map(|(i, be)| ("sys".to_string(), rate_realism("Doctor: hi", be, &PromptSet::bundled(), 0, i as u32).unwrap()))
            .collect();
        let t = realism_table(&scores);
        let d = &t.rows["sys"][&RealismDimension::DiscourseOrganicness];
        assert_eq!((d.mean, d.n), (6.0, 2));
        assert!((d.sd - 8f64.sqrt()).abs() < 1e-12);
        assert!(t.render().contains("6.00 (2.83)"));
    }

    #[test]
    fn presentation_order_is_a_seeded_permutation() {
        let a = presentation_order(4, 9, 3);
        assert_eq!(a, presentation_order(4, 9, 3));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }
}
