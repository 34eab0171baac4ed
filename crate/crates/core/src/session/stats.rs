use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::record::CorpusRecord;
use crate::backends::whitespace_tokens;
use crate::profiles::ClinicalStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub mean_age: f64,
    pub min_age: i32,
    pub max_age: i32,
    /// Percent of dialogues per gender.
    pub gender: BTreeMap<String, f64>,
}

/// Corpus-level counts: dialogues, whitespace tokens, turns (transcript
/// rounds), and ground-truth distributions in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_dialogues: usize,
    pub total_tokens: usize,
    pub total_turns: usize,
    pub avg_turns: f64,
    pub tokens_per_turn: f64,
    pub pathology: BTreeMap<String, f64>,
    pub severity: BTreeMap<String, f64>,
    pub demographics: Demographics,
}

fn percent<I: IntoIterator<Item = String>>(labels: I, n: usize) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k, 100.0 * c as f64 / n as f64)).collect()
}

/// `None` for an empty corpus.
pub fn corpus_stats(records: &[CorpusRecord]) -> Option<StatsReport> {
    let n = records.len();
    if n == 0 {
        return None;
    }
    let total_turns: usize = records.iter().map(|r| r.final_transcript.len()).sum();
    let total_tokens: usize = records
        .iter()
        .flat_map(|r| &r.final_transcript)
        .map(|t| whitespace_tokens(&t.doctor_utterance) as usize + t.patient_utterance.as_deref().map_or(0, |p| whitespace_tokens(p) as usize))
        .sum();
    let ages: Vec<i32> = records.iter().map(|r| r.profile.demographics.age).collect();
    let truth = |r: &CorpusRecord| r.profile.ground_truth;
    Some(StatsReport {
        total_dialogues: n,
        total_tokens,
        total_turns,
        avg_turns: total_turns as f64 / n as f64,
        tokens_per_turn: if total_turns == 0 { 0.0 } else { total_tokens as f64 / total_turns as f64 },
        pathology: percent(records.iter().map(|r| truth(r).status.as_str().to_string()), n),
        severity: percent(
            records.iter().map(|r| {
                if truth(r).status == ClinicalStatus::Healthy { "N/A".to_string() } else { truth(r).severity.as_str().to_string() }
            }),
            n,
        ),
        demographics: Demographics {
            mean_age: ages.iter().map(|&a| f64::from(a)).sum::<f64>() / n as f64,
            min_age: *ages.iter().min().expect("non-empty"),
            max_age: *ages.iter().max().expect("non-empty"),
            gender: percent(records.iter().map(|r| r.profile.demographics.gender.as_str().to_string()), n),
        },
    })
}
