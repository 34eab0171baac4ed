//! Fixed cue-word tables for deterministic intent appraisal.

/// Normalization and validation phrases.
pub const EMPATHY_CUES: &[&str] = &[
    "many people",
    "take your time",
    "i understand",
    "that sounds hard",
    "it's okay",
    "thank you for sharing",
    "that makes sense",
];

/// Imperative or interrogating phrases.
pub const PRESSURE_CUES: &[&str] = &[
    "answer the question",
    "yes or no",
    "be honest",
    "you need to",
    "why didn't you",
    "are you sure",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconAppraisal {
    pub empathy: f64,
    pub pressure: f64,
    pub matched: Vec<&'static str>,
}

impl LexiconAppraisal {
    pub fn rationale(&self) -> String {
        if self.matched.is_empty() {
            "no cue words".to_string()
        } else {
            format!("cue words: {}", self.matched.join(", "))
        }
    }
}

/// Each channel is 1 when any of its cues occurs (case-insensitive), else 0.
pub fn appraise_text(utterance: &str) -> LexiconAppraisal {
    let lower = utterance.to_lowercase().replace('\u{2019}', "'");
    let hits = |cues: &[&'static str]| -> Vec<&'static str> {
        cues.iter().copied().filter(|c| lower.contains(c)).collect()
    };
    let empathy = hits(EMPATHY_CUES);
    let pressure = hits(PRESSURE_CUES);
    LexiconAppraisal {
        empathy: if empathy.is_empty() { 0.0 } else { 1.0 },
        pressure: if pressure.is_empty() { 0.0 } else { 1.0 },
        matched: empathy.into_iter().chain(pressure).collect(),
    }
}
