use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::appraise_with;
use super::{update_state, AgentError, AgentIo, AgentParams, AgentState, StimulusAppraisal};
use crate::backends::{ResponseContract, RoleTag};
use crate::profiles::{DeceptionStrategy, PatientProfile};
use crate::prompts::bind;
use crate::topics::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatientStrategy {
    Disclose,
    Deflect,
    Minimize,
    ExaggerateSymptom,
    Neutral,
    Breakdown,
}

impl PatientStrategy {
    pub fn is_defense(self) -> bool {
        matches!(self, PatientStrategy::Deflect | PatientStrategy::Breakdown)
    }

    /// The question's topic was engaged at all.
    pub fn answered(self) -> bool {
        !self.is_defense()
    }

    /// The answer carries usable symptom information.
    pub fn disclosed(self) -> bool {
        matches!(self, PatientStrategy::Disclose | PatientStrategy::Neutral | PatientStrategy::ExaggerateSymptom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyThresholds {
    pub stress_th: f64,
    pub trust_th: f64,
    pub breakdown_th: f64,
}

impl Default for StrategyThresholds {
    fn default() -> Self {
        StrategyThresholds { stress_th: 0.7, trust_th: 0.6, breakdown_th: 0.85 }
    }
}

pub const NONVERBAL_CUE_MAX_CHARS: usize = 10;

/// Short nonverbal tags, each at most [`NONVERBAL_CUE_MAX_CHARS`] long.
pub const NONVERBAL_CUES: [&str; 8] =
    ["looks down", "fidgets", "pauses", "sighs", "avoids eye", "tearful", "shrugs", "voice low"];

const HEDGES: [&str; 5] = ["i don't know", "maybe", "i guess", "um,", "..."];

fn volatile(profile: &PatientProfile) -> bool {
    let text = format!("{} {}", profile.behavior_tendency, profile.affect_baseline).to_lowercase();
    ["volatile", "labile", "explosive"].iter().any(|w| text.contains(w))
}

/// Defense when stressed, disclosure when trusting, else the honesty
/// strategy in force for the topic. Defense takes precedence.
pub fn select_patient_strategy(
    profile: &PatientProfile,
    s: AgentState,
    topic: Option<Topic>,
    th: StrategyThresholds,
) -> PatientStrategy {
    if s.stress > th.stress_th {
        if s.stress > th.breakdown_th || volatile(profile) {
            PatientStrategy::Breakdown
        } else {
            PatientStrategy::Deflect
        }
    } else if s.trust > th.trust_th {
        PatientStrategy::Disclose
    } else {
        match profile.honesty.strategy_for(topic) {
            DeceptionStrategy::Frankness => PatientStrategy::Neutral,
            DeceptionStrategy::Concealment => PatientStrategy::Minimize,
            DeceptionStrategy::Exaggeration => PatientStrategy::ExaggerateSymptom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientDirective {
    pub thought_trace: String,
    pub appraisal: StimulusAppraisal,
    pub next_state: AgentState,
    pub strategy: PatientStrategy,
    pub strategy_directive: String,
    pub nonverbal_cues: Vec<String>,
    pub length_budget: Option<usize>,
    pub contradiction_allowed: bool,
    /// The opening answer omitted part of the chief complaint and the
    /// missing parts were appended.
    pub chief_complaint_repaired: bool,
}

pub struct PatientTurnInput<'a> {
    pub doctor_utterance: &'a str,
    pub topic: Option<Topic>,
    /// Round 1: the patient states why they came.
    pub opening: bool,
    pub history: &'a str,
}

fn directive_text(profile: &PatientProfile, strategy: PatientStrategy, topic: Option<Topic>, opening: bool) -> String {
    if opening {
        return format!(
            "Explain in your own words why you came in today, and naturally mention every part of this: \"{}\".",
            profile.chief_complaint
        );
    }
    let about = topic.map(Topic::describe).unwrap_or("what the doctor asked");
    match strategy {
        PatientStrategy::Disclose => format!(
            "Open up about {about}. Describe it honestly in everyday words, drawing on your history: {}",
            profile.symptom_history
        ),
        PatientStrategy::Neutral => format!("Answer about {about} plainly and briefly without volunteering extra detail."),
        PatientStrategy::Minimize => {
            format!("Downplay {about}. Say it is minor or under control; avoid numbers, frequency and detail.")
        }
        PatientStrategy::ExaggerateSymptom => {
            format!("Amplify {about}. Describe it as constant and unbearable, with dramatic examples.")
        }
        PatientStrategy::Deflect => format!("Deflect the question about {about}. Change the subject or give a guarded non-answer."),
        PatientStrategy::Breakdown => format!(
            "You are overwhelmed. Give a short, fragmented answer about {about}. Hesitate; contradicting yourself is allowed."
        ),
    }
}

fn normalize(text: &str) -> String {
    text.to_lowercase().replace('\u{2019}', "'")
}

/// Comma/period-separated parts of a chief complaint.
pub fn core_elements(chief_complaint: &str) -> Vec<String> {
    chief_complaint
        .split(['.', ';', ',', '!', '?'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn missing_core_elements(chief_complaint: &str, utterance: &str) -> Vec<String> {
    let said = normalize(utterance);
    core_elements(chief_complaint).into_iter().filter(|e| !said.contains(&normalize(e))).collect()
}

fn apply_breakdown(text: &str, budget: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out = words[..words.len().min(budget)].join(" ");
    let lower = normalize(&out);
    if !HEDGES.iter().any(|h| lower.contains(h)) {
        out = format!("I... I don't know. {out}");
    }
    if words.len() > budget {
        out.push_str("...");
    }
    out
}

/// One patient turn: appraise the doctor, update state, pick a strategy,
/// then voice it.
pub fn patient_turn(
    profile: &PatientProfile,
    state: AgentState,
    input: &PatientTurnInput<'_>,
    io: &mut AgentIo<'_>,
    params: &AgentParams,
    rng: &mut ChaCha8Rng,
) -> Result<(PatientDirective, String), AgentError> {
    let profile_json = serde_json::to_string(profile).unwrap_or_default();
    let context = format!("Complete profile:\n{profile_json}\n\nDialogue history:\n{}", input.history);
    let (appraisal, thought_trace) = appraise_with(input.doctor_utterance, &context, io, params.call_mode)?;
    let next_state = update_state(state, &appraisal, params.lambda, params.couplings());
    let strategy = select_patient_strategy(profile, next_state, input.topic, params.thresholds());
    let strategy_directive = directive_text(profile, strategy, input.topic, input.opening);

    let p = (next_state.stress * params.nonverbal_rate).min(1.0);
    let mut nonverbal_cues = Vec::new();
    if rng.random::<f64>() < p {
        nonverbal_cues.push(NONVERBAL_CUES[rng.random_range(0..NONVERBAL_CUES.len())].to_string());
    }

    let breakdown = strategy == PatientStrategy::Breakdown;
    let cues = if nonverbal_cues.is_empty() { "none".to_string() } else { nonverbal_cues.join(", ") };
    let topic = input.topic.map(|t| t.as_str()).unwrap_or("chief_complaint");
    let strategy_name = format!("{strategy:?}");
    let bindings = bind([
        ("strategy_directive", strategy_directive.as_str()),
        ("non_verbal_cues", cues.as_str()),
        ("topic", topic),
        ("strategy", strategy_name.as_str()),
        ("chief_complaint", profile.chief_complaint.as_str()),
    ]);
    let user = format!("{context}\n\nDoctor: {}", input.doctor_utterance);
    let resp = io.call(RoleTag::PatientChat, "patient_chat", bindings, user, ResponseContract::FreeText)?;
    let mut utterance = resp.text.trim().to_string();
    if utterance.is_empty() {
        return Err(AgentError::EmptyUtterance(RoleTag::PatientChat));
    }
    if breakdown {
        utterance = apply_breakdown(&utterance, params.breakdown_word_budget);
    }
    let mut chief_complaint_repaired = false;
    if input.opening {
        let missing = missing_core_elements(&profile.chief_complaint, &utterance);
        if !missing.is_empty() {
            utterance = format!("{utterance} Basically, {}.", missing.join(", "));
            chief_complaint_repaired = true;
        }
    }

    let directive = PatientDirective {
        thought_trace,
        appraisal,
        next_state,
        strategy,
        strategy_directive,
        nonverbal_cues,
        length_budget: breakdown.then_some(params.breakdown_word_budget),
        contradiction_allowed: breakdown,
        chief_complaint_repaired,
    };
    Ok((directive, utterance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Backends, ScriptEntry, ScriptOptions, ScriptedBackend};
    use crate::profiles::test_support::depressed_profile;
    use crate::prompts::PromptSet;
    use crate::rng::stream;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn st(trust: f64, stress: f64) -> AgentState {
        AgentState::new(trust, stress)
    }

    #[test]
    fn precedence_rules() {
        let th = StrategyThresholds::default();
        let mut p = depressed_profile();
        assert!(select_patient_strategy(&p, st(0.9, 0.8), None, th).is_defense());
        assert_eq!(select_patient_strategy(&p, st(0.9, 0.9), None, th), PatientStrategy::Breakdown);
        assert_eq!(select_patient_strategy(&p, st(0.3, 0.3), None, th), PatientStrategy::Neutral);
        p.honesty.deception_strategy = DeceptionStrategy::Concealment;
        p.honesty.active_features = vec!["C01".into()];
        assert_eq!(select_patient_strategy(&p, st(0.7, 0.3), Some(Topic::Sleep), th), PatientStrategy::Disclose);
        assert_eq!(select_patient_strategy(&p, st(0.3, 0.3), Some(Topic::Sleep), th), PatientStrategy::Minimize);
        p.honesty.topic_overrides.insert(Topic::Sleep, DeceptionStrategy::Exaggeration);
        assert_eq!(
            select_patient_strategy(&p, st(0.3, 0.3), Some(Topic::Sleep), th),
            PatientStrategy::ExaggerateSymptom
        );
        p.affect_baseline = "Labile, quick to anger".into();
        assert_eq!(select_patient_strategy(&p, st(0.3, 0.75), None, th), PatientStrategy::Breakdown);
    }

    #[test]
    fn core_element_repair_inputs() {
        assert_eq!(core_elements("can't sleep, everything feels flat."), vec!["can't sleep", "everything feels flat"]);
        assert_eq!(
            missing_core_elements("can't sleep, everything feels flat", "I can’t sleep at all."),
            vec!["everything feels flat"]
        );
    }

    #[test]
    fn breakdown_markers() {
        let out = apply_breakdown("one two three four five six seven eight nine ten eleven twelve thirteen", 5);
        assert_eq!(out, "I... I don't know. one two three four five...");
        assert_eq!(apply_breakdown("maybe it is fine", 12), "maybe it is fine");
    }

    #[test]
    fn cue_length_bound() {
        assert!(NONVERBAL_CUES.iter().all(|c| c.chars().count() <= NONVERBAL_CUE_MAX_CHARS));
    }

    fn backends() -> Backends {
        let entries = BTreeMap::from([
            ("PatientChat/*".to_string(), ScriptEntry::text("I have been sleeping badly, I suppose it is nothing.")),
        ]);
        let opts = ScriptOptions { lexicon_appraisal: true };
        Backends::single(Arc::new(ScriptedBackend::new("t", entries, opts)))
    }

    fn run(stress: f64, seed: u64, opening: bool) -> (PatientDirective, String) {
        let b = backends();
        let prompts = PromptSet::bundled();
        let params = AgentParams::default();
        let mut io = AgentIo::new(&b, &prompts, &params, seed);
        let mut rng = stream(seed, "nonverbal", 0);
        let input = PatientTurnInput {
            doctor_utterance: "Answer the question. Yes or no?",
            topic: Some(Topic::Sleep),
            opening,
            history: "",
        };
        patient_turn(&depressed_profile(), st(0.5, stress), &input, &mut io, &params, &mut rng).unwrap()
    }

    #[test]
    fn stressed_patient_defends_and_breaks_down() {
        let (d, u) = run(0.8, 1, false);
        assert_eq!(d.strategy, PatientStrategy::Breakdown);
        assert!((d.next_state.stress - 0.9).abs() < 1e-12);
        assert!(d.contradiction_allowed && d.length_budget == Some(12));
        assert!(u.split_whitespace().count() <= 12 + 4);
    }

    #[test]
    fn opening_round_carries_the_chief_complaint() {
        let (d, u) = run(0.3, 1, true);
        assert!(d.chief_complaint_repaired);
        assert!(missing_core_elements("can't sleep, everything feels flat", &u).is_empty());
    }

    #[test]
    fn turns_are_deterministic() {
        assert_eq!(run(0.6, 9, false), run(0.6, 9, false));
    }
}
