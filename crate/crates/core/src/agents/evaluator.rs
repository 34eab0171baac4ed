use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    contracts, decide, update_suspicion, AgentError, AgentIo, AgentParams, Agenda, CallMode, DeceptionHint, Decision,
    SaturationStatus, SuspicionEvidence, SuspicionTracker,
};
use crate::backends::{ResponseContract, RoleTag};
use crate::prompts::bind;
use crate::scales::Repository;
use crate::topics::Topic;

/// Evaluator configuration under comparison in ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvaluatorMode {
    /// Reasoning step with suspicion tracking and adaptive guidance.
    Cot,
    /// Fixed item order, no reasoning call, no suspicion updates.
    Passive,
}

pub const CLOSING_UTTERANCE: &str =
    "Thank you for talking with me so openly today. That is everything I needed to ask for now.";

/// What the Evaluator sees before its turn.
pub struct EvaluatorView<'a> {
    pub round: u32,
    pub agenda: &'a Agenda,
    pub saturation: &'a SaturationStatus,
    pub repo: &'a Repository,
    pub last_patient_utterance: &'a str,
    pub last_nonverbal: &'a [String],
    pub last_target: Option<usize>,
    pub history: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorDirective {
    pub reasoning_step: String,
    pub cot_estimate: Option<f64>,
    pub inconsistency_flags: Vec<String>,
    pub nonverbal_mismatch: bool,
    pub deception_hint: Option<DeceptionHint>,
    pub decision: Decision,
    /// Agenda index asked this turn (none when terminating).
    pub target: Option<usize>,
    pub target_topic: Option<Topic>,
    pub guidance: String,
    pub hypothesis_note: String,
}

fn scale_name(view: &EvaluatorView<'_>, idx: Option<usize>) -> String {
    idx.map(|i| &view.agenda.items[i])
        .and_then(|it| view.repo.get(&it.scale))
        .map(|d| d.abbr.clone())
        .unwrap_or_default()
}

fn passive_guidance(view: &EvaluatorView<'_>, idx: usize) -> String {
    let it = &view.agenda.items[idx];
    format!("Ask about {} ({} item {}).", it.topic.describe(), it.scale, it.item + 1)
}

/// One Evaluator turn: reason, update suspicion, decide, then phrase the
/// next question (or the closing).
pub fn evaluator_turn(
    view: &EvaluatorView<'_>,
    tracker: &mut SuspicionTracker,
    io: &mut AgentIo<'_>,
    params: &AgentParams,
) -> Result<(EvaluatorDirective, String), AgentError> {
    let next = view.agenda.next_for_proceed();
    let next_topic = next.map(|i| view.agenda.items[i].topic);

    let mut d = EvaluatorDirective {
        reasoning_step: String::new(),
        cot_estimate: None,
        inconsistency_flags: Vec::new(),
        nonverbal_mismatch: false,
        deception_hint: None,
        decision: Decision::Proceed,
        target: None,
        target_topic: None,
        guidance: String::new(),
        hypothesis_note: String::new(),
    };
    let mut cot_target: Option<Topic> = None;

    if params.evaluator_mode == EvaluatorMode::Cot {
        let next_topic_name = next_topic.map(|t| t.as_str()).unwrap_or("none");
        let bindings = bind([("scale_name", scale_name(view, next).as_str()), ("next_topic", next_topic_name)]);
        let cues = if view.last_nonverbal.is_empty() { "none".to_string() } else { view.last_nonverbal.join(", ") };
        let user = format!(
            "Dialogue so far:\n{}\n\nPatient's latest answer: \"{}\"\nNon-verbal: {}\nAgenda: {} of {} items have evidence.",
            view.history,
            view.last_patient_utterance,
            cues,
            (0..view.agenda.len()).filter(|&i| view.agenda.has_evidence(i)).count(),
            view.agenda.len()
        );
        let resp = io.call(RoleTag::EvaluatorCoT, "evaluator_cot", bindings, user, contracts::evaluator_cot())?;
        let v = resp.parsed.unwrap_or(Value::Null);
        let text = |k: &str| v.get(k).and_then(Value::as_str).unwrap_or("").to_string();
        d.reasoning_step = text("reasoning_step");
        d.guidance = text("guidance_for_chat");
        d.cot_estimate = v["suspicion_score"].as_f64();
        d.inconsistency_flags = v
            .get("inconsistency_flags")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        d.nonverbal_mismatch = v.get("nonverbal_mismatch").and_then(Value::as_bool).unwrap_or(false);
        d.deception_hint = v.get("deception_hint").and_then(Value::as_str).and_then(DeceptionHint::parse);
        cot_target = Topic::parse_loose(&text("target_topic"));
        let evidence = SuspicionEvidence {
            inconsistency_flags: d.inconsistency_flags.clone(),
            nonverbal_mismatch: d.nonverbal_mismatch,
            cot_estimate: d.cot_estimate.unwrap_or(0.0),
            deception_hint: d.deception_hint,
        };
        *tracker = update_suspicion(tracker, view.round, &evidence);
    }

    d.decision = decide(tracker, view.saturation);
    tracker.record_decision(view.round, d.decision);

    match d.decision {
        Decision::Terminate => {
            d.hypothesis_note = "Information saturation reached; closing the interview.".into();
            return Ok((d, CLOSING_UTTERANCE.to_string()));
        }
        Decision::Investigate => {
            let last_topic = view.last_target.map(|i| view.agenda.items[i].topic);
            let topic = cot_target.filter(|t| view.agenda.for_topic(*t).is_some()).or(last_topic);
            d.target = topic.and_then(|t| view.agenda.for_topic(t)).or(view.last_target).or(next);
            d.hypothesis_note = format!(
                "Suspicion {:.2} above {:.2}; verifying {}.",
                tracker.xi,
                tracker.theta_susp,
                d.target.map(|i| view.agenda.items[i].topic.as_str()).unwrap_or("the last answer")
            );
        }
        Decision::Proceed => {
            d.target = next;
            d.hypothesis_note = format!("Suspicion {:.2}; continuing the agenda.", tracker.xi);
        }
    }
    let idx = d.target.ok_or_else(|| AgentError::Invalid("agenda is empty".into()))?;
    d.target_topic = Some(view.agenda.items[idx].topic);
    if d.guidance.trim().is_empty() {
        d.guidance = passive_guidance(view, idx);
    }

    let utterance = if params.call_mode == CallMode::Single {
        d.guidance.clone()
    } else {
        let topic = view.agenda.items[idx].topic;
        let bindings = bind([
            ("guidance_for_chat", d.guidance.as_str()),
            ("topic", topic.as_str()),
            ("topic_description", topic.describe()),
            ("scale_name", scale_name(view, Some(idx)).as_str()),
        ]);
        let user = format!("Dialogue so far:\n{}", view.history);
        let resp = io.call(RoleTag::EvaluatorChat, "evaluator_chat", bindings, user, ResponseContract::FreeText)?;
        resp.text.trim().to_string()
    };
    if utterance.is_empty() {
        return Err(AgentError::EmptyUtterance(RoleTag::EvaluatorChat));
    }
    Ok((d, utterance))
}
