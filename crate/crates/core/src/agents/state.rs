use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{contracts, AgentError, AgentIo, CallMode};
use crate::backends::{lexicon, RoleTag};
use crate::prompts::bind;

/// The patient's affective state; both components live in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub trust: f64,
    pub stress: f64,
}

impl AgentState {
    pub fn new(trust: f64, stress: f64) -> AgentState {
        AgentState { trust: trust.clamp(0.0, 1.0), stress: stress.clamp(0.0, 1.0) }
    }
}

/// Perceived intent of one doctor utterance, each channel in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusAppraisal {
    pub empathy: f64,
    pub pressure: f64,
    pub rationale: String,
}

impl StimulusAppraisal {
    pub fn new(empathy: f64, pressure: f64, rationale: &str) -> StimulusAppraisal {
        StimulusAppraisal {
            empathy: empathy.clamp(-1.0, 1.0),
            pressure: pressure.clamp(-1.0, 1.0),
            rationale: rationale.to_string(),
        }
    }
}

/// Cross-channel effects: pressure eroding trust, empathy relieving stress.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub pressure_trust: f64,
    pub empathy_stress: f64,
}

/// One step of the trust/stress dynamics, clamped to the unit square.
pub fn update_state(s: AgentState, psi: &StimulusAppraisal, lambda: f64, couplings: Couplings) -> AgentState {
    let trust = s.trust + lambda * psi.empathy - lambda * couplings.pressure_trust * psi.pressure;
    let stress = s.stress + lambda * psi.pressure - lambda * couplings.empathy_stress * psi.empathy;
    AgentState { trust: trust.clamp(0.0, 1.0), stress: stress.clamp(0.0, 1.0) }
}

/// Appraise a doctor utterance. Returns the appraisal and the reasoning
/// trace from the patient's reasoning call (empty in single-call mode).
pub(crate) fn appraise_with(
    utterance: &str,
    context: &str,
    io: &mut AgentIo<'_>,
    mode: CallMode,
) -> Result<(StimulusAppraisal, String), AgentError> {
    if utterance.trim().is_empty() {
        return Err(AgentError::Invalid("cannot appraise an empty utterance".into()));
    }
    if mode == CallMode::Single {
        let a = lexicon::appraise_text(utterance);
        return Ok((StimulusAppraisal::new(a.empathy, a.pressure, &a.rationale()), String::new()));
    }
    let user = if context.is_empty() {
        format!("Current doctor utterance: \"{utterance}\"")
    } else {
        format!("{context}\n\nCurrent doctor utterance: \"{utterance}\"")
    };
    let resp = io.call(
        RoleTag::PatientCoT,
        "patient_cot",
        bind([("doctor_input", utterance)]),
        user,
        contracts::appraisal(),
    )?;
    let v = resp.parsed.unwrap_or(Value::Null);
    let thought = v.get("thought_trace").and_then(Value::as_str).unwrap_or("").to_string();
    let rationale = if thought.is_empty() { "model appraisal".to_string() } else { thought.clone() };
    let a = StimulusAppraisal::new(
        v["empathy"].as_f64().unwrap_or(0.0),
        v["pressure"].as_f64().unwrap_or(0.0),
        &rationale,
    );
    Ok((a, thought))
}

/// Map an utterance to (empathy, pressure).
pub fn appraise(utterance: &str, io: &mut AgentIo<'_>, mode: CallMode) -> Result<StimulusAppraisal, AgentError> {
    appraise_with(utterance, "", io, mode).map(|(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn psi(e: f64, p: f64) -> StimulusAppraisal {
        StimulusAppraisal::new(e, p, "")
    }

    #[test]
    fn hand_evaluated_updates() {
        let zero = Couplings::default();
        let s = AgentState::new(0.5, 0.5);
        assert_eq!(update_state(s, &psi(0.0, 0.0), 0.1, zero), s);
        let t = update_state(s, &psi(1.0, 0.0), 0.1, zero);
        assert!((t.trust - 0.6).abs() < 1e-12 && (t.stress - 0.5).abs() < 1e-12);
        let t = update_state(AgentState::new(0.95, 0.2), &psi(1.0, 0.0), 0.1, zero);
        assert_eq!((t.trust, t.stress), (1.0, 0.2));
    }

    #[test]
    fn couplings_cross_channels() {
        let c = Couplings { pressure_trust: 0.5, empathy_stress: 0.5 };
        let t = update_state(AgentState::new(0.5, 0.5), &psi(0.0, 1.0), 0.1, c);
        assert!((t.trust - 0.45).abs() < 1e-12 && (t.stress - 0.6).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn state_stays_in_unit_square(
            t in 0.0f64..=1.0, s in 0.0f64..=1.0,
            e in -1.0f64..=1.0, p in -1.0f64..=1.0,
            lambda in 0.0f64..2.0, ct in 0.0f64..=1.0, cs in 0.0f64..=1.0,
        ) {
            let n = update_state(AgentState::new(t, s), &psi(e, p), lambda, Couplings { pressure_trust: ct, empathy_stress: cs });
            prop_assert!((0.0..=1.0).contains(&n.trust) && (0.0..=1.0).contains(&n.stress));
        }
    }
}
