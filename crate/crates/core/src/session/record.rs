use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::agents::{AgentState, CallMode, Decision, DiagnosticReport, EvaluatorMode, PatientStrategy, PlanSource};
use crate::backends::Usage;
use crate::profiles::{HonestyState, PatientProfile};
use crate::scales::{ScalePlan, ScaleResponse};
use crate::topics::Topic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicianTrace {
    pub xi: f64,
    pub decision: Decision,
    pub hypothesis_note: String,
    /// Agenda index probed this round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<Topic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTrace {
    pub trust: f64,
    pub stress: f64,
    pub strategy: PatientStrategy,
    pub directive_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub round: u32,
    pub doctor_utterance: String,
    /// Absent on the greeting and the closing round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nonverbal: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clinician_trace: Option<ClinicianTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_trace: Option<PatientTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings {
    pub cot_temperature: f64,
    pub chat_temperature: f64,
    pub max_tokens: u32,
}

/// How the interview ended: the round of the closing utterance and the
/// saturation conditions (coverage, rounds, evidence, exhaustion) seen then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub round: u32,
    pub conditions: [bool; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config_hash: String,
    pub backend_ids: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_unix_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix_ms: Option<u64>,
    pub token_usage: Usage,
    /// Backend calls per role.
    pub calls: BTreeMap<String, u32>,
    pub decode: DecodeSettings,
    pub evaluator_mode: EvaluatorMode,
    pub call_mode: CallMode,
    pub plan_source: PlanSource,
    pub trace_internal: bool,
    /// Patient state before the first exchange; kept only with traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<AgentState>,
    pub min_rounds: u32,
    pub exhaustion_window: u32,
    pub termination: Termination,
}

/// One complete intake case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub record_id: String,
    pub profile: PatientProfile,
    pub plan: ScalePlan,
    pub final_transcript: Vec<TurnRecord>,
    pub patient_self_report: BTreeMap<String, ScaleResponse>,
    pub doctor_clinician_report: BTreeMap<String, ScaleResponse>,
    pub diagnosis: DiagnosticReport,
    pub honesty_echo: HonestyState,
    /// The opening answer had chief-complaint elements appended.
    pub chief_complaint_repaired: bool,
    pub run_meta: RunMeta,
}

/// Plain-text transcript used in prompts.
pub fn transcript_text(turns: &[TurnRecord]) -> String {
    let mut out = String::new();
    for t in turns {
        out.push_str(&format!("Round {}\nDoctor: {}\n", t.round, t.doctor_utterance));
        if let Some(p) = &t.patient_utterance {
            if t.nonverbal.is_empty() {
                out.push_str(&format!("Patient: {p}\n"));
            } else {
                out.push_str(&format!("Patient: [{}] {p}\n", t.nonverbal.join(", ")));
            }
        }
    }
    out
}
