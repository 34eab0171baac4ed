//! The four interview roles as decision kernels around backend calls.
//!
//! Each kernel takes its inputs by value or reference and returns a new
//! value; the session owns all mutable state.

mod agenda;
mod assessor;
mod contracts;
mod diagnostician;
mod evaluator;
mod patient;
mod rating;
mod state;
mod suspicion;

pub use agenda::{Agenda, AgendaItem, SaturationStatus};
pub use assessor::{assessor_select, route_domain, AssessorOutcome, PlanSource};
pub use contracts::{evidence_rounds, parse_round_refs};
pub use diagnostician::{diagnose, DiagnoseInput, DiagnosticReport, EvidenceRef, ResolutionRule};
pub use evaluator::{evaluator_turn, EvaluatorDirective, EvaluatorMode, EvaluatorView, CLOSING_UTTERANCE};
pub use patient::{
    core_elements, missing_core_elements, patient_turn, select_patient_strategy, PatientDirective, PatientStrategy,
    PatientTurnInput, StrategyThresholds, NONVERBAL_CUES, NONVERBAL_CUE_MAX_CHARS,
};
pub use rating::{check_evidence, evaluator_rate, patient_self_report, RatingContext};
pub use state::{appraise, update_state, AgentState, Couplings, StimulusAppraisal};
pub use suspicion::{decide, update_suspicion, DeceptionHint, Decision, SuspicionEvidence, SuspicionTracker};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::backends::{
    BackendError, Backends, DecodeParams, ModelRequest, ModelResponse, ResponseContract, RoleTag, Usage,
};
use crate::prompts::PromptSet;
use crate::rng::derive_seed;
use crate::scales::ScaleError;

/// How many backend calls an interaction agent makes per turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CallMode {
    /// A reasoning call followed by a surface-text call.
    Split,
    /// Appraisal by the local cue lexicon; the Evaluator's guidance is used
    /// as its utterance. One backend call per agent turn.
    Single,
}

fn d_lambda() -> f64 {
    0.1
}
fn d_theta() -> f64 {
    0.5
}
fn d_alpha() -> f64 {
    0.5
}
fn d_beta() -> f64 {
    0.1
}
fn d_stress_th() -> f64 {
    0.7
}
fn d_trust_th() -> f64 {
    0.6
}
fn d_breakdown_th() -> f64 {
    0.85
}
fn d_one() -> i32 {
    1
}
fn d_rate() -> f64 {
    1.0
}
fn d_budget() -> usize {
    12
}
fn d_trust0() -> f64 {
    0.5
}
fn d_stress0() -> f64 {
    0.3
}
fn d_cot_t() -> f64 {
    0.2
}
fn d_chat_t() -> f64 {
    0.8
}
fn d_max_tokens() -> u32 {
    1024
}
fn d_mode() -> EvaluatorMode {
    EvaluatorMode::Cot
}
fn d_call() -> CallMode {
    CallMode::Split
}

/// Numeric parameters of the agent kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentParams {
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub pressure_trust_coupling: f64,
    #[serde(default)]
    pub empathy_stress_coupling: f64,
    #[serde(default = "d_theta")]
    pub theta_susp: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_stress_th")]
    pub stress_th: f64,
    #[serde(default = "d_trust_th")]
    pub trust_th: f64,
    /// Stress above which a defense becomes a breakdown.
    #[serde(default = "d_breakdown_th")]
    pub breakdown_th: f64,
    /// Per-item pull of self-report answers toward floor or ceiling.
    #[serde(default = "d_one")]
    pub self_report_bias: i32,
    /// Per-item shift applied by the rater when the patient is flagged.
    #[serde(default = "d_one")]
    pub rating_adjustment: i32,
    /// Nonverbal tag probability is `stress * nonverbal_rate`.
    #[serde(default = "d_rate")]
    pub nonverbal_rate: f64,
    #[serde(default = "d_budget")]
    pub breakdown_word_budget: usize,
    #[serde(default = "d_trust0")]
    pub initial_trust: f64,
    #[serde(default = "d_stress0")]
    pub initial_stress: f64,
    /// Half-width of a seeded uniform perturbation of the initial state.
    #[serde(default)]
    pub initial_jitter: f64,
    #[serde(default = "d_mode")]
    pub evaluator_mode: EvaluatorMode,
    #[serde(default = "d_call")]
    pub call_mode: CallMode,
    #[serde(default = "d_cot_t")]
    pub cot_temperature: f64,
    #[serde(default = "d_chat_t")]
    pub chat_temperature: f64,
    #[serde(default = "d_max_tokens")]
    pub max_tokens: u32,
}

impl Default for AgentParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), String> {
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(format!("{name} must be in (0, 1), got {v}"))
            }
        };
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must be in [0, 1], got {v}"))
            }
        };
        if !(self.lambda >= 0.0) {
            return Err(format!("lambda must be >= 0, got {}", self.lambda));
        }
        unit("pressure_trust_coupling", self.pressure_trust_coupling)?;
        unit("empathy_stress_coupling", self.empathy_stress_coupling)?;
        if !(self.theta_susp > 0.0 && self.theta_susp <= 1.0) {
            return Err(format!("theta_susp must be in (0, 1], got {}", self.theta_susp));
        }
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        unit_open("stress_th", self.stress_th)?;
        unit_open("trust_th", self.trust_th)?;
        unit("breakdown_th", self.breakdown_th)?;
        if self.breakdown_th < self.stress_th {
            return Err("breakdown_th must be >= stress_th".into());
        }
        if self.self_report_bias < 0 || self.rating_adjustment < 0 {
            return Err("bias magnitudes must be >= 0".into());
        }
        if !(self.nonverbal_rate >= 0.0) {
            return Err("nonverbal_rate must be >= 0".into());
        }
        if self.breakdown_word_budget == 0 {
            return Err("breakdown_word_budget must be >= 1".into());
        }
        unit("initial_trust", self.initial_trust)?;
        unit("initial_stress", self.initial_stress)?;
        if !(0.0..=0.5).contains(&self.initial_jitter) {
            return Err("initial_jitter must be in [0, 0.5]".into());
        }
        if !(self.cot_temperature >= 0.0 && self.chat_temperature >= 0.0) {
            return Err("temperatures must be >= 0".into());
        }
        Ok(())
    }

    pub fn thresholds(&self) -> StrategyThresholds {
        StrategyThresholds { stress_th: self.stress_th, trust_th: self.trust_th, breakdown_th: self.breakdown_th }
    }

    pub fn couplings(&self) -> Couplings {
        Couplings { pressure_trust: self.pressure_trust_coupling, empathy_stress: self.empathy_stress_coupling }
    }

    pub fn tracker(&self) -> SuspicionTracker {
        match self.evaluator_mode {
            EvaluatorMode::Cot => SuspicionTracker::new(self.theta_susp, self.alpha, self.beta),
            EvaluatorMode::Passive => SuspicionTracker::new(1.0, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("{0} returned an empty utterance")]
    EmptyUtterance(RoleTag),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no response for plan scale {0}")]
    MissingScaleResponse(String),
    #[error("reports missing for plan scales: {0:?}")]
    IncompleteReports(Vec<String>),
    #[error("{abbr}: evidence for item {item} cites round {round}, transcript ends at {last_round}")]
    EvidenceOutOfRange { abbr: String, item: usize, round: u32, last_round: u32 },
    #[error("no plan can be formed: {0}")]
    PlanImpossible(String),
}

/// Backend access for one session: role routing, prompt rendering,
/// per-role call numbering and token accounting.
pub struct AgentIo<'a> {
    backends: &'a Backends,
    prompts: &'a PromptSet,
    decode: (f64, f64, u32),
    seed: u64,
    counters: BTreeMap<RoleTag, u32>,
    pub usage: Usage,
}

impl<'a> AgentIo<'a> {
    pub fn new(backends: &'a Backends, prompts: &'a PromptSet, params: &AgentParams, seed: u64) -> AgentIo<'a> {
        AgentIo {
            backends,
            prompts,
            decode: (params.cot_temperature, params.chat_temperature, params.max_tokens),
            seed,
            counters: BTreeMap::new(),
            usage: Usage::default(),
        }
    }

    pub fn prompts(&self) -> &PromptSet {
        self.prompts
    }

    pub fn calls_made(&self) -> &BTreeMap<RoleTag, u32> {
        &self.counters
    }

    /// Render `template` with `bindings`, send it with `user` as the user
    /// turn, and validate against `contract`.
    pub fn call(
        &mut self,
        role: RoleTag,
        template: &str,
        bindings: BTreeMap<String, String>,
        user: String,
        contract: ResponseContract,
    ) -> Result<ModelResponse, BackendError> {
        let counter = self.counters.entry(role).or_insert(0);
        let sequence = *counter;
        *counter += 1;
        let (cot_t, chat_t, max_tokens) = self.decode;
        let decode = DecodeParams {
            temperature: if role.is_reasoning() { cot_t } else { chat_t },
            max_tokens,
            seed: Some(derive_seed(self.seed, role.as_str(), u64::from(sequence))),
        };
        let system = self.prompts.render(template, &bindings);
        let req = ModelRequest::new(role, sequence, system)
            .user(user)
            .contract(contract)
            .decode(decode)
            .bindings(bindings);
        let resp = self.backends.for_role(role).complete(&req)?;
        self.usage.add(resp.usage);
        Ok(resp)
    }
}
