//! Closed-loop interview sessions: plan, interview, rate, diagnose, and the
//! corpus record that links them.

mod batch;
mod export;
mod io;
mod record;
mod runner;
mod stats;
mod validate;

pub use batch::{run_batch, BatchEntry, BatchOutcome, BatchReport, EntryStatus};
pub use export::public_view;
pub use io::{load_profiles, read_corpus, read_manifest, write_corpus, write_json_atomic, LoadedRecord, Manifest, MANIFEST_FILE};
pub use record::{
    transcript_text, ClinicianTrace, CorpusRecord, DecodeSettings, PatientTrace, RunMeta, Termination, TurnRecord,
};
pub use runner::{run_session, SessionEnv, GREETING, OPENING_QUESTION};
pub use stats::{corpus_stats, Demographics as DemographicsSummary, StatsReport};
pub use validate::{reconstruct_saturation, validate_record, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentError;

fn d_min_rounds() -> u32 {
    18
}
fn d_cap() -> u32 {
    60
}
fn d_true() -> bool {
    true
}
fn d_workers() -> usize {
    4
}
fn d_window() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionParams {
    /// Interview rounds (doctor + patient, round >= 1) counted toward the
    /// rounds condition of saturation.
    #[serde(default = "d_min_rounds")]
    pub min_rounds: u32,
    /// Highest round index a session may reach.
    #[serde(default = "d_cap")]
    pub round_cap: u32,
    /// Keep per-round patient and clinician traces in records.
    #[serde(default = "d_true")]
    pub trace_internal: bool,
    #[serde(default = "d_workers")]
    pub workers: usize,
    /// Consecutive re-asks without new evidence that count as exhaustion.
    #[serde(default = "d_window")]
    pub exhaustion_window: u32,
    /// Record wall-clock start and end times. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub wall_clock: bool,
}

impl Default for SessionParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SessionParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.round_cap < 2 {
            return Err("round_cap must be >= 2".into());
        }
        if self.min_rounds > self.round_cap {
            return Err(format!("min_rounds {} exceeds round_cap {}", self.min_rounds, self.round_cap));
        }
        if self.workers == 0 {
            return Err("workers must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid plan: {0}")]
    PlanInvalid(String),
    #[error("reports missing for {0:?}")]
    RatingIncomplete(Vec<String>),
    #[error("interview reached the round cap of {cap} without terminating")]
    RoundLimitExceeded { cap: u32 },
    #[error("backend setup failed: {0}")]
    BackendSetup(String),
}
