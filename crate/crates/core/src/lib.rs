//! Honesty-aware multi-agent simulation of psychiatric intake interviews.
//!
//! The engine drives four roles (Assessor, Patient, Evaluator, Diagnostician)
//! over pluggable model backends and produces complete intake records:
//! profile, scale plan, transcript, self-rated and rater-administered scale
//! responses, and a diagnostic summary. The [`evaluation`] module holds the
//! measurement side: agreement metrics, ablation runs, suspicion calibration,
//! inter-rater reliability and the realism rater.
//!
//! Everything is deterministic under the [`backends::ScriptedBackend`] and a
//! fixed seed.

pub mod agents;
pub mod backends;
pub mod config;
pub mod evaluation;
pub mod fixtures;
pub mod profiles;
pub mod prompts;
pub mod rng;
pub mod scales;
pub mod session;
pub mod topics;

pub use agents::{AgentParams, AgentState, Decision, DiagnosticReport, SuspicionTracker};
pub use backends::{Backends, ModelBackend, ModelRequest, ModelResponse, RoleTag, ScriptedBackend};
pub use config::RunConfig;
pub use profiles::{FeatureBank, GroundTruth, HonestyState, PatientProfile};
pub use scales::{Repository, ScaleDefinition, ScalePlan, ScaleResponse};
pub use session::{CorpusRecord, SessionParams};
