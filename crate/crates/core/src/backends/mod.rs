//! Model invocation contract shared by every agent role, plus a scripted
//! backend for tests and replay and an OpenAI-compatible HTTP client.

mod contract;
mod http;
pub mod lexicon;
mod scripted;

pub use contract::{complete_with, extract_json, JsonContract, ResponseContract};
pub use http::{HttpBackend, HttpConfig};
pub use scripted::{ScriptEntry, ScriptOptions, ScriptedBackend};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleTag {
    AssessorCoT,
    PatientCoT,
    PatientChat,
    EvaluatorCoT,
    EvaluatorChat,
    Diagnostician,
    Extractor,
    Rater,
    SelfReport,
    ClinicianRating,
}

impl RoleTag {
    pub const ALL: [RoleTag; 10] = [
        RoleTag::AssessorCoT,
        RoleTag::PatientCoT,
        RoleTag::PatientChat,
        RoleTag::EvaluatorCoT,
        RoleTag::EvaluatorChat,
        RoleTag::Diagnostician,
        RoleTag::Extractor,
        RoleTag::Rater,
        RoleTag::SelfReport,
        RoleTag::ClinicianRating,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::AssessorCoT => "AssessorCoT",
            RoleTag::PatientCoT => "PatientCoT",
            RoleTag::PatientChat => "PatientChat",
            RoleTag::EvaluatorCoT => "EvaluatorCoT",
            RoleTag::EvaluatorChat => "EvaluatorChat",
            RoleTag::Diagnostician => "Diagnostician",
            RoleTag::Extractor => "Extractor",
            RoleTag::Rater => "Rater",
            RoleTag::SelfReport => "SelfReport",
            RoleTag::ClinicianRating => "ClinicianRating",
        }
    }

    pub fn parse(text: &str) -> Option<RoleTag> {
        RoleTag::ALL.into_iter().find(|r| r.as_str() == text)
    }

    /// Reasoning roles decode cold; surface-text roles decode warm.
    pub fn is_reasoning(self) -> bool {
        !matches!(self, RoleTag::PatientChat | RoleTag::EvaluatorChat)
    }
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams { temperature: 0.2, max_tokens: 1024, seed: None }
    }
}

#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub role_tag: RoleTag,
    /// Index of this call among the session's calls for the same role.
    pub sequence: u32,
    pub messages: Vec<Message>,
    pub response_contract: ResponseContract,
    pub decode_params: DecodeParams,
    /// Template variables used to build the prompt; scripted replies may
    /// reference them as `{{name}}`.
    pub bindings: BTreeMap<String, String>,
}

impl ModelRequest {
    pub fn new(role_tag: RoleTag, sequence: u32, system_prompt: impl Into<String>) -> ModelRequest {
        ModelRequest {
            role_tag,
            sequence,
            messages: vec![Message { speaker: Speaker::System, text: system_prompt.into() }],
            response_contract: ResponseContract::FreeText,
            decode_params: DecodeParams::default(),
            bindings: BTreeMap::new(),
        }
    }

    pub fn user(mut self, text: impl Into<String>) -> Self {
        self.messages.push(Message { speaker: Speaker::User, text: text.into() });
        self
    }

    pub fn contract(mut self, contract: ResponseContract) -> Self {
        self.response_contract = contract;
        self
    }

    pub fn decode(mut self, params: DecodeParams) -> Self {
        self.decode_params = params;
        self
    }

    pub fn bindings(mut self, bindings: BTreeMap<String, String>) -> Self {
        self.bindings = bindings;
        self
    }

    pub fn check(&self) -> Result<(), BackendError> {
        match self.messages.first() {
            None => Err(BackendError::InvalidRequest("no messages".into())),
            Some(m) if m.speaker != Speaker::System => {
                Err(BackendError::InvalidRequest("first message must be the system prompt".into()))
            }
            Some(_) if self.decode_params.temperature < 0.0 => {
                Err(BackendError::InvalidRequest("negative temperature".into()))
            }
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: Usage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub text: String,
    pub parsed: Option<serde_json::Value>,
    pub usage: Usage,
    pub attempt_count: u32,
}

/// One raw model reply. `attempts` counts transport-level tries (e.g. 429
/// retries) spent to obtain it.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReply {
    pub text: String,
    pub usage: Usage,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("authentication failure: {0}")]
    AuthFailure(String),
    #[error("request timed out")]
    Timeout,
    /// `last_value` is `None` when no reply parsed as JSON at all.
    #[error("reply violates {contract} after {attempts} attempts: {detail}")]
    SchemaViolation { contract: String, attempts: u32, detail: String, last_value: Option<serde_json::Value> },
    #[error("no scripted reply for {key}")]
    UnscriptedRequest { key: String },
    #[error("script parse error: {0}")]
    Parse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A model endpoint. Implementations only need [`ModelBackend::send`]; the
/// provided [`ModelBackend::complete`] adds contract validation and repair.
pub trait ModelBackend: Send + Sync {
    fn id(&self) -> String;

    /// Produce one raw reply. `attempt` is 1 for the first logical call and
    /// 2 for the repair reprompt.
    fn send(&self, req: &ModelRequest, attempt: u32) -> Result<RawReply, BackendError>;

    fn complete(&self, req: &ModelRequest) -> Result<ModelResponse, BackendError> {
        complete_with(|r, a| self.send(r, a), req)
    }
}

/// Backend assignment per role, with a default.
#[derive(Clone)]
pub struct Backends {
    default: Arc<dyn ModelBackend>,
    by_role: BTreeMap<RoleTag, Arc<dyn ModelBackend>>,
}

impl Backends {
    pub fn single(backend: Arc<dyn ModelBackend>) -> Backends {
        Backends { default: backend, by_role: BTreeMap::new() }
    }

    pub fn with_role(mut self, role: RoleTag, backend: Arc<dyn ModelBackend>) -> Backends {
        self.by_role.insert(role, backend);
        self
    }

    pub fn for_role(&self, role: RoleTag) -> &dyn ModelBackend {
        self.by_role.get(&role).unwrap_or(&self.default).as_ref()
    }

    /// Role → backend id for every role tag.
    pub fn ids(&self) -> BTreeMap<String, String> {
        RoleTag::ALL.iter().map(|r| (r.as_str().to_string(), self.for_role(*r).id())).collect()
    }
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.ids()).finish()
    }
}

pub(crate) fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}
