use serde_json::Value;
use std::fmt;
use std::sync::Arc;

use super::{BackendError, Message, ModelRequest, ModelResponse, RawReply, Speaker, Usage};

type Check = dyn Fn(&Value) -> Result<(), String> + Send + Sync;

/// A named structural check applied to parsed JSON replies.
#[derive(Clone)]
pub struct JsonContract {
    pub name: String,
    check: Arc<Check>,
}

impl JsonContract {
    pub fn new(name: &str, check: impl Fn(&Value) -> Result<(), String> + Send + Sync + 'static) -> Self {
        JsonContract { name: name.to_string(), check: Arc::new(check) }
    }

    pub fn validate(&self, value: &Value) -> Result<(), String> {
        (self.check)(value)
    }
}

impl fmt::Debug for JsonContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JsonContract({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum ResponseContract {
    FreeText,
    JsonSchema(JsonContract),
}

impl ResponseContract {
    pub fn name(&self) -> Option<&str> {
        match self {
            ResponseContract::FreeText => None,
            ResponseContract::JsonSchema(c) => Some(&c.name),
        }
    }
}

/// Pull one JSON value out of a reply, tolerating code fences and prose
/// around a single object.
pub fn extract_json(text: &str) -> Result<Value, String> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        return Ok(v);
    }
    let unfenced = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|s| s.trim_end().strip_suffix("```"))
        .map(str::trim);
    if let Some(inner) = unfenced {
        if let Ok(v) = serde_json::from_str::<Value>(inner) {
            return Ok(v);
        }
    }
    match (trimmed.find('{'), trimmed.rfind('}')) {
        (Some(a), Some(b)) if a < b => {
            serde_json::from_str::<Value>(&trimmed[a..=b]).map_err(|e| e.to_string())
        }
        _ => Err("no JSON object found".to_string()),
    }
}

enum Failure {
    Malformed(String),
    Invalid(String, Value),
}

/// Run one request through validation and at most one repair reprompt.
pub fn complete_with(
    mut send: impl FnMut(&ModelRequest, u32) -> Result<RawReply, BackendError>,
    req: &ModelRequest,
) -> Result<ModelResponse, BackendError> {
    req.check()?;
    let contract = match &req.response_contract {
        super::ResponseContract::FreeText => {
            let raw = send(req, 1)?;
            return Ok(ModelResponse { text: raw.text, parsed: None, usage: raw.usage, attempt_count: raw.attempts });
        }
        super::ResponseContract::JsonSchema(c) => c.clone(),
    };

    let mut usage = Usage::default();
    let mut attempts = 0;
    let mut current = req.clone();
    let mut failure = None;
    for call in 1..=2u32 {
        let raw = send(&current, call)?;
        attempts += raw.attempts;
        usage.add(raw.usage);
        let outcome = match extract_json(&raw.text) {
            Err(e) => Failure::Malformed(e),
            Ok(value) => match contract.validate(&value) {
                Ok(()) => {
                    return Ok(ModelResponse { text: raw.text, parsed: Some(value), usage, attempt_count: attempts })
                }
                Err(e) => Failure::Invalid(e, value),
            },
        };
        if call == 1 {
            let detail = match &outcome {
                Failure::Malformed(e) => format!("The reply was not valid JSON ({e})."),
                Failure::Invalid(e, _) => format!("The reply failed validation: {e}."),
            };
            current.messages.push(Message { speaker: Speaker::Assistant, text: raw.text.clone() });
            current.messages.push(Message {
                speaker: Speaker::User,
                text: format!("{detail} Reply again with only the corrected JSON object."),
            });
        }
        failure = Some(outcome);
    }
    Err(match failure {
        Some(Failure::Invalid(detail, value)) => BackendError::SchemaViolation {
            contract: contract.name.clone(),
            attempts,
            detail,
            last_value: Some(value),
        },
        Some(Failure::Malformed(detail)) => {
            BackendError::SchemaViolation { contract: contract.name.clone(), attempts, detail, last_value: None }
        }
        None => unreachable!("loop runs twice"),
    })
}
