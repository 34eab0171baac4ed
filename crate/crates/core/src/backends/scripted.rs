use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;

use super::lexicon::appraise_text;
use super::{whitespace_tokens, BackendError, ModelBackend, ModelRequest, RawReply, RoleTag, Usage};

/// One canned reply. `json` is a convenience for structured replies and is
/// serialized into the reply text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<Value>,
    /// Number of leading attempts that return unparseable text.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub malformed_prefix_count: u32,
}

impl ScriptEntry {
    pub fn text(text: impl Into<String>) -> ScriptEntry {
        ScriptEntry { text: Some(text.into()), json: None, malformed_prefix_count: 0 }
    }

    pub fn json(value: Value) -> ScriptEntry {
        ScriptEntry { text: None, json: Some(value), malformed_prefix_count: 0 }
    }

    pub fn malformed_first(mut self, n: u32) -> ScriptEntry {
        self.malformed_prefix_count = n;
        self
    }

    fn body(&self) -> String {
        match (&self.text, &self.json) {
            (Some(t), _) => t.clone(),
            (None, Some(v)) => v.to_string(),
            (None, None) => String::new(),
        }
    }
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptOptions {
    /// Answer un-keyed `PatientCoT` requests from the cue-word lexicon.
    #[serde(default)]
    pub lexicon_appraisal: bool,
}

/// Replays canned replies keyed by `"Role/index"`, falling back to
/// `"Role/*"`. Never improvises: an uncovered key is an error.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    name: String,
    entries: BTreeMap<String, ScriptEntry>,
    options: ScriptOptions,
}

pub const MALFORMED_REPLY: &str = "I am sorry, I cannot format that right now.";

impl ScriptedBackend {
    pub fn new(name: &str, entries: BTreeMap<String, ScriptEntry>, options: ScriptOptions) -> ScriptedBackend {
        ScriptedBackend { name: name.to_string(), entries, options }
    }

    /// Parse a script document: keys are `Role/index` or `Role/*`; keys
    /// starting with `@` carry options.
    pub fn from_json(name: &str, text: &str) -> Result<ScriptedBackend, BackendError> {
        let doc: BTreeMap<String, Value> = serde_json::from_str(text).map_err(|e| BackendError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        let mut options = ScriptOptions::default();
        for (key, value) in doc {
            if key == "@options" {
                options = serde_json::from_value(value).map_err(|e| BackendError::Parse(format!("@options: {e}")))?;
                continue;
            }
            if key.starts_with('@') {
                continue;
            }
            let (role, index) = key
                .split_once('/')
                .ok_or_else(|| BackendError::Parse(format!("key {key} is not Role/index")))?;
            if RoleTag::parse(role).is_none() {
                return Err(BackendError::Parse(format!("unknown role in key {key}")));
            }
            if index != "*" && index.parse::<u32>().is_err() {
                return Err(BackendError::Parse(format!("bad index in key {key}")));
            }
            let entry: ScriptEntry =
                serde_json::from_value(value).map_err(|e| BackendError::Parse(format!("{key}: {e}")))?;
            if entry.text.is_none() && entry.json.is_none() {
                return Err(BackendError::Parse(format!("{key}: entry needs text or json")));
            }
            entries.insert(key, entry);
        }
        Ok(ScriptedBackend { name: name.to_string(), entries, options })
    }

    pub fn load(path: &Path) -> Result<ScriptedBackend, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::Parse(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("script");
        ScriptedBackend::from_json(name, &text)
    }

    /// The script as a document [`ScriptedBackend::from_json`] accepts.
    pub fn to_json(&self) -> Value {
        let mut doc = serde_json::Map::new();
        if self.options != ScriptOptions::default() {
            doc.insert("@options".into(), serde_json::to_value(&self.options).expect("options serialize"));
        }
        for (k, e) in &self.entries {
            doc.insert(k.clone(), serde_json::to_value(e).expect("entries serialize"));
        }
        Value::Object(doc)
    }

    pub fn entries(&self) -> &BTreeMap<String, ScriptEntry> {
        &self.entries
    }

    fn lexicon_reply(req: &ModelRequest) -> String {
        let utterance = req.bindings.get("doctor_input").map(String::as_str).unwrap_or("");
        let a = appraise_text(utterance);
        json!({
            "thought_trace": a.rationale(),
            "empathy": a.empathy,
            "pressure": a.pressure,
            "strategy_directive": "",
            "non_verbal_cues": []
        })
        .to_string()
    }
}

/// Replace `{{name}}` with bound values; unknown names stay as written.
fn render(text: &str, bindings: &BTreeMap<String, String>) -> String {
    let mut out = text.to_string();
    for (k, v) in bindings {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

impl ModelBackend for ScriptedBackend {
    fn id(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn send(&self, req: &ModelRequest, attempt: u32) -> Result<RawReply, BackendError> {
        let role = req.role_tag.as_str();
        let exact = format!("{role}/{}", req.sequence);
        let text = match self.entries.get(&exact) {
            Some(e) if attempt <= e.malformed_prefix_count => MALFORMED_REPLY.to_string(),
            Some(e) => render(&e.body(), &req.bindings),
            None if self.options.lexicon_appraisal && req.role_tag == RoleTag::PatientCoT => {
                ScriptedBackend::lexicon_reply(req)
            }
            None => match self.entries.get(&format!("{role}/*")) {
                Some(e) if attempt <= e.malformed_prefix_count => MALFORMED_REPLY.to_string(),
                Some(e) => render(&e.body(), &req.bindings),
                None => return Err(BackendError::UnscriptedRequest { key: exact }),
            },
        };
        let prompt_tokens = req.messages.iter().map(|m| whitespace_tokens(&m.text)).sum();
        let usage = Usage { prompt_tokens, completion_tokens: whitespace_tokens(&text) };
        Ok(RawReply { text, usage, attempts: 1 })
    }
}
