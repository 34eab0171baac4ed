//! Prompt templates with `{name}` placeholders.

use regex::Regex;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

pub const TEMPLATE_NAMES: [&str; 10] = [
    "assessor",
    "patient_cot",
    "patient_chat",
    "evaluator_cot",
    "evaluator_chat",
    "diagnostician",
    "self_report",
    "clinician_rating",
    "extractor",
    "rater",
];

const BUNDLED: [(&str, &str); 10] = [
    ("assessor", include_str!("../data/prompts/assessor.txt")),
    ("patient_cot", include_str!("../data/prompts/patient_cot.txt")),
    ("patient_chat", include_str!("../data/prompts/patient_chat.txt")),
    ("evaluator_cot", include_str!("../data/prompts/evaluator_cot.txt")),
    ("evaluator_chat", include_str!("../data/prompts/evaluator_chat.txt")),
    ("diagnostician", include_str!("../data/prompts/diagnostician.txt")),
    ("self_report", include_str!("../data/prompts/self_report.txt")),
    ("clinician_rating", include_str!("../data/prompts/clinician_rating.txt")),
    ("extractor", include_str!("../data/prompts/extractor.txt")),
    ("rater", include_str!("../data/prompts/rater.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: BTreeMap<String, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::bundled()
    }
}

impl PromptSet {
    pub fn bundled() -> PromptSet {
        PromptSet { templates: BUNDLED.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    /// Load `<name>.txt` for every template from `dir`; files that are
    /// absent keep the bundled text.
    pub fn load_dir(dir: &Path) -> std::io::Result<PromptSet> {
        if !dir.is_dir() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("prompt directory {} not found", dir.display()),
            ));
        }
        let mut set = PromptSet::bundled();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                set.templates.insert(name.to_string(), std::fs::read_to_string(&path)?);
            }
        }
        Ok(set)
    }

    pub fn template(&self, name: &str) -> &str {
        self.templates.get(name).map(String::as_str).unwrap_or("")
    }

    pub fn render(&self, name: &str, bindings: &BTreeMap<String, String>) -> String {
        render(self.template(name), bindings)
    }
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

/// Substitute bound `{name}` placeholders; unbound ones are left intact so
/// literal JSON examples in templates survive.
pub fn render(template: &str, bindings: &BTreeMap<String, String>) -> String {
    placeholder()
        .replace_all(template, |caps: &regex::Captures| match bindings.get(&caps[1]) {
            Some(v) => v.clone(),
            None => caps[0].to_string(),
        })
        .into_owned()
}

/// Build a binding map from pairs.
pub fn bind<K: ToString, V: ToString>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_bound_names_are_replaced() {
        let b = bind([("scale_name", "PHQ-9")]);
        assert_eq!(render("Scale {scale_name}; keep {other} and {\"a\": 1}", &b), "Scale PHQ-9; keep {other} and {\"a\": 1}");
    }

    #[test]
    fn every_template_is_bundled() {
        let set = PromptSet::bundled();
        for name in TEMPLATE_NAMES {
            assert!(!set.template(name).is_empty(), "{name}");
        }
        assert!(set.template("patient_chat").contains("{strategy_directive}"));
    }
}
