//! Run configuration: a TOML file with `[paths]`, `[agent]`, `[session]`,
//! `[backend]` and optional `[roles.<RoleTag>]` backend overrides.
//!
//! ```toml
//! seed = 7
//! [paths]
//! output = "corpus"
//! [agent]
//! theta_susp = 0.5
//! [session]
//! min_rounds = 18
//! [backend]
//! kind = "scripted"
//! script_dir = "scripts"
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

use crate::agents::AgentParams;
use crate::backends::{BackendError, Backends, HttpBackend, HttpConfig, ModelBackend, RoleTag, ScriptedBackend};
use crate::profiles::{load_feature_bank, FeatureBank, PatientProfile};
use crate::prompts::PromptSet;
use crate::scales::{load_repository, Repository};
use crate::session::SessionParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Scale repository JSON; the bundled repository when absent.
    #[serde(default)]
    pub repository: Option<PathBuf>,
    #[serde(default)]
    pub feature_bank: Option<PathBuf>,
    /// Directory of prompt templates overriding the bundled ones.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Canned replies. `script` serves every profile; `script_dir` is
    /// searched for `<profile id>.json`, then `default.json`.
    Scripted {
        #[serde(default)]
        script: Option<PathBuf>,
        #[serde(default)]
        script_dir: Option<PathBuf>,
    },
    Http(HttpConfig),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Scripted { script: None, script_dir: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub agent: AgentParams,
    #[serde(default)]
    pub session: SessionParams,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub roles: BTreeMap<String, BackendConfig>,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn rebase_backend(base: &Path, b: &mut BackendConfig) {
    if let BackendConfig::Scripted { script, script_dir } = b {
        rebase(base, script);
        rebase(base, script_dir);
    }
}

/// Inputs loaded once per run from the configured paths.
pub struct Resources {
    pub repo: Repository,
    pub bank: FeatureBank,
    pub prompts: PromptSet,
}

impl RunConfig {
    /// Parse TOML; relative paths are taken relative to `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for p in [&mut cfg.paths.repository, &mut cfg.paths.feature_bank, &mut cfg.paths.prompts, &mut cfg.paths.output] {
            rebase(base_dir, p);
        }
        rebase_backend(base_dir, &mut cfg.backend);
        for b in cfg.roles.values_mut() {
            rebase_backend(base_dir, b);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), detail: e.to_string() })?;
        RunConfig::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parameter ranges and path existence.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.agent.validate().map_err(ConfigError::Invalid)?;
        self.session.validate().map_err(ConfigError::Invalid)?;
        let named = [
            ("paths.repository", &self.paths.repository),
            ("paths.feature_bank", &self.paths.feature_bank),
            ("paths.prompts", &self.paths.prompts),
        ];
        for (key, p) in named {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::Invalid(format!("{key} {} does not exist", p.display())));
                }
            }
        }
        for role in self.roles.keys() {
            if RoleTag::parse(role).is_none() {
                return Err(ConfigError::Invalid(format!("unknown role [roles.{role}]")));
            }
        }
        for b in std::iter::once(&self.backend).chain(self.roles.values()) {
            match b {
                BackendConfig::Scripted { script, script_dir } => {
                    for (key, p) in [("script", script), ("script_dir", script_dir)] {
                        if let Some(p) = p {
                            if !p.exists() {
                                return Err(ConfigError::Invalid(format!("backend {key} {} does not exist", p.display())));
                            }
                        }
                    }
                }
                BackendConfig::Http(h) => {
                    if h.endpoint_url.is_empty() || h.model_name.is_empty() {
                        return Err(ConfigError::Invalid("http backend needs endpoint_url and model_name".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration, leaving
    /// out the output directory.
    pub fn hash(&self) -> String {
        let mut content = self.clone();
        content.paths.output = None;
        let canonical = serde_json::to_string(&content).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn resources(&self) -> Result<Resources, ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        let repo = match &self.paths.repository {
            Some(p) => load_repository(p).map_err(|e| invalid(e.to_string()))?,
            None => Repository::bundled(),
        };
        let bank = match &self.paths.feature_bank {
            Some(p) => load_feature_bank(p).map_err(|e| invalid(e.to_string()))?,
            None => FeatureBank::bundled(),
        };
        let prompts = match &self.paths.prompts {
            Some(p) => PromptSet::load_dir(p).map_err(|e| invalid(e.to_string()))?,
            None => PromptSet::bundled(),
        };
        Ok(Resources { repo, bank, prompts })
    }

    /// Backends for one profile's session.
    pub fn backends_for(&self, profile: &PatientProfile) -> Result<Backends, BackendError> {
        let mut backends = Backends::single(build_backend(&self.backend, profile)?);
        for (role, cfg) in &self.roles {
            let role = RoleTag::parse(role).ok_or_else(|| BackendError::InvalidRequest(format!("unknown role {role}")))?;
            backends = backends.with_role(role, build_backend(cfg, profile)?);
        }
        Ok(backends)
    }
}

fn build_backend(cfg: &BackendConfig, profile: &PatientProfile) -> Result<Arc<dyn ModelBackend>, BackendError> {
    match cfg {
        BackendConfig::Http(h) => Ok(Arc::new(HttpBackend::new(h.clone())?)),
        BackendConfig::Scripted { script: Some(p), .. } => Ok(Arc::new(ScriptedBackend::load(p)?)),
        BackendConfig::Scripted { script: None, script_dir: Some(dir) } => {
            let own = dir.join(format!("{}.json", profile.id));
            let fallback = dir.join("default.json");
            let path = if own.exists() { own } else { fallback };
            if !path.exists() {
                return Err(BackendError::Parse(format!("no script for profile {} in {}", profile.id, dir.display())));
            }
            Ok(Arc::new(ScriptedBackend::load(&path)?))
        }
        BackendConfig::Scripted { script: None, script_dir: None } => {
            Err(BackendError::InvalidRequest("scripted backend needs script or script_dir".into()))
        }
    }
}
