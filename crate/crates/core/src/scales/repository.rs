use std::collections::HashSet;
use std::path::Path;

use super::{Administration, ScaleDefinition, ScaleDomain, ScaleError};

pub const EXPECTED_SCALE_COUNT: usize = 46;

/// The bundled instrument file.
pub const BUNDLED_SCALES: &str = include_str!("../../data/scales.json");

/// Immutable, ordered set of instrument definitions. Order within a domain is
/// meaningful: the first clinician-rated and first self-report entries are
/// the domain's default instruments.
#[derive(Debug, Clone)]
pub struct Repository {
    defs: Vec<ScaleDefinition>,
}

impl Repository {
    pub fn bundled() -> Repository {
        Repository::from_json(BUNDLED_SCALES).expect("bundled scale file is valid")
    }

    pub fn from_json(text: &str) -> Result<Repository, ScaleError> {
        let defs: Vec<ScaleDefinition> =
            serde_json::from_str(text).map_err(|e| ScaleError::Parse(e.to_string()))?;
        Repository::from_definitions(defs, Some(EXPECTED_SCALE_COUNT))
    }

    /// Build from definitions; `expected` enforces an exact count.
    pub fn from_definitions(
        defs: Vec<ScaleDefinition>,
        expected: Option<usize>,
    ) -> Result<Repository, ScaleError> {
        if let Some(expected) = expected {
            if defs.len() != expected {
                return Err(ScaleError::CountMismatch { expected, found: defs.len() });
            }
        }
        let mut seen = HashSet::new();
        for def in &defs {
            def.check().map_err(ScaleError::InvalidDefinition)?;
            if !seen.insert(def.abbr.clone()) {
                return Err(ScaleError::DuplicateAbbr(def.abbr.clone()));
            }
        }
        Ok(Repository { defs })
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn definitions(&self) -> &[ScaleDefinition] {
        &self.defs
    }

    pub fn get(&self, abbr: &str) -> Option<&ScaleDefinition> {
        self.defs.iter().find(|d| d.abbr == abbr)
    }

    /// Resolve by abbreviation or full name, case-insensitively.
    pub fn resolve(&self, name: &str) -> Option<&ScaleDefinition> {
        let wanted = name.trim().to_lowercase();
        self.defs.iter().find(|d| {
            d.abbr.to_lowercase() == wanted
                || d.name.to_lowercase() == wanted
                || format!("{} ({})", d.name, d.abbr).to_lowercase() == wanted
        })
    }

    pub fn in_domain(&self, domain: ScaleDomain) -> impl Iterator<Item = &ScaleDefinition> {
        self.defs.iter().filter(move |d| d.domain == domain)
    }

    pub fn first_of(&self, domain: ScaleDomain, admin: Administration) -> Option<&ScaleDefinition> {
        self.in_domain(domain).find(|d| d.admin == admin)
    }
}

pub fn load_repository(path: &Path) -> Result<Repository, ScaleError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScaleError::Io(format!("{}: {e}", path.display())))?;
    Repository::from_json(&text)
}
