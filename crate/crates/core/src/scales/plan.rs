use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{Administration, Repository, ScaleDomain};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub abbr: String,
    pub reason: String,
}

impl PlanEntry {
    pub fn new(abbr: &str, reason: &str) -> PlanEntry {
        PlanEntry { abbr: abbr.to_string(), reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScalePlan {
    pub clinician_scales: Vec<PlanEntry>,
    pub self_report_scales: Vec<PlanEntry>,
}

impl ScalePlan {
    pub fn clinician_abbrs(&self) -> BTreeSet<String> {
        self.clinician_scales.iter().map(|e| e.abbr.clone()).collect()
    }

    pub fn self_report_abbrs(&self) -> BTreeSet<String> {
        self.self_report_scales.iter().map(|e| e.abbr.clone()).collect()
    }

    /// The single Depression/Anxiety/PTSD domain among the plan's scales.
    pub fn primary_domain(&self, repo: &Repository) -> Option<ScaleDomain> {
        self.clinician_scales
            .iter()
            .chain(&self.self_report_scales)
            .filter_map(|e| repo.get(&e.abbr))
            .map(|d| d.domain)
            .find(|d| d.is_primary())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PlanViolation {
    UnknownScale { abbr: String },
    EmptyClinicianList,
    MixedPrimaryDomains { domains: Vec<ScaleDomain> },
    AdminMismatch { abbr: String, listed_as: Administration },
    DuplicateScale { abbr: String },
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanViolation::UnknownScale { abbr } => write!(f, "unknown scale {abbr}: select only from the list"),
            PlanViolation::EmptyClinicianList => f.write_str("clinician_scales is empty: select at least one"),
            PlanViolation::MixedPrimaryDomains { domains } => {
                let names: Vec<String> = domains.iter().map(|d| d.to_string()).collect();
                write!(f, "mixed primary domains {}: keep a single one", names.join(", "))
            }
            PlanViolation::AdminMismatch { abbr, listed_as } => {
                write!(f, "{abbr} is listed as {listed_as:?} but is administered differently")
            }
            PlanViolation::DuplicateScale { abbr } => write!(f, "{abbr} is listed more than once"),
        }
    }
}

/// Report every structural problem with a plan; empty means valid.
pub fn validate_plan(plan: &ScalePlan, repo: &Repository) -> Vec<PlanViolation> {
    let mut out = Vec::new();
    if plan.clinician_scales.is_empty() {
        out.push(PlanViolation::EmptyClinicianList);
    }
    let mut seen = BTreeSet::new();
    let mut primaries = BTreeSet::new();
    let lists = [
        (&plan.clinician_scales, Administration::ClinicianRated),
        (&plan.self_report_scales, Administration::SelfReport),
    ];
    for (entries, listed_as) in lists {
        for entry in entries {
            if !seen.insert(entry.abbr.clone()) {
                out.push(PlanViolation::DuplicateScale { abbr: entry.abbr.clone() });
            }
            match repo.get(&entry.abbr) {
                None => out.push(PlanViolation::UnknownScale { abbr: entry.abbr.clone() }),
                Some(def) => {
                    if def.admin != listed_as {
                        out.push(PlanViolation::AdminMismatch { abbr: entry.abbr.clone(), listed_as });
                    }
                    if def.domain.is_primary() {
                        primaries.insert(def.domain);
                    }
                }
            }
        }
    }
    if primaries.len() > 1 {
        out.push(PlanViolation::MixedPrimaryDomains { domains: primaries.into_iter().collect() });
    }
    out
}
