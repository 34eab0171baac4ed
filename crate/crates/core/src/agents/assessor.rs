use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{contracts, AgentError, AgentIo};
use crate::backends::RoleTag;
use crate::profiles::Demographics;
use crate::prompts::bind;
use crate::scales::{validate_plan, Administration, PlanEntry, PlanViolation, Repository, ScaleDomain, ScalePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanSource {
    Backend,
    Repaired,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessorOutcome {
    pub plan: ScalePlan,
    pub source: PlanSource,
    /// Problems found in the rejected proposals, oldest first.
    pub rejected: Vec<String>,
}

const DEPRESSION_WORDS: &[&str] = &[
    "depress", "flat", "sad", "hopeless", "empty", "down", "worthless", "cry", "tearful", "no interest",
    "no energy", "tired all", "pointless", "numb", "guilt",
];
const ANXIETY_WORDS: &[&str] = &[
    "anxi", "worry", "worried", "nervous", "panic", "on edge", "tense", "racing heart", "restless", "fear",
    "dread", "can't relax",
];
const TRAUMA_WORDS: &[&str] = &[
    "trauma", "accident", "assault", "attack", "flashback", "nightmare", "combat", "abuse", "crash", "war",
    "violence", "startle",
];

/// Primary domain suggested by the chief complaint. Ties and complaints
/// without any keyword go to depression.
pub fn route_domain(chief_complaint: &str) -> ScaleDomain {
    let text = chief_complaint.to_lowercase();
    let hits = |words: &[&str]| words.iter().filter(|w| text.contains(*w)).count();
    let scores = [
        (ScaleDomain::Depression, hits(DEPRESSION_WORDS)),
        (ScaleDomain::Anxiety, hits(ANXIETY_WORDS)),
        (ScaleDomain::Ptsd, hits(TRAUMA_WORDS)),
    ];
    let best = scores.iter().map(|(_, n)| *n).max().unwrap_or(0);
    scores
        .iter()
        .find(|(_, n)| *n == best && best > 0)
        .map(|(d, _)| *d)
        .unwrap_or(ScaleDomain::Depression)
}

fn fallback_plan(chief_complaint: &str, repo: &Repository) -> Result<ScalePlan, AgentError> {
    let domain = route_domain(chief_complaint);
    let pick = |admin| {
        repo.first_of(domain, admin)
            .map(|d| PlanEntry::new(&d.abbr, "keyword routing fallback"))
            .ok_or_else(|| AgentError::PlanImpossible(format!("repository has no {admin:?} scale for {domain:?}")))
    };
    Ok(ScalePlan { clinician_scales: vec![pick(Administration::ClinicianRated)?], self_report_scales: vec![pick(Administration::SelfReport)?] })
}

fn parse_plan(v: &Value, repo: &Repository) -> ScalePlan {
    let list = |key: &str| -> Vec<PlanEntry> {
        v[key]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|e| {
                        let name = e["name"].as_str().unwrap_or("");
                        let abbr = repo.resolve(name).map(|d| d.abbr.as_str()).unwrap_or(name);
                        PlanEntry::new(abbr, e["reason"].as_str().unwrap_or(""))
                    })
                    .collect()
            })
            .unwrap_or_default()
    };
    ScalePlan { clinician_scales: list("clinician_scales"), self_report_scales: list("self_report_scales") }
}

fn describe(violations: &[PlanViolation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Choose the scale plan from public information only. A proposal that
/// fails validation gets one repair round; after that, or on any backend
/// failure, keyword routing picks the domain's default pair.
pub fn assessor_select(
    demographics: &Demographics,
    chief_complaint: &str,
    repo: &Repository,
    io: &mut AgentIo<'_>,
) -> Result<AssessorOutcome, AgentError> {
    let scale_list = repo
        .definitions()
        .iter()
        .map(|d| format!("- {} ({}): {:?}, {:?}", d.name, d.abbr, d.domain, d.admin))
        .collect::<Vec<_>>()
        .join("\n");
    let summary = demographics.summary();
    let bindings = bind([
        ("demographics", summary.as_str()),
        ("chief_complaint", chief_complaint),
        ("scale_list", scale_list.as_str()),
    ]);
    let mut rejected = Vec::new();
    let mut user = "Select the scales for this patient.".to_string();
    for source in [PlanSource::Backend, PlanSource::Repaired] {
        let reply = io.call(RoleTag::AssessorCoT, "assessor", bindings.clone(), user.clone(), contracts::scale_plan());
        let value = match reply {
            Ok(r) => r.parsed.unwrap_or(Value::Null),
            Err(e) => {
                rejected.push(e.to_string());
                break;
            }
        };
        let plan = parse_plan(&value, repo);
        let violations = validate_plan(&plan, repo);
        if violations.is_empty() {
            return Ok(AssessorOutcome { plan, source, rejected });
        }
        let detail = describe(&violations);
        user = format!("Your previous plan was invalid: {detail}. Return a corrected plan.");
        rejected.push(detail);
    }
    let plan = fallback_plan(chief_complaint, repo)?;
    Ok(AssessorOutcome { plan, source: PlanSource::Fallback, rejected })
}
