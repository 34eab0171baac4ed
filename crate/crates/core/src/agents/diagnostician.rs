use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use super::{contracts, AgentError, AgentIo, DeceptionHint, SuspicionTracker};
use crate::backends::RoleTag;
use crate::profiles::{ClinicalStatus, PatientProfile, Severity};
use crate::prompts::bind;
use crate::scales::{Grade, Repository, ScalePlan, ScaleResponse};

/// Which rule fixed the final severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolutionRule {
    /// Self-report and clinician rating agree.
    Agreement,
    /// Flagged as concealing: the clinician rating wins.
    ClinicianOverConcealment,
    /// Flagged as exaggerating: the lower of the two wins.
    DowngradeExaggeration,
    /// Disagreement without a flag: the clinician rating wins.
    ClinicianDefault,
    /// Only one source carries a graded severity.
    SingleSource,
    /// Neither source is graded; the model's severity is used.
    ModelSeverity,
    /// Healthy status has no severity.
    Healthy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRef {
    pub text: String,
    pub rounds: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub status: ClinicalStatus,
    pub severity: Severity,
    pub symptom_match: String,
    pub discrepancy_resolution: String,
    pub key_evidence: Vec<EvidenceRef>,
    pub rule: ResolutionRule,
    pub self_severity: Option<Severity>,
    pub clinician_severity: Option<Severity>,
}

pub struct DiagnoseInput<'a> {
    pub profile: &'a PatientProfile,
    pub plan: &'a ScalePlan,
    pub repo: &'a Repository,
    pub self_reports: &'a BTreeMap<String, ScaleResponse>,
    pub clinician_reports: &'a BTreeMap<String, ScaleResponse>,
    pub tracker: &'a SuspicionTracker,
    pub last_round: u32,
}

fn severity_of(grade: Grade) -> Severity {
    match grade {
        Grade::Normal | Grade::Mild => Severity::Mild,
        Grade::Moderate => Severity::Moderate,
        Grade::Severe => Severity::Severe,
    }
}

/// Severity of the first primary-domain report (in plan order) whose band
/// carries a grade.
fn graded<'r>(
    abbrs: impl Iterator<Item = &'r String>,
    reports: &BTreeMap<String, ScaleResponse>,
    repo: &Repository,
) -> Option<(String, Severity)> {
    abbrs
        .filter_map(|a| Some((repo.get(a)?, reports.get(a)?)))
        .filter(|(def, _)| def.domain.is_primary())
        .find_map(|(def, r)| def.grade_of(&r.severity).map(|g| (format!("{} {} ({})", def.abbr, r.total_score, r.severity), severity_of(g))))
}

fn score_line(reports: &BTreeMap<String, ScaleResponse>, abbrs: impl Iterator<Item = String>) -> String {
    let parts: Vec<String> = abbrs
        .filter_map(|a| reports.get(&a).map(|r| format!("{} = {} ({})", a, r.total_score, r.severity)))
        .collect();
    if parts.is_empty() { "none".into() } else { parts.join(", ") }
}

/// Resolve status and severity from the completed reports and the
/// Evaluator's suspicion state.
pub fn diagnose(input: &DiagnoseInput<'_>, io: &mut AgentIo<'_>) -> Result<DiagnosticReport, AgentError> {
    let missing: Vec<String> = input
        .plan
        .clinician_scales
        .iter()
        .filter(|e| !input.clinician_reports.contains_key(&e.abbr))
        .chain(input.plan.self_report_scales.iter().filter(|e| !input.self_reports.contains_key(&e.abbr)))
        .map(|e| e.abbr.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AgentError::IncompleteReports(missing));
    }
    let t = input.tracker;
    let direction = t.direction();
    let flags: Vec<String> = t.flag_log.iter().map(|(r, f)| format!("round {r}: {f}")).collect();
    let self_line = score_line(input.self_reports, input.plan.self_report_scales.iter().map(|e| e.abbr.clone()));
    let clin_line = score_line(input.clinician_reports, input.plan.clinician_scales.iter().map(|e| e.abbr.clone()));
    let suspicion = format!(
        "{:.2} ({})",
        t.xi,
        match (t.flagged(), direction) {
            (true, Some(DeceptionHint::Concealing)) => "flagged: Concealing",
            (true, Some(DeceptionHint::Exaggerating)) => "flagged: Exaggerating",
            (true, _) => "flagged",
            _ => "not flagged",
        }
    );
    let bindings = bind([
        ("demographics", input.profile.demographics.summary().as_str()),
        ("chief_complaints", input.profile.chief_complaint.as_str()),
        ("patient_score", self_line.as_str()),
        ("evaluator_score", clin_line.as_str()),
        ("suspicion_score", suspicion.as_str()),
        ("inconsistency_logs", if flags.is_empty() { "none".to_string() } else { flags.join("; ") }.as_str()),
    ]);
    let user = format!("The transcript has {} rounds. Write the final report.", input.last_round + 1);
    let resp =
        io.call(RoleTag::Diagnostician, "diagnostician", bindings, user, contracts::diagnosis(input.last_round))?;
    let v = resp.parsed.unwrap_or(Value::Null);
    let status = v["final_diagnosis"]["status"]
        .as_str()
        .and_then(ClinicalStatus::parse)
        .ok_or_else(|| AgentError::Invalid("diagnosis status".into()))?;
    let model_severity = v["final_diagnosis"]["severity"].as_str().and_then(Severity::parse).unwrap_or(Severity::Mild);
    let reasoning = &v["reasoning"];
    let key_evidence: Vec<EvidenceRef> = reasoning["key_evidence"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_str).collect::<Vec<_>>())
        .unwrap_or_default()
        .into_iter()
        .map(|s| EvidenceRef { text: s.to_string(), rounds: contracts::parse_round_refs(s) })
        .collect();

    let self_g = graded(input.plan.self_report_scales.iter().map(|e| &e.abbr), input.self_reports, input.repo);
    let clin_g = graded(input.plan.clinician_scales.iter().map(|e| &e.abbr), input.clinician_reports, input.repo);
    let (severity, rule, note) = if status == ClinicalStatus::Healthy {
        (Severity::NotApplicable, ResolutionRule::Healthy, "Healthy status carries no severity.".to_string())
    } else {
        match (&self_g, &clin_g) {
            (Some((sl, s)), Some((cl, c))) if s == c => {
                (*s, ResolutionRule::Agreement, format!("Self-report {sl} and clinician rating {cl} agree."))
            }
            (Some((sl, s)), Some((cl, c))) => match (t.flagged(), direction) {
                (true, Some(DeceptionHint::Concealing)) => (
                    *c,
                    ResolutionRule::ClinicianOverConcealment,
                    format!("Patient flagged as concealing; clinician rating {cl} overrides self-report {sl}."),
                ),
                (true, Some(DeceptionHint::Exaggerating)) => (
                    (*s).min(*c),
                    ResolutionRule::DowngradeExaggeration,
                    format!("Patient flagged as exaggerating; self-report {sl} downgraded against clinician rating {cl}."),
                ),
                _ => (
                    *c,
                    ResolutionRule::ClinicianDefault,
                    format!("Self-report {sl} and clinician rating {cl} disagree without a deception flag; clinician rating used."),
                ),
            },
            (Some((l, s)), None) | (None, Some((l, s))) => {
                (*s, ResolutionRule::SingleSource, format!("Only {l} is graded; its severity is used."))
            }
            (None, None) => (
                model_severity.max(Severity::Mild),
                ResolutionRule::ModelSeverity,
                "No graded scale result; the consultant's severity is used.".to_string(),
            ),
        }
    };
    let model_note = reasoning["discrepancy_resolution"].as_str().unwrap_or("").trim();
    let discrepancy_resolution =
        if model_note.is_empty() { note } else { format!("{note} Consultant note: {model_note}") };
    Ok(DiagnosticReport {
        status,
        severity,
        symptom_match: reasoning["symptom_match"].as_str().unwrap_or("").to_string(),
        discrepancy_resolution,
        key_evidence,
        rule,
        self_severity: self_g.map(|g| g.1),
        clinician_severity: clin_g.map(|g| g.1),
    })
}
