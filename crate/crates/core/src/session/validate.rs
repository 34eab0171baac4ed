use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::record::CorpusRecord;
use crate::agents::{missing_core_elements, Agenda, SaturationStatus, NONVERBAL_CUE_MAX_CHARS};
use crate::profiles::{ClinicalStatus, Severity};
use crate::scales::{
    score_scale, validate_plan, AdjustmentDirection, Rater, Repository, ScaleResponse, ScoreContext,
};

/// One broken record invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Violation {
    PlanInvalid { detail: String },
    MissingScaleResponse { abbr: String, rater: Rater },
    UnexpectedScaleResponse { abbr: String, rater: Rater },
    WrongRater { abbr: String },
    ScoreInvalid { abbr: String, detail: String },
    TotalMismatch { abbr: String, stored: i32, recomputed: i32 },
    SeverityMismatch { abbr: String, stored: String, recomputed: String },
    AdjustmentInconsistent { abbr: String },
    EvidenceOutOfRange { abbr: String, item: usize, round: u32, last_round: u32 },
    RoundsNotContiguous { position: usize, found: u32 },
    MissingOpeningAnswer,
    ChiefComplaintMissing { elements: Vec<String> },
    MissingPatientUtterance { round: u32 },
    TraceMismatch { round: u32 },
    NonverbalTooLong { round: u32, tag: String },
    TerminationMismatch { detail: String },
    TerminationUnsound { round: u32, conditions: [bool; 4] },
    DiagnosisInconsistent { status: ClinicalStatus, severity: Severity },
    KeyEvidenceEmpty,
    KeyEvidenceOutOfRange { round: u32, last_round: u32 },
    HonestyEchoMismatch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub record_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replay the agenda from the per-round traces and report the saturation
/// state the Evaluator saw when it closed. `None` without traces.
pub fn reconstruct_saturation(record: &CorpusRecord, repo: &Repository) -> Option<SaturationStatus> {
    if !record.run_meta.trace_internal {
        return None;
    }
    let mut agenda = Agenda::build(&record.plan, repo);
    for t in &record.final_transcript {
        if let (Some(c), Some(p)) = (&t.clinician_trace, &t.patient_trace) {
            let target = c.target?;
            if target >= agenda.len() {
                return None;
            }
            agenda.record(target, t.round, p.strategy.answered(), p.strategy.disclosed());
        }
    }
    let end = record.run_meta.termination.round;
    Some(agenda.saturation(end.saturating_sub(1), record.run_meta.min_rounds, record.run_meta.exhaustion_window))
}

fn check_reports(
    v: &mut Vec<Violation>,
    expected: BTreeSet<String>,
    reports: &BTreeMap<String, ScaleResponse>,
    rater: Rater,
    repo: &Repository,
    ctx: &ScoreContext,
    last_round: u32,
) {
    for abbr in &expected {
        if !reports.contains_key(abbr) {
            v.push(Violation::MissingScaleResponse { abbr: abbr.clone(), rater });
        }
    }
    for (key, r) in reports {
        if !expected.contains(key) || r.scale_abbr != *key {
            v.push(Violation::UnexpectedScaleResponse { abbr: key.clone(), rater });
            continue;
        }
        if r.rater != rater {
            v.push(Violation::WrongRater { abbr: key.clone() });
        }
        let Some(def) = repo.get(key) else { continue };
        let ctx = def.condition_key.as_ref().map(|_| ctx);
        match score_scale(def, &r.item_scores, ctx) {
            Err(e) => v.push(Violation::ScoreInvalid { abbr: key.clone(), detail: e.to_string() }),
            Ok(s) => {
                if s.total != r.total_score {
                    v.push(Violation::TotalMismatch { abbr: key.clone(), stored: r.total_score, recomputed: s.total });
                }
                if s.severity != r.severity {
                    v.push(Violation::SeverityMismatch {
                        abbr: key.clone(),
                        stored: r.severity.clone(),
                        recomputed: s.severity,
                    });
                }
            }
        }
        if let Some(adj) = &r.adjustment {
            let literal = score_scale(def, &adj.literal_item_scores, ctx);
            let consistent = match literal {
                Ok(l) => {
                    l.total == adj.literal_total
                        && l.severity == adj.literal_severity
                        && match adj.direction {
                            AdjustmentDirection::Upward => r.total_score >= l.total,
                            AdjustmentDirection::Downward => r.total_score <= l.total,
                        }
                }
                Err(_) => false,
            };
            if !consistent || rater != Rater::Evaluator {
                v.push(Violation::AdjustmentInconsistent { abbr: key.clone() });
            }
        }
        for (&item, rounds) in &r.dialogue_evidence {
            if let Some(&round) = rounds.iter().find(|&&x| x > last_round) {
                v.push(Violation::EvidenceOutOfRange { abbr: key.clone(), item, round, last_round });
            } else if item >= def.item_count {
                v.push(Violation::ScoreInvalid { abbr: key.clone(), detail: format!("evidence for item {item}") });
            }
        }
    }
}

/// Check every record invariant; an empty violation list means the record
/// is sound.
pub fn validate_record(record: &CorpusRecord, repo: &Repository) -> ValidationReport {
    let mut v = Vec::new();
    let turns = &record.final_transcript;
    let last_round = turns.last().map_or(0, |t| t.round);

    for p in validate_plan(&record.plan, repo) {
        v.push(Violation::PlanInvalid { detail: p.to_string() });
    }
    let ctx: ScoreContext =
        BTreeMap::from([("gender".to_string(), record.profile.demographics.gender.as_str().to_string())]);
    check_reports(&mut v, record.plan.self_report_abbrs(), &record.patient_self_report, Rater::Patient, repo, &ctx, last_round);
    check_reports(&mut v, record.plan.clinician_abbrs(), &record.doctor_clinician_report, Rater::Evaluator, repo, &ctx, last_round);

    for (i, t) in turns.iter().enumerate() {
        if t.round != i as u32 {
            v.push(Violation::RoundsNotContiguous { position: i, found: t.round });
        }
    }
    match turns.get(1).and_then(|t| t.patient_utterance.as_deref()) {
        None => v.push(Violation::MissingOpeningAnswer),
        Some(answer) => {
            let missing = missing_core_elements(&record.profile.chief_complaint, answer);
            if !missing.is_empty() {
                v.push(Violation::ChiefComplaintMissing { elements: missing });
            }
        }
    }
    let trace = record.run_meta.trace_internal;
    for t in turns {
        let terminal = t.round == 0 || t.round == last_round;
        if !terminal && t.patient_utterance.is_none() {
            v.push(Violation::MissingPatientUtterance { round: t.round });
        }
        let patient_ok = t.patient_trace.is_some() == (trace && t.patient_utterance.is_some());
        let clinician_ok = t.clinician_trace.is_some() == (trace && t.round >= 2);
        if !patient_ok || !clinician_ok {
            v.push(Violation::TraceMismatch { round: t.round });
        }
        for tag in &t.nonverbal {
            if tag.chars().count() > NONVERBAL_CUE_MAX_CHARS {
                v.push(Violation::NonverbalTooLong { round: t.round, tag: tag.clone() });
            }
        }
    }

    if record.run_meta.initial_state.is_some() != trace {
        v.push(Violation::TraceMismatch { round: 0 });
    }
    let term = &record.run_meta.termination;
    if term.round != last_round || turns.last().is_some_and(|t| t.patient_utterance.is_some()) {
        v.push(Violation::TerminationMismatch {
            detail: format!("termination round {} but transcript ends at {last_round}", term.round),
        });
    }
    let met = term.conditions.iter().filter(|c| **c).count();
    let replayed = reconstruct_saturation(record, repo);
    if met < 2 || replayed.as_ref().is_some_and(|s| s.conditions() != term.conditions || !s.terminate_ok()) {
        v.push(Violation::TerminationUnsound { round: term.round, conditions: term.conditions });
    }

    let d = &record.diagnosis;
    if (d.status == ClinicalStatus::Healthy) != (d.severity == Severity::NotApplicable) {
        v.push(Violation::DiagnosisInconsistent { status: d.status, severity: d.severity });
    }
    if d.key_evidence.is_empty() {
        v.push(Violation::KeyEvidenceEmpty);
    }
    for e in &d.key_evidence {
        if let Some(&round) = e.rounds.iter().find(|&&r| r > last_round) {
            v.push(Violation::KeyEvidenceOutOfRange { round, last_round });
        }
    }
    if record.honesty_echo != record.profile.honesty {
        v.push(Violation::HonestyEchoMismatch);
    }
    ValidationReport { record_id: record.record_id.clone(), violations: v }
}
