use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{classification_metrics, confusion, ConfusionMatrix, EvalError, MetricsReport};
use crate::profiles::{ClinicalStatus, Severity};
use crate::session::CorpusRecord;

/// Errors that cross the healthy/graded boundary and so cannot sit in the
/// severity matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Leakage {
    /// Healthy ground truth, graded prediction: counts by predicted grade.
    pub healthy_graded: BTreeMap<String, u64>,
    /// Non-healthy ground truth judged NotApplicable.
    pub graded_not_applicable: u64,
    pub healthy_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub status_matrix: ConfusionMatrix,
    pub status: MetricsReport,
    /// `None` when no non-healthy case has a graded prediction.
    pub severity_matrix: Option<ConfusionMatrix>,
    pub severity: Option<MetricsReport>,
    pub leakage: Leakage,
}

/// Status agreement over all four labels; severity agreement over the
/// graded labels for non-healthy ground truth.
pub fn diagnostic_alignment(records: &[CorpusRecord]) -> Result<AlignmentReport, EvalError> {
    let status_labels: Vec<&str> = ClinicalStatus::ALL.iter().map(|s| s.as_str()).collect();
    let grade_labels: Vec<&str> = Severity::GRADED.iter().map(|s| s.as_str()).collect();
    let mut st = (Vec::new(), Vec::new());
    let mut sev = (Vec::new(), Vec::new());
    let mut leakage = Leakage::default();
    for r in records {
        let truth = r.profile.ground_truth;
        if !truth.is_consistent() {
            return Err(EvalError::MissingGroundTruth(r.record_id.clone()));
        }
        let pred = &r.diagnosis;
        st.0.push(truth.status.as_str());
        st.1.push(pred.status.as_str());
        if truth.status == ClinicalStatus::Healthy {
            leakage.healthy_total += 1;
            if pred.severity != Severity::NotApplicable {
                *leakage.healthy_graded.entry(pred.severity.as_str().to_string()).or_default() += 1;
            }
        } else if pred.severity == Severity::NotApplicable {
            leakage.graded_not_applicable += 1;
        } else {
            sev.0.push(truth.severity.as_str());
            sev.1.push(pred.severity.as_str());
        }
    }
    let status_matrix = confusion(&st.0, &st.1, &status_labels)?;
    let status = classification_metrics(&status_matrix)?;
    let (severity_matrix, severity) = if sev.0.is_empty() {
        (None, None)
    } else {
        let m = confusion(&sev.0, &sev.1, &grade_labels)?;
        let rep = classification_metrics(&m)?;
        (Some(m), Some(rep))
    };
    Ok(AlignmentReport { status_matrix, status, severity_matrix, severity, leakage })
}
