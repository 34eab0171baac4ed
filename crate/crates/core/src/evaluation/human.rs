use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::EvalError;
use crate::session::CorpusRecord;

/// One row of a human rating file: `record_id,rater_id,score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub record_id: String,
    pub rater_id: String,
    pub score: f64,
}

pub fn read_human_scores(path: &Path) -> Result<Vec<HumanScore>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| EvalError::Invalid(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| EvalError::Invalid(format!("{}: {e}", path.display()))))
        .collect()
}

/// Mean score per record over raters.
pub fn mean_by_record(scores: &[HumanScore]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = acc.entry(s.record_id.clone()).or_default();
        e.0 += s.score;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

/// Raters × records matrix for reliability analysis, with row and column
/// labels. Every rater must have scored every record exactly once.
pub fn score_matrix(scores: &[HumanScore]) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>), EvalError> {
    let raters: Vec<String> = scores.iter().map(|s| s.rater_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let items: Vec<String> = scores.iter().map(|s| s.record_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cells: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for s in scores {
        if cells.insert((&s.rater_id, &s.record_id), s.score).is_some() {
            return Err(EvalError::Invalid(format!("rater {} scored {} twice", s.rater_id, s.record_id)));
        }
    }
    let mut matrix = Vec::with_capacity(raters.len());
    for r in &raters {
        let mut row = Vec::with_capacity(items.len());
        for i in &items {
            let v = cells
                .get(&(r.as_str(), i.as_str()))
                .ok_or_else(|| EvalError::InsufficientData(format!("rater {r} did not score {i}")))?;
            row.push(*v);
        }
        matrix.push(row);
    }
    Ok((raters, items, matrix))
}

/// The Evaluator's suspicion at the end of the interview, if traced.
pub fn final_suspicion(record: &CorpusRecord) -> Option<f64> {
    record.final_transcript.iter().rev().find_map(|t| t.clinician_trace.as_ref().map(|c| c.xi))
}
