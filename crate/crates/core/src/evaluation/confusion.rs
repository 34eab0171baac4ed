use serde::{Deserialize, Serialize};

use super::EvalError;

/// Rows are truth, columns prediction, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<ConfusionMatrix, EvalError> {
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(EvalError::Invalid("confusion matrix must be square over the labels".into()));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion<S: AsRef<str>>(truth: &[S], pred: &[S], label_order: &[&str]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    let index = |l: &str| label_order.iter().position(|x| *x == l).ok_or_else(|| EvalError::UnknownLabel(l.to_string()));
    let k = label_order.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (t, p) in truth.iter().zip(pred) {
        counts[index(t.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix { labels: label_order.iter().map(|s| s.to_string()).collect(), counts })
}
