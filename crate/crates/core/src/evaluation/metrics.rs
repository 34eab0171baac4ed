use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{ConfusionMatrix, EvalError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub kappa: f64,
    pub mcc: f64,
    pub n: u64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Per-class precision/recall/F1 (0/0 taken as 0), accuracy, macro and
/// support-weighted F1, Cohen's unweighted kappa and the multiclass
/// Matthews coefficient in covariance form.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let k = cm.labels.len();
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::DegenerateMatrix);
    }
    let nf = n as f64;
    let row: Vec<f64> = (0..k).map(|i| cm.counts[i].iter().sum::<u64>() as f64).collect();
    let col: Vec<f64> = (0..k).map(|j| cm.counts.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let diag: Vec<f64> = (0..k).map(|i| cm.counts[i][i] as f64).collect();
    let correct: f64 = diag.iter().sum();

    let mut per_class = BTreeMap::new();
    let mut f1s = Vec::with_capacity(k);
    for i in 0..k {
        let precision = ratio(diag[i], col[i]);
        let recall = ratio(diag[i], row[i]);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        f1s.push(f1);
        per_class.insert(cm.labels[i].clone(), ClassMetrics { precision, recall, f1, support: row[i] as u64 });
    }
    let accuracy = correct / nf;
    let macro_f1 = f1s.iter().sum::<f64>() / k as f64;
    let weighted_f1 = (0..k).map(|i| f1s[i] * row[i]).sum::<f64>() / nf;

    let pe: f64 = (0..k).map(|i| row[i] * col[i]).sum::<f64>() / (nf * nf);
    let kappa = if (1.0 - pe).abs() < f64::EPSILON {
        if accuracy == 1.0 { 1.0 } else { 0.0 }
    } else {
        (accuracy - pe) / (1.0 - pe)
    };

    let sum_pt: f64 = (0..k).map(|i| row[i] * col[i]).sum();
    let sum_p2: f64 = col.iter().map(|c| c * c).sum();
    let sum_t2: f64 = row.iter().map(|r| r * r).sum();
    let denom = ((nf * nf - sum_p2) * (nf * nf - sum_t2)).sqrt();
    let mcc = if denom == 0.0 {
        if accuracy == 1.0 { 1.0 } else { 0.0 }
    } else {
        (correct * nf - sum_pt) / denom
    };
    Ok(MetricsReport { per_class, accuracy, macro_f1, weighted_f1, kappa, mcc, n })
}
