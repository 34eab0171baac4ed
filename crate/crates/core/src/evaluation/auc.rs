use serde::{Deserialize, Serialize};

use super::{pearson_p_value, EvalError};

/// Area under the ROC curve via the rank-sum statistic with midranks for
/// ties: P(score of a positive > score of a negative) + half the tie mass.
pub fn rank_auc(scores: &[f64], positive: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != positive.len() {
        return Err(EvalError::LengthMismatch(scores.len(), positive.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::Invalid("NaN score".into()));
    }
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Ranks are doubled so every midrank is an integer.
    let mut rank2 = vec![0u64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            rank2[k] = mid2;
        }
        i = j + 1;
    }
    let r2: u64 = (0..scores.len()).filter(|&k| positive[k]).map(|k| rank2[k]).sum();
    let np = n_pos as u64;
    // 2U = 2R - np(np+1); U counts wins plus half ties.
    let u2 = r2 - np * (np + 1);
    Ok(u2 as f64 / 2.0 / (n_pos * n_neg) as f64)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::InsufficientData("need at least two pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::InsufficientData("a series has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionAlignment {
    pub n: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub auc: f64,
    pub n_unreliable: usize,
    pub n_reliable: usize,
}

/// Agreement between system suspicion scores in [0, 1] and human
/// unreliability ratings on a 1-5 scale. For the AUC, ratings of 3 and
/// above count as unreliable.
pub fn suspicion_alignment(system: &[f64], human: &[f64]) -> Result<SuspicionAlignment, EvalError> {
    if system.len() != human.len() {
        return Err(EvalError::LengthMismatch(system.len(), human.len()));
    }
    if system.len() < 3 {
        return Err(EvalError::InsufficientData(format!("{} pairs, need at least 3", system.len())));
    }
    if let Some(s) = system.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(EvalError::Invalid(format!("system score {s} outside [0, 1]")));
    }
    if let Some(h) = human.iter().find(|h| !(1.0..=5.0).contains(*h)) {
        return Err(EvalError::Invalid(format!("human score {h} outside [1, 5]")));
    }
    let unreliable: Vec<bool> = human.iter().map(|h| *h >= 3.0).collect();
    let auc = rank_auc(system, &unreliable)?;
    let r = pearson(system, human)?;
    let n_unreliable = unreliable.iter().filter(|u| **u).count();
    Ok(SuspicionAlignment {
        n: system.len(),
        pearson_r: r,
        pearson_p: pearson_p_value(r, system.len())?,
        auc,
        n_unreliable,
        n_reliable: system.len() - n_unreliable,
    })
}
