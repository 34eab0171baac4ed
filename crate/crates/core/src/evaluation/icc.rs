use super::EvalError;

/// ICC(2,1): two-way random effects, absolute agreement, single rater.
/// `scores` is raters × items.
pub fn icc_two_way(scores: &[Vec<f64>]) -> Result<f64, EvalError> {
    let k = scores.len();
    if k < 2 {
        return Err(EvalError::InsufficientData(format!("{k} raters, need at least 2")));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(EvalError::InsufficientData(format!("{n} items, need at least 2")));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != n) {
        return Err(EvalError::InsufficientData(format!("ragged matrix: row of {} cells, expected {n}", row.len())));
    }
    if scores.iter().flatten().any(|x| !x.is_finite()) {
        return Err(EvalError::InsufficientData("missing or non-finite cell".into()));
    }
    let (kf, nf) = (k as f64, n as f64);
    let grand = scores.iter().flatten().sum::<f64>() / (kf * nf);
    let item_means: Vec<f64> = (0..n).map(|j| scores.iter().map(|r| r[j]).sum::<f64>() / kf).collect();
    let rater_means: Vec<f64> = scores.iter().map(|r| r.iter().sum::<f64>() / nf).collect();

    let ss_items = kf * item_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_raters = nf * rater_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_total: f64 = scores.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    let ss_error = (ss_total - ss_items - ss_raters).max(0.0);

    let ms_items = ss_items / (nf - 1.0);
    let ms_raters = ss_raters / (kf - 1.0);
    let ms_error = ss_error / ((nf - 1.0) * (kf - 1.0));
    let denom = ms_items + (kf - 1.0) * ms_error + kf * (ms_raters - ms_error) / nf;
    if denom <= 0.0 {
        return Err(EvalError::InsufficientData("no variance across items".into()));
    }
    Ok((ms_items - ms_error) / denom)
}
