use std::collections::BTreeMap;

use super::{Grade, ScaleDefinition, ScaleError, ScoringMode};

/// Extra inputs some instruments need (e.g. `gender` for gender-specific
/// cut-offs).
pub type ScoreContext = BTreeMap<String, String>;

pub const EXTERNAL_ALGORITHM_LABEL: &str = "requires-external-algorithm";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scored {
    pub total: i32,
    pub severity: String,
    pub grade: Option<Grade>,
}

/// Validate item scores against the definition and map the total to a band.
pub fn score_scale(
    def: &ScaleDefinition,
    item_scores: &[i32],
    context: Option<&ScoreContext>,
) -> Result<Scored, ScaleError> {
    if item_scores.len() != def.item_count {
        return Err(ScaleError::ItemCountMismatch {
            abbr: def.abbr.clone(),
            expected: def.item_count,
            found: item_scores.len(),
        });
    }
    let range = def.item_range;
    if let Some((index, &value)) = item_scores
        .iter()
        .enumerate()
        .find(|(_, v)| **v < range.min || **v > range.max)
    {
        return Err(ScaleError::ItemOutOfRange {
            abbr: def.abbr.clone(),
            index,
            value,
            min: range.min,
            max: range.max,
        });
    }
    let total: i32 = item_scores.iter().sum();
    let band = |b: &super::Band| Scored { total, severity: b.label.clone(), grade: b.grade };
    let scored = match def.scoring_mode {
        ScoringMode::SumBands | ScoringMode::Classification => def
            .bands
            .iter()
            .rev()
            .find(|b| b.threshold <= total)
            .or(def.bands.first())
            .map(band),
        ScoringMode::ReverseBands => def
            .bands
            .iter()
            .rev()
            .find(|b| b.threshold >= total)
            .or(def.bands.first())
            .map(band),
        ScoringMode::ConditionalCutoff => {
            let key = def.condition_key.clone().unwrap_or_default();
            let missing = || ScaleError::MissingContext { abbr: def.abbr.clone(), key: key.clone() };
            let value = context.and_then(|c| c.get(&key)).ok_or_else(missing)?;
            let cutoff = def.conditional_cutoffs.get(value).ok_or_else(missing)?;
            let label = if total >= *cutoff { "Positive" } else { "Negative" };
            Some(Scored { total, severity: label.to_string(), grade: None })
        }
        ScoringMode::AlgorithmStub => Some(Scored {
            total,
            severity: EXTERNAL_ALGORITHM_LABEL.to_string(),
            grade: None,
        }),
    };
    scored.ok_or_else(|| ScaleError::InvalidDefinition(format!("{}: no bands", def.abbr)))
}
