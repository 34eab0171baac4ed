use serde_json::Value;
use std::collections::BTreeMap;

use super::{contracts, AgentError, AgentIo, AgentParams, Agenda, DeceptionHint, SuspicionTracker};
use crate::backends::{BackendError, RoleTag};
use crate::profiles::{DeceptionStrategy, PatientProfile};
use crate::prompts::bind;
use crate::scales::{
    score_scale, AdjustmentDirection, RatingAdjustment, Rater, Repository, ScaleDefinition, ScalePlan, ScaleResponse,
    ScoreContext,
};
use crate::topics::Topic;

/// Everything the rating phase reads from the finished interview.
pub struct RatingContext<'a> {
    pub repo: &'a Repository,
    pub agenda: &'a Agenda,
    pub transcript: &'a str,
    pub last_round: u32,
}

fn score_context(def: &ScaleDefinition, profile: &PatientProfile) -> Option<ScoreContext> {
    def.condition_key.as_ref().map(|key| {
        let value = match key.as_str() {
            "gender" => profile.demographics.gender.as_str().to_string(),
            _ => String::new(),
        };
        BTreeMap::from([(key.clone(), value)])
    })
}

fn scale_bindings(def: &ScaleDefinition) -> BTreeMap<String, String> {
    bind([
        ("scale_name", def.name.as_str()),
        ("scale_abbr", def.abbr.as_str()),
        ("item_count", def.item_count.to_string().as_str()),
        ("item_min", def.item_range.min.to_string().as_str()),
        ("item_max", def.item_range.max.to_string().as_str()),
    ])
}

/// Turn a contract failure into the most specific error: scoring errors for
/// wrong arity or range, evidence errors for dangling round references.
fn explain(
    err: BackendError,
    def: &ScaleDefinition,
    last_round: Option<u32>,
    ctx: Option<&ScoreContext>,
) -> AgentError {
    if let BackendError::SchemaViolation { last_value: Some(v), .. } = &err {
        if let Ok(scores) = contracts::item_scores(v) {
            if let Err(e) = score_scale(def, &scores, ctx) {
                return e.into();
            }
        }
        if let (Some(last), Ok(ev)) = (last_round, contracts::evidence_map(v)) {
            if let Err(e) = check_evidence(&def.abbr, &ev, def.item_count, last) {
                return e;
            }
        }
    }
    err.into()
}

/// Every cited item must exist and every cited round must be within the
/// transcript.
pub fn check_evidence(
    abbr: &str,
    evidence: &BTreeMap<usize, Vec<u32>>,
    item_count: usize,
    last_round: u32,
) -> Result<(), AgentError> {
    for (&item, rounds) in evidence {
        if item >= item_count {
            return Err(AgentError::Invalid(format!("{abbr}: evidence for item {item}, scale has {item_count}")));
        }
        if let Some(&round) = rounds.iter().find(|r| **r > last_round) {
            return Err(AgentError::EvidenceOutOfRange { abbr: abbr.to_string(), item, round, last_round });
        }
    }
    Ok(())
}

fn interpretation(v: &Value) -> String {
    v.get("interpretation").and_then(Value::as_str).unwrap_or("").to_string()
}

fn merge(mut a: BTreeMap<usize, Vec<u32>>, b: BTreeMap<usize, Vec<u32>>) -> BTreeMap<usize, Vec<u32>> {
    for (item, rounds) in b {
        let e = a.entry(item).or_default();
        e.extend(rounds);
        e.sort_unstable();
        e.dedup();
    }
    a.retain(|_, r| !r.is_empty());
    a
}

/// The patient fills in a self-report scale in character. Items whose topic
/// is concealed are pulled toward the floor, exaggerated ones toward the
/// ceiling, by `self_report_bias` points.
pub fn patient_self_report(
    profile: &PatientProfile,
    def: &ScaleDefinition,
    ctx: &RatingContext<'_>,
    io: &mut AgentIo<'_>,
    params: &AgentParams,
) -> Result<ScaleResponse, AgentError> {
    let score_ctx = score_context(def, profile);
    let contract = contracts::scale_answers(def.item_count, def.item_range.min, def.item_range.max, None);
    let user = format!(
        "Profile: {}. Chief complaint: {}\nInterview transcript:\n{}",
        profile.demographics.summary(),
        profile.chief_complaint,
        ctx.transcript
    );
    let resp = io
        .call(RoleTag::SelfReport, "self_report", scale_bindings(def), user, contract)
        .map_err(|e| explain(e, def, None, score_ctx.as_ref()))?;
    let v = resp.parsed.unwrap_or(Value::Null);
    let raw = contracts::item_scores(&v).map_err(AgentError::Invalid)?;
    let bias = params.self_report_bias;
    let (lo, hi) = (def.item_range.min, def.item_range.max);
    let items: Vec<i32> = raw
        .iter()
        .enumerate()
        .map(|(i, &s)| match profile.honesty.strategy_for(Some(Topic::for_item(def.domain, i))) {
            DeceptionStrategy::Frankness => s,
            DeceptionStrategy::Concealment => (s - bias).max(lo),
            DeceptionStrategy::Exaggeration => (s + bias).min(hi),
        })
        .collect();
    let scored = score_scale(def, &items, score_ctx.as_ref())?;
    Ok(ScaleResponse {
        scale_abbr: def.abbr.clone(),
        item_scores: items,
        total_score: scored.total,
        severity: scored.severity,
        interpretation: interpretation(&v),
        dialogue_evidence: ctx.agenda.evidence_for(def),
        rater: Rater::Patient,
        adjustment: None,
    })
}

/// The Evaluator rates every clinician scale of the plan from the
/// transcript. When the final suspicion exceeds its threshold, each item is
/// shifted by `rating_adjustment` against the detected deception direction
/// and the literal rating is kept alongside.
pub fn evaluator_rate(
    plan: &ScalePlan,
    profile: &PatientProfile,
    ctx: &RatingContext<'_>,
    tracker: &SuspicionTracker,
    io: &mut AgentIo<'_>,
    params: &AgentParams,
) -> Result<Vec<ScaleResponse>, AgentError> {
    let direction = match (tracker.flagged(), tracker.direction()) {
        (true, Some(DeceptionHint::Concealing)) => Some(AdjustmentDirection::Upward),
        (true, Some(DeceptionHint::Exaggerating)) => Some(AdjustmentDirection::Downward),
        _ => None,
    };
    let mut out = Vec::with_capacity(plan.clinician_scales.len());
    for entry in &plan.clinician_scales {
        let def = ctx.repo.get(&entry.abbr).ok_or_else(|| AgentError::MissingScaleResponse(entry.abbr.clone()))?;
        let score_ctx = score_context(def, profile);
        let mut bindings = scale_bindings(def);
        bindings.insert("suspicion_score".into(), format!("{:.2}", tracker.xi));
        let contract =
            contracts::scale_answers(def.item_count, def.item_range.min, def.item_range.max, Some(ctx.last_round));
        let user = format!("Interview transcript:\n{}", ctx.transcript);
        let resp = io
            .call(RoleTag::ClinicianRating, "clinician_rating", bindings, user, contract)
            .map_err(|e| explain(e, def, Some(ctx.last_round), score_ctx.as_ref()))?;
        let v = resp.parsed.unwrap_or(Value::Null);
        let literal = contracts::item_scores(&v).map_err(AgentError::Invalid)?;
        let model_evidence = contracts::evidence_map(&v).map_err(AgentError::Invalid)?;
        check_evidence(&def.abbr, &model_evidence, def.item_count, ctx.last_round)?;
        let literal_scored = score_scale(def, &literal, score_ctx.as_ref())?;

        let (lo, hi) = (def.item_range.min, def.item_range.max);
        let step = params.rating_adjustment;
        let (items, adjustment) = match direction {
            None => (literal, None),
            Some(dir) => {
                let items = literal
                    .iter()
                    .map(|&s| match dir {
                        AdjustmentDirection::Upward => (s + step).min(hi),
                        AdjustmentDirection::Downward => (s - step).max(lo),
                    })
                    .collect();
                let adj = RatingAdjustment {
                    direction: dir,
                    literal_item_scores: literal,
                    literal_total: literal_scored.total,
                    literal_severity: literal_scored.severity.clone(),
                };
                (items, Some(adj))
            }
        };
        let scored = score_scale(def, &items, score_ctx.as_ref())?;
        out.push(ScaleResponse {
            scale_abbr: def.abbr.clone(),
            item_scores: items,
            total_score: scored.total,
            severity: scored.severity,
            interpretation: interpretation(&v),
            dialogue_evidence: merge(model_evidence, ctx.agenda.evidence_for(def)),
            rater: Rater::Evaluator,
            adjustment,
        });
    }
    if out.len() != plan.clinician_scales.len() {
        return Err(AgentError::MissingScaleResponse("clinician plan".into()));
    }
    Ok(out)
}
