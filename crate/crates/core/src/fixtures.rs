//! Deterministic scripted fixtures: synthetic profiles, matching scripts,
//! the mixed-honesty batch and the ablation family. Used by the test
//! suites and written to disk by `intake fixtures`.

use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use crate::agents::{AgentParams, EvaluatorMode};
use crate::backends::{Backends, ScriptEntry, ScriptOptions, ScriptedBackend};
use crate::profiles::{
    ClinicalStatus, DeceptionStrategy, Demographics, Gender, GroundTruth, HonestyState, PatientProfile, RiskLevel,
    Severity,
};
use crate::scales::{Administration, Grade, PlanEntry, Repository, ScaleDefinition, ScaleDomain, ScalePlan};

/// Evaluator line that the cue lexicon reads as pure empathy.
pub const EMPATHIC_CHAT: &str = "Many people feel this way; take your time. Could you tell me about {{topic_description}}?";
/// Evaluator line with no cue words: the passive arm voices its guidance.
pub const NEUTRAL_CHAT: &str = "{{guidance_for_chat}}";

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub id: String,
    pub status: ClinicalStatus,
    pub severity: Severity,
    pub strategy: DeceptionStrategy,
    pub gender: Gender,
    pub age: i32,
}

fn complaint(status: ClinicalStatus) -> &'static str {
    match status {
        ClinicalStatus::Healthy => "my GP asked me to come in for a check-up, I feel fine",
        ClinicalStatus::Depression => "can't sleep, everything feels flat",
        ClinicalStatus::Anxiety => "I worry all the time, my heart races",
        ClinicalStatus::Ptsd => "nightmares since the accident, I feel on guard",
    }
}

fn history(status: ClinicalStatus) -> &'static str {
    match status {
        ClinicalStatus::Healthy => "No lasting symptoms; ordinary stress at work.",
        ClinicalStatus::Depression => "Low mood and poor sleep for three months after a job loss; lost interest in hobbies.",
        ClinicalStatus::Anxiety => "Persistent worry for a year, tension, restless nights and racing heart before meetings.",
        ClinicalStatus::Ptsd => "Car accident eight months ago; intrusive memories, avoids driving, startles easily.",
    }
}

pub fn fixture_profile(spec: &FixtureSpec) -> PatientProfile {
    let honesty = HonestyState {
        deception_strategy: spec.strategy,
        active_features: match spec.strategy {
            DeceptionStrategy::Frankness => vec![],
            DeceptionStrategy::Concealment => vec!["C01".into()],
            DeceptionStrategy::Exaggeration => vec!["E01".into()],
        },
        topic_overrides: BTreeMap::new(),
    };
    PatientProfile {
        id: spec.id.clone(),
        demographics: Demographics {
            age: spec.age,
            gender: spec.gender,
            occupation: "office clerk".into(),
            living_status: "lives alone".into(),
        },
        chief_complaint: complaint(spec.status).into(),
        symptom_history: history(spec.status).into(),
        treatment_history: "None.".into(),
        psychosocial_factors: BTreeMap::from([("stressors".into(), "work pressure".into())]),
        risk_flags: BTreeMap::from([("suicide".into(), RiskLevel::Denied)]),
        risk_presentation: BTreeMap::new(),
        behavior_tendency: "reserved".into(),
        communication_style: "short answers".into(),
        affect_baseline: "flat".into(),
        psychometrics: BTreeMap::new(),
        ground_truth: GroundTruth { status: spec.status, severity: spec.severity },
        honesty,
    }
}

pub fn domain_of(status: ClinicalStatus) -> ScaleDomain {
    match status {
        ClinicalStatus::Healthy | ClinicalStatus::Depression => ScaleDomain::Depression,
        ClinicalStatus::Anxiety => ScaleDomain::Anxiety,
        ClinicalStatus::Ptsd => ScaleDomain::Ptsd,
    }
}

/// The domain's default clinician + self-report pair.
pub fn default_plan(status: ClinicalStatus, repo: &Repository) -> ScalePlan {
    let d = domain_of(status);
    let pick = |admin| {
        let def = repo.first_of(d, admin).expect("bundled repository covers primary domains");
        vec![PlanEntry::new(&def.abbr, "fixture")]
    };
    ScalePlan {
        clinician_scales: pick(Administration::ClinicianRated),
        self_report_scales: pick(Administration::SelfReport),
    }
}

fn grade_of(severity: Severity) -> Grade {
    match severity {
        Severity::NotApplicable => Grade::Normal,
        Severity::Mild => Grade::Mild,
        Severity::Moderate => Grade::Moderate,
        Severity::Severe => Grade::Severe,
    }
}

/// Item answers whose total sits in the middle of the band for `severity`
/// (for cut-off-only scales, the positive band when symptomatic).
pub fn items_for(def: &ScaleDefinition, severity: Severity) -> Vec<i32> {
    let g = grade_of(severity);
    let idx = def
        .bands
        .iter()
        .position(|b| b.grade == Some(g))
        .or_else(|| (g != Grade::Normal).then(|| def.bands.iter().position(|b| b.grade.is_none())).flatten())
        .unwrap_or(0);
    let lo = def.bands[idx].threshold;
    let hi = def.bands.get(idx + 1).map_or(def.max_total(), |b| b.threshold - 1);
    let target = (lo + (hi - lo) / 2).clamp(def.min_total(), def.max_total());
    let n = def.item_count as i32;
    let (base, extra) = (target / n, target % n);
    (0..n).map(|i| base + i32::from(i < extra)).collect()
}

/// Reasoning-step reply for a given honesty disposition.
pub fn evaluator_cot_reply(strategy: DeceptionStrategy) -> Value {
    let (score, hint, flags): (f64, &str, Vec<&str>) = match strategy {
        DeceptionStrategy::Frankness => (0.1, "None", vec![]),
        DeceptionStrategy::Concealment => (0.8, "Concealing", vec!["affect contradicts content"]),
        DeceptionStrategy::Exaggeration => (0.8, "Exaggerating", vec!["symptoms inflated beyond history"]),
    };
    json!({
        "reasoning_step": "Comparing the answer with the history and observed affect.",
        "suspicion_score": score,
        "next_move_type": if score > 0.5 { "Investigate" } else { "Proceed" },
        "target_topic": "{{next_topic}}",
        "guidance_for_chat": "Ask about {{next_topic}} in plain words.",
        "inconsistency_flags": flags,
        "deception_hint": hint
    })
}

pub struct ScriptStyle {
    pub evaluator_chat: String,
    pub evaluator_cot: Value,
}

/// A complete script for one profile and plan. Appraisal runs in lexicon
/// mode; scale answers follow the ground-truth severity.
pub fn session_script(profile: &PatientProfile, plan: &ScalePlan, repo: &Repository, style: &ScriptStyle) -> ScriptedBackend {
    let to_names = |entries: &[PlanEntry]| -> Vec<Value> {
        entries.iter().map(|e| json!({"name": e.abbr, "reason": "fixture"})).collect()
    };
    let mut entries: BTreeMap<String, ScriptEntry> = BTreeMap::new();
    let mut put = |k: String, e: ScriptEntry| {
        entries.insert(k, e);
    };
    put(
        "AssessorCoT/*".into(),
        ScriptEntry::json(json!({
            "clinician_scales": to_names(&plan.clinician_scales),
            "self_report_scales": to_names(&plan.self_report_scales)
        })),
    );
    put("PatientChat/0".into(), ScriptEntry::text("Well... {{chief_complaint}}. That's why I'm here."));
    put("PatientChat/*".into(), ScriptEntry::text("Hmm. {{strategy_directive}}"));
    put("EvaluatorCoT/*".into(), ScriptEntry::json(style.evaluator_cot.clone()));
    put("EvaluatorChat/*".into(), ScriptEntry::text(style.evaluator_chat.clone()));
    let truth = profile.ground_truth.severity;
    for (i, e) in plan.self_report_scales.iter().enumerate() {
        let def = repo.get(&e.abbr).expect("plan scales exist");
        put(
            format!("SelfReport/{i}"),
            ScriptEntry::json(json!({"item_scores": items_for(def, truth), "interpretation": "Answered as I feel."})),
        );
    }
    for (i, e) in plan.clinician_scales.iter().enumerate() {
        let def = repo.get(&e.abbr).expect("plan scales exist");
        put(
            format!("ClinicianRating/{i}"),
            ScriptEntry::json(json!({
                "item_scores": items_for(def, truth),
                "interpretation": "Rated from the interview.",
                "dialogue_evidence": {"0": [1]}
            })),
        );
    }
    put(
        "Diagnostician/*".into(),
        ScriptEntry::json(json!({
            "final_diagnosis": {"status": profile.ground_truth.status.as_str(), "severity": truth.as_str()},
            "reasoning": {
                "symptom_match": "Presentation matches the rated scales.",
                "discrepancy_resolution": "",
                "key_evidence": ["Turn 1: chief complaint stated", "Turn 2: first symptom probe answered"]
            }
        })),
    );
    put(
        "Rater/*".into(),
        ScriptEntry::json(json!({
            "Discourse_Organicness": {"score": 6, "reason": "Some hesitation."},
            "Linguistic_Texture": {"score": 5, "reason": "Mostly spoken register."},
            "Emotional_Granularity": {"score": 6, "reason": "Mixed affect."},
            "Defense_Resistance": {"score": 7, "reason": "Minimizing answers."},
            "Interaction_Dynamics": {"score": 6, "reason": "Adaptive probing."}
        })),
    );
    ScriptedBackend::new(&profile.id, entries, ScriptOptions { lexicon_appraisal: true })
}

/// Backends for a mixed-batch profile: empathic evaluator, suspicion keyed
/// to the profile's honesty state.
pub fn scripted_backends(profile: &PatientProfile, repo: &Repository) -> Backends {
    let plan = default_plan(profile.ground_truth.status, repo);
    let style = ScriptStyle {
        evaluator_chat: EMPATHIC_CHAT.into(),
        evaluator_cot: evaluator_cot_reply(profile.honesty.deception_strategy),
    };
    Backends::single(Arc::new(session_script(profile, &plan, repo, &style)))
}

/// `n` profiles cycling through statuses, severities, genders and honesty
/// states (every third Concealment, every fifth Exaggeration, rest Frank).
pub fn mixed_profiles(n: usize) -> Vec<PatientProfile> {
    let statuses = [ClinicalStatus::Depression, ClinicalStatus::Anxiety, ClinicalStatus::Ptsd, ClinicalStatus::Healthy];
    (0..n)
        .map(|i| {
            let status = statuses[i % 4];
            let severity = if status == ClinicalStatus::Healthy { Severity::NotApplicable } else { Severity::GRADED[(i / 4) % 3] };
            let strategy = match i % 15 {
                k if k % 3 == 1 => DeceptionStrategy::Concealment,
                k if k % 5 == 2 => DeceptionStrategy::Exaggeration,
                _ => DeceptionStrategy::Frankness,
            };
            let gender = if i % 2 == 0 { Gender::Female } else { Gender::Male };
            fixture_profile(&FixtureSpec { id: format!("fx-{i:03}"), status, severity, strategy, gender, age: 20 + (i as i32 * 7) % 45 })
        })
        .collect()
}

/// A concealing moderate-depression patient interviewed with MADRS + PHQ-9.
pub fn ablation_profile(index: usize) -> PatientProfile {
    fixture_profile(&FixtureSpec {
        id: format!("abl-{index:02}"),
        status: ClinicalStatus::Depression,
        severity: Severity::Moderate,
        strategy: DeceptionStrategy::Concealment,
        gender: if index % 2 == 0 { Gender::Female } else { Gender::Male },
        age: 30 + index as i32,
    })
}

pub fn ablation_plan() -> ScalePlan {
    ScalePlan {
        clinician_scales: vec![PlanEntry::new("MADRS", "fixture")],
        self_report_scales: vec![PlanEntry::new("PHQ-9", "fixture")],
    }
}

/// One ablation arm: agent parameters plus the per-profile script.
pub struct FixtureArm {
    pub name: String,
    pub params: AgentParams,
    pub style: ScriptStyle,
}

/// Reasoning arm (empathic questions, low suspicion) and passive arm
/// (fixed item order voiced verbatim). Initial state jitter makes seeds
/// matter.
pub fn ablation_arms() -> (FixtureArm, FixtureArm) {
    let base = AgentParams { initial_jitter: 0.05, ..AgentParams::default() };
    let cot = FixtureArm {
        name: "cot".into(),
        params: base.clone(),
        style: ScriptStyle { evaluator_chat: EMPATHIC_CHAT.into(), evaluator_cot: evaluator_cot_reply(DeceptionStrategy::Frankness) },
    };
    let passive = FixtureArm {
        name: "passive".into(),
        params: AgentParams { evaluator_mode: EvaluatorMode::Passive, ..base },
        style: ScriptStyle { evaluator_chat: NEUTRAL_CHAT.into(), evaluator_cot: json!({}) },
    };
    (cot, passive)
}

pub fn arm_backends(arm: &FixtureArm, profile: &PatientProfile, repo: &Repository) -> Backends {
    Backends::single(Arc::new(session_script(profile, &ablation_plan(), repo, &arm.style)))
}

fn write_pretty(path: &Path, value: &impl serde::Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

fn write_profile_and_script(dir: &Path, scripts: &Path, profile: &PatientProfile, script: &ScriptedBackend) -> io::Result<()> {
    write_pretty(&dir.join("profiles").join(format!("{}.json", profile.id)), profile)?;
    write_pretty(&scripts.join(format!("{}.json", profile.id)), &script.to_json())
}

/// A runnable scripted corpus: `profiles/`, `scripts/` (one script per
/// profile) and `config.toml`.
pub fn write_mixed_fixtures(dir: &Path, n: usize, repo: &Repository) -> io::Result<()> {
    let scripts = dir.join("scripts");
    fs::create_dir_all(dir.join("profiles"))?;
    fs::create_dir_all(&scripts)?;
    for p in mixed_profiles(n) {
        let style = ScriptStyle {
            evaluator_chat: EMPATHIC_CHAT.into(),
            evaluator_cot: evaluator_cot_reply(p.honesty.deception_strategy),
        };
        let script = session_script(&p, &default_plan(p.ground_truth.status, repo), repo, &style);
        write_profile_and_script(dir, &scripts, &p, &script)?;
    }
    fs::write(dir.join("config.toml"), "seed = 1\n\n[backend]\nkind = \"scripted\"\nscript_dir = \"scripts\"\n")
}

/// The ablation family on disk: `profiles/`, `scripts/<arm>/`, one
/// `<arm>.toml` per arm and a shared `config.toml`.
pub fn write_ablation_fixtures(dir: &Path, n: usize, repo: &Repository) -> io::Result<()> {
    fs::create_dir_all(dir.join("profiles"))?;
    let (cot, passive) = ablation_arms();
    for arm in [&cot, &passive] {
        let scripts = dir.join("scripts").join(&arm.name);
        fs::create_dir_all(&scripts)?;
        for i in 0..n {
            let p = ablation_profile(i);
            let script = session_script(&p, &ablation_plan(), repo, &arm.style);
            write_profile_and_script(dir, &scripts, &p, &script)?;
        }
        let agent = toml::to_string(&arm.params).map_err(io::Error::other)?;
        let text = format!(
            "[agent]\n{agent}\n[backend]\nkind = \"scripted\"\nscript_dir = \"scripts/{}\"\n",
            arm.name
        );
        fs::write(dir.join(format!("{}.toml", arm.name)), text)?;
    }
    fs::write(dir.join("config.toml"), "seed = 1\n")
}
