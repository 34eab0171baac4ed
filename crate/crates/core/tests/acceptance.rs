//! Acceptance suite. Each test prints one `criterion N PASS|FAIL` line and
//! then asserts, so `cargo test --test acceptance -- --nocapture
//! --test-threads=1` gives a readable verdict table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use intake_core::agents::{
    decide, diagnose, update_state, AgentIo, AgentParams, AgentState, Couplings, Decision, DiagnoseInput,
    ResolutionRule, SaturationStatus, StimulusAppraisal, SuspicionTracker,
};
use intake_core::backends::{BackendError, Backends, ScriptEntry, ScriptOptions, ScriptedBackend};
use intake_core::evaluation::{
    ablation_run, classification_metrics, icc_two_way, rank_auc, stratified_sample, write_delta_trust_csv,
    write_trust_by_round_csv, AblationArm, ConfusionMatrix,
};
use intake_core::fixtures::{
    ablation_arms, ablation_profile, arm_backends, fixture_profile, mixed_profiles, scripted_backends, FixtureSpec,
};
use intake_core::profiles::{ClinicalStatus, DeceptionStrategy, FeatureBank, Gender, PatientProfile, Severity};
use intake_core::prompts::PromptSet;
use intake_core::scales::{
    score_scale, AdjustmentDirection, PlanEntry, Rater, Repository, ScaleDefinition, ScalePlan, ScaleResponse,
    ScoringMode,
};
use intake_core::session::{
    public_view, read_corpus, run_batch, validate_record, write_corpus, CorpusRecord, SessionEnv, SessionParams,
};

fn verdict(n: u32, title: &str, pass: bool, detail: &str) {
    println!("criterion {n:>2} {}: {title} ({detail})", if pass { "PASS" } else { "FAIL" });
}

struct World {
    repo: Repository,
    prompts: PromptSet,
    bank: FeatureBank,
}

impl World {
    fn new() -> World {
        World { repo: Repository::bundled(), prompts: PromptSet::bundled(), bank: FeatureBank::bundled() }
    }

    fn env(&self) -> SessionEnv<'_> {
        SessionEnv {
            repo: &self.repo,
            prompts: &self.prompts,
            bank: &self.bank,
            agent: AgentParams::default(),
            session: SessionParams::default(),
            config_hash: "acceptance".into(),
        }
    }
}

// ---------------------------------------------------------------- 1

struct Brute {
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    accuracy: f64,
    macro_f1: f64,
    weighted_f1: f64,
    kappa: f64,
    mcc: f64,
}

/// Metrics recomputed case by case from the expanded label vectors.
fn brute_force(truth: &[usize], pred: &[usize], k: usize) -> Brute {
    let n = truth.len() as f64;
    let mut precision = vec![0.0; k];
    let mut recall = vec![0.0; k];
    let mut f1 = vec![0.0; k];
    let mut support = vec![0.0; k];
    for c in 0..k {
        let tp = (0..truth.len()).filter(|&i| truth[i] == c && pred[i] == c).count() as f64;
        let fp = (0..truth.len()).filter(|&i| truth[i] != c && pred[i] == c).count() as f64;
        let fnn = (0..truth.len()).filter(|&i| truth[i] == c && pred[i] != c).count() as f64;
        support[c] = tp + fnn;
        precision[c] = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        recall[c] = if tp + fnn > 0.0 { tp / (tp + fnn) } else { 0.0 };
        f1[c] = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fnn) } else { 0.0 };
    }
    let agree = (0..truth.len()).filter(|&i| truth[i] == pred[i]).count() as f64 / n;
    let chance: f64 = (0..k)
        .map(|c| {
            let t = truth.iter().filter(|&&x| x == c).count() as f64 / n;
            let p = pred.iter().filter(|&&x| x == c).count() as f64 / n;
            t * p
        })
        .sum();
    let kappa = if chance == 1.0 { if agree == 1.0 { 1.0 } else { 0.0 } } else { (agree - chance) / (1.0 - chance) };
    // MCC as the correlation of one-hot encodings.
    let onehot = |v: &[usize]| -> Vec<Vec<f64>> {
        v.iter().map(|&x| (0..k).map(|c| if c == x { 1.0 } else { 0.0 }).collect()).collect()
    };
    let (x, y) = (onehot(truth), onehot(pred));
    let mean = |m: &Vec<Vec<f64>>, c: usize| m.iter().map(|r| r[c]).sum::<f64>() / n;
    let cov = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> f64 {
        (0..k)
            .map(|c| {
                let (ma, mb) = (mean(a, c), mean(b, c));
                a.iter().zip(b).map(|(ra, rb)| (ra[c] - ma) * (rb[c] - mb)).sum::<f64>()
            })
            .sum()
    };
    let denom = (cov(&x, &x) * cov(&y, &y)).sqrt();
    let mcc = if denom == 0.0 { if agree == 1.0 { 1.0 } else { 0.0 } } else { cov(&x, &y) / denom };
    Brute {
        accuracy: agree,
        macro_f1: f1.iter().sum::<f64>() / k as f64,
        weighted_f1: (0..k).map(|c| f1[c] * support[c]).sum::<f64>() / n,
        precision,
        recall,
        f1,
        kappa,
        mcc,
    }
}

#[test]
fn criterion_01_metric_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..60 {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(1..=200);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> =
            truth.iter().map(|&t| if rng.random_bool(0.5) { t } else { rng.random_range(0..k) }).collect();
        let labels: Vec<String> = (0..k).map(|c| format!("L{c}")).collect();
        let mut counts = vec![vec![0u64; k]; k];
        for (t, p) in truth.iter().zip(&pred) {
            counts[*t][*p] += 1;
        }
        let m = classification_metrics(&ConfusionMatrix::from_counts(labels.clone(), counts).unwrap()).unwrap();
        let b = brute_force(&truth, &pred, k);
        let mut diffs = vec![
            m.accuracy - b.accuracy,
            m.macro_f1 - b.macro_f1,
            m.weighted_f1 - b.weighted_f1,
            m.kappa - b.kappa,
            m.mcc - b.mcc,
        ];
        for (c, l) in labels.iter().enumerate() {
            let pc = &m.per_class[l];
            diffs.extend([pc.precision - b.precision[c], pc.recall - b.recall[c], pc.f1 - b.f1[c]]);
        }
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
        cases += 1;
    }
    let mut diagonal_ok = true;
    for k in 2..=6usize {
        let counts: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 3 + i as u64 } else { 0 }).collect()).collect();
        let labels = (0..k).map(|c| c.to_string()).collect();
        let m = classification_metrics(&ConfusionMatrix::from_counts(labels, counts).unwrap()).unwrap();
        diagonal_ok &= m.kappa == 1.0 && m.mcc == 1.0;
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && diagonal_ok && elapsed < Duration::from_secs(1);
    verdict(1, "metric oracle equivalence", pass, &format!("{cases} matrices, max |d| = {worst:.1e}, diagonal ok = {diagonal_ok}, {elapsed:.2?}"));
    assert!(pass);
}

// ---------------------------------------------------------------- 2

fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                den += 1.0;
                num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

#[test]
fn criterion_02_auc_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut sets = 0;
    while sets < 100 {
        let n = rng.random_range(2..=50);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..20u8)) / 19.0).collect();
        let positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if positive.iter().all(|p| *p) || positive.iter().all(|p| !*p) {
            continue;
        }
        sets += 1;
        if rank_auc(&scores, &positive).unwrap() != pair_count_auc(&scores, &positive) {
            mismatches += 1;
        }
    }
    let scores: Vec<f64> = (0..40).map(|_| f64::from(rng.random_range(0..20u8)) / 19.0).collect();
    let positive: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
    let base = rank_auc(&scores, &positive).unwrap();
    let mut transform_mismatches = 0;
    for _ in 0..20 {
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-5.0..5.0);
        let c = rng.random_range(0.2..3.0);
        let shape = rng.random_range(0..3);
        let f = |x: f64| match shape {
            0 => a * x + b,
            1 => a * (c * x).exp() + b,
            _ => a * (x + 0.5).powf(c) + b,
        };
        let mapped: Vec<f64> = scores.iter().map(|x| f(*x)).collect();
        if rank_auc(&mapped, &positive).unwrap() != base {
            transform_mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && transform_mismatches == 0 && elapsed < Duration::from_secs(5);
    verdict(2, "AUC exactness", pass, &format!("{sets} sets, {mismatches} oracle mismatches, {transform_mismatches} transform mismatches, {elapsed:.2?}"));
    assert!(pass);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_trust_stress_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zero = Couplings { pressure_trust: 0.0, empathy_stress: 0.0 };
    let psi = |e: f64, p: f64| StimulusAppraisal { empathy: e, pressure: p, rationale: String::new() };
    let mut out_of_range = 0;
    let mut monotone_violations = 0;
    for _ in 0..10_000 {
        let mut s = AgentState::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let lambda = rng.random_range(0.0..=0.5);
        let couplings = Couplings { pressure_trust: rng.random_range(0.0..=1.0), empathy_stress: rng.random_range(0.0..=1.0) };
        for _ in 0..rng.random_range(1..30) {
            let a = psi(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let next = update_state(s, &a, lambda, couplings);
            if !(0.0..=1.0).contains(&next.trust) || !(0.0..=1.0).contains(&next.stress) {
                out_of_range += 1;
            }
            let free = update_state(s, &psi(a.empathy.abs(), a.pressure.abs()), lambda, zero);
            if free.trust < s.trust || free.stress < s.stress {
                monotone_violations += 1;
            }
            let more = update_state(s, &psi((a.empathy + 0.3).min(1.0), a.pressure), lambda, zero);
            if more.trust < update_state(s, &a, lambda, zero).trust {
                monotone_violations += 1;
            }
            s = next;
        }
    }
    let hand = update_state(AgentState::new(0.5, 0.5), &psi(1.0, 0.0), 0.1, zero);
    let hand_ok = (hand.trust - 0.6).abs() <= 1e-12 && (hand.stress - 0.5).abs() <= 1e-12;
    let pass = out_of_range == 0 && monotone_violations == 0 && hand_ok;
    verdict(3, "trust/stress state machine", pass, &format!("1e4 sequences, {out_of_range} out of range, {monotone_violations} monotonicity violations, hand update ({:.12}, {:.12})", hand.trust, hand.stress));
    assert!(pass);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_decision_policy_grid() {
    let (unsat, sat) = (SaturationStatus::unsaturated(), SaturationStatus::saturated());
    let mut mismatches = 0;
    for i in 0..=100 {
        for j in 0..=100 {
            let (xi, theta) = (f64::from(i) / 100.0, f64::from(j) / 100.0);
            let t = SuspicionTracker::new(theta, 0.5, 0.1).with_xi(xi);
            let expected = if xi > theta { Decision::Investigate } else { Decision::Proceed };
            mismatches += usize::from(decide(&t, &unsat) != expected);
            mismatches += usize::from(decide(&t, &sat) != Decision::Terminate);
        }
    }
    verdict(4, "suspicion decision policy", mismatches == 0, &format!("101x101 grid x 2 saturation states, {mismatches} mismatches"));
    assert_eq!(mismatches, 0);
}

// ---------------------------------------------------------------- 5

fn items_summing(def: &ScaleDefinition, total: i32) -> Vec<i32> {
    let mut left = total - def.item_range.min * def.item_count as i32;
    (0..def.item_count)
        .map(|_| {
            let add = left.min(def.item_range.max - def.item_range.min);
            left -= add;
            def.item_range.min + add
        })
        .collect()
}

fn label_at(repo: &Repository, abbr: &str, total: i32) -> String {
    let def = repo.get(abbr).unwrap();
    score_scale(def, &items_summing(def, total), None).unwrap().severity
}

/// Band position a total should land in, found by direct threshold search.
fn expected_band(def: &ScaleDefinition, total: i32) -> usize {
    let hits: Vec<usize> = (0..def.bands.len())
        .filter(|&b| match def.scoring_mode {
            ScoringMode::ReverseBands => total <= def.bands[b].threshold,
            _ => total >= def.bands[b].threshold,
        })
        .collect();
    hits.last().copied().unwrap_or(0)
}

#[test]
fn criterion_05_scale_scoring() {
    let repo = Repository::bundled();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    let phq = score_scale(repo.get("PHQ-9").unwrap(), &[2, 2, 1, 1, 2, 1, 1, 1, 1], None).unwrap();
    check(phq.total == 12 && phq.severity == "Moderate", format!("PHQ-9 12 -> {}", phq.severity));
    for (t, want) in [(4, "Minimal"), (5, "Mild"), (9, "Mild"), (10, "Moderate"), (14, "Moderate"), (15, "Severe")] {
        let got = label_at(&repo, "GAD-7", t);
        check(got == want, format!("GAD-7 {t} -> {got}"));
    }
    for t in 0..=7 {
        let got = label_at(&repo, "HAM-D", t);
        check(got == "Normal", format!("HAM-D {t} -> {got}"));
    }
    check(label_at(&repo, "HAM-D", 8) == "Mild", "HAM-D 8".into());
    let pc = repo.get("PC-PTSD-5").unwrap();
    for (gender, total, want) in
        [("Female", 2, "Negative"), ("Female", 3, "Positive"), ("Male", 3, "Negative"), ("Male", 4, "Positive")]
    {
        let ctx = BTreeMap::from([("gender".to_string(), gender.to_string())]);
        let got = score_scale(pc, &items_summing(pc, total), Some(&ctx)).unwrap().severity;
        check(got == want, format!("PC-PTSD-5 {gender} {total} -> {got}"));
    }
    for (t, want) in [(150, "Normal"), (121, "Normal"), (120, "Mild"), (103, "Mild"), (102, "Moderate"), (85, "Severe"), (0, "Severe")] {
        let got = label_at(&repo, "PDSS", t);
        check(got == want, format!("PDSS {t} -> {got}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fuzzed = 0;
    for def in repo.definitions() {
        let ctx = def.condition_key.as_ref().map(|k| BTreeMap::from([(k.clone(), "Female".to_string())]));
        let mut seen: Vec<(i32, usize)> = Vec::new();
        for _ in 0..200 {
            let items: Vec<i32> = (0..def.item_count).map(|_| rng.random_range(def.item_range.min..=def.item_range.max)).collect();
            let s = match score_scale(def, &items, ctx.as_ref()) {
                Ok(s) => s,
                Err(e) => {
                    check(false, format!("{}: {e}", def.abbr));
                    continue;
                }
            };
            fuzzed += 1;
            check(s.total == items.iter().sum::<i32>(), format!("{} total", def.abbr));
            check((def.min_total()..=def.max_total()).contains(&s.total), format!("{} total {} out of range", def.abbr, s.total));
            match def.scoring_mode {
                ScoringMode::SumBands | ScoringMode::Classification | ScoringMode::ReverseBands => {
                    let pos = def.bands.iter().position(|b| b.label == s.severity).unwrap_or(usize::MAX);
                    check(pos == expected_band(def, s.total), format!("{} {} -> {}", def.abbr, s.total, s.severity));
                    seen.push((s.total, pos));
                }
                ScoringMode::ConditionalCutoff => seen.push((s.total, usize::from(s.severity == "Positive"))),
                ScoringMode::AlgorithmStub => {}
            }
        }
        seen.sort();
        let reverse = def.scoring_mode == ScoringMode::ReverseBands;
        let monotone = seen.windows(2).all(|w| if reverse { w[1].1 <= w[0].1 } else { w[1].1 >= w[0].1 });
        check(monotone, format!("{} band assignment not monotone", def.abbr));
    }
    let pass = failures.is_empty() && repo.len() == 46;
    verdict(5, "scale scoring", pass, &format!("{} definitions, {fuzzed} fuzzed vectors, failures: {failures:?}", repo.len()));
    assert!(pass);
}

// ---------------------------------------------------------------- 6

fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn has_internal_trace(r: &CorpusRecord) -> bool {
    r.final_transcript.iter().any(|t| t.clinician_trace.is_some() || t.patient_trace.is_some()) || r.run_meta.initial_state.is_some()
}

#[test]
fn criterion_06_end_to_end_determinism() {
    let start = Instant::now();
    let w = World::new();
    let env = w.env();
    let profiles = mixed_profiles(20);
    let strategies: BTreeSet<DeceptionStrategy> = profiles.iter().map(|p| p.honesty.deception_strategy).collect();
    let run = || run_batch(&profiles, &env, |p| Ok(scripted_backends(p, &w.repo)), 42);
    let first = run();
    let mut problems: Vec<String> = Vec::new();
    if first.records.len() != 20 {
        problems.push(format!("{} of 20 sessions completed", first.records.len()));
    }
    for r in &first.records {
        let v = validate_record(r, &w.repo);
        if !v.is_clean() {
            problems.push(format!("{}: {:?}", r.record_id, v.violations));
        }
        let self_keys: BTreeSet<String> = r.patient_self_report.keys().cloned().collect();
        let clin_keys: BTreeSet<String> = r.doctor_clinician_report.keys().cloned().collect();
        if self_keys != r.plan.self_report_abbrs() || clin_keys != r.plan.clinician_abbrs() {
            problems.push(format!("{}: report keys differ from plan", r.record_id));
        }
    }
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_corpus(a.path(), &first.records, "acceptance", &first.report).unwrap();
    let second = run();
    write_corpus(b.path(), &second.records, "acceptance", &second.report).unwrap();
    let identical = dir_bytes(a.path()) == dir_bytes(b.path());
    if !identical {
        problems.push("rerun differs".into());
    }
    let reread: Vec<CorpusRecord> = read_corpus(a.path()).unwrap().into_iter().map(|l| l.record.unwrap()).collect();
    if reread != first.records {
        problems.push("records do not round-trip through files".into());
    }
    for r in &first.records {
        let public = public_view(r);
        if has_internal_trace(&public) || !validate_record(&public, &w.repo).is_clean() {
            problems.push(format!("{}: public export", r.record_id));
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && strategies.len() == 3 && elapsed < Duration::from_secs(30);
    verdict(6, "end-to-end determinism and completeness", pass, &format!("20 sessions, {} strategies, byte-identical rerun = {identical}, {elapsed:.2?}, problems: {problems:?}", strategies.len()));
    assert!(pass);
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_ablation_mechanism() {
    let w = World::new();
    let (cot, passive) = ablation_arms();
    let cot_f = |p: &PatientProfile| -> Result<Backends, BackendError> { Ok(arm_backends(&cot, p, &w.repo)) };
    let passive_f = |p: &PatientProfile| -> Result<Backends, BackendError> { Ok(arm_backends(&passive, p, &w.repo)) };
    let arms = [
        AblationArm { name: cot.name.clone(), params: cot.params.clone(), backends: &cot_f },
        AblationArm { name: passive.name.clone(), params: passive.params.clone(), backends: &passive_f },
    ];
    let profiles: Vec<PatientProfile> = (0..4).map(ablation_profile).collect();
    let mut wins = 0;
    let mut summary = Vec::new();
    let mut shapes_ok = true;
    for seed in 0..10u64 {
        let r = ablation_run(&profiles, &arms, &w.env(), (seed + 1) << 16).unwrap();
        let (c, p) = (&r.arms[0], &r.arms[1]);
        let complete = c.failures.is_empty() && p.failures.is_empty();
        if complete && c.mean_delta_trust > p.mean_delta_trust && c.mean_rounds_to_saturation < p.mean_rounds_to_saturation {
            wins += 1;
        }
        summary.push(format!(
            "{:.3}/{:.3} {:.1}/{:.1}",
            c.mean_delta_trust, p.mean_delta_trust, c.mean_rounds_to_saturation, p.mean_rounds_to_saturation
        ));
        if seed == 0 {
            let mut by_round = Vec::new();
            write_trust_by_round_csv(&r, &mut by_round).unwrap();
            let by_round = String::from_utf8(by_round).unwrap();
            let mut delta = Vec::new();
            write_delta_trust_csv(&r, &mut delta).unwrap();
            let delta = String::from_utf8(delta).unwrap();
            shapes_ok &= by_round.lines().next() == Some("round,mean_trust,arm,n");
            shapes_ok &= by_round.lines().skip(1).all(|l| l.split(',').count() == 4);
            shapes_ok &= delta.lines().next() == Some("arm,record_id,delta_trust,rounds_to_saturation");
            shapes_ok &= delta.lines().count() == 1 + 2 * profiles.len();
        }
    }
    let pass = wins >= 9 && shapes_ok;
    verdict(7, "ablation mechanism", pass, &format!("{wins}/10 seeds with higher dTrust and fewer rounds (cot/passive: {}), csv shapes ok = {shapes_ok}", summary.join("; ")));
    assert!(pass);
}

// ---------------------------------------------------------------- 8

fn self_total(r: &CorpusRecord) -> i32 {
    r.patient_self_report.values().map(|s| s.total_score).sum()
}

#[test]
fn criterion_08_honesty_bias_direction() {
    let w = World::new();
    let env = w.env();
    let mut problems: Vec<String> = Vec::new();
    let mut pairs = 0;
    for status in [ClinicalStatus::Depression, ClinicalStatus::Anxiety, ClinicalStatus::Ptsd] {
        for severity in Severity::GRADED {
            let make = |strategy| {
                fixture_profile(&FixtureSpec {
                    id: format!("pair-{}-{}", status.as_str(), severity.as_str()),
                    status,
                    severity,
                    strategy,
                    gender: Gender::Female,
                    age: 35,
                })
            };
            let profiles =
                [make(DeceptionStrategy::Frankness), make(DeceptionStrategy::Concealment), make(DeceptionStrategy::Exaggeration)];
            let out = run_batch(&profiles, &env, |p| Ok(scripted_backends(p, &w.repo)), 0);
            if out.records.len() != 3 {
                problems.push(format!("{status:?}/{severity:?}: sessions failed"));
                continue;
            }
            let (frank, conceal, exag) = (&out.records[0], &out.records[1], &out.records[2]);
            pairs += 2;
            if self_total(conceal) >= self_total(frank) {
                problems.push(format!("{status:?}/{severity:?}: concealment {} vs frank {}", self_total(conceal), self_total(frank)));
            }
            if self_total(exag) <= self_total(frank) {
                problems.push(format!("{status:?}/{severity:?}: exaggeration {} vs frank {}", self_total(exag), self_total(frank)));
            }
            for (r, dir) in [(conceal, AdjustmentDirection::Upward), (exag, AdjustmentDirection::Downward)] {
                for resp in r.doctor_clinician_report.values() {
                    let ok = match &resp.adjustment {
                        Some(a) if a.direction == dir => match dir {
                            AdjustmentDirection::Upward => resp.total_score >= a.literal_total,
                            AdjustmentDirection::Downward => resp.total_score <= a.literal_total,
                        },
                        _ => false,
                    };
                    if !ok {
                        problems.push(format!("{}: {} adjustment {:?}", r.record_id, resp.scale_abbr, resp.adjustment));
                    }
                }
            }
            if frank.doctor_clinician_report.values().any(|s| s.adjustment.is_some()) {
                problems.push(format!("{}: frank record adjusted", frank.record_id));
            }
        }
    }
    let pass = problems.is_empty() && pairs == 18;
    verdict(8, "honesty bias direction", pass, &format!("{pairs} fixture pairs, problems: {problems:?}"));
    assert!(pass);
}

// ---------------------------------------------------------------- 9

fn response(repo: &Repository, abbr: &str, total: i32, rater: Rater) -> ScaleResponse {
    let def = repo.get(abbr).unwrap();
    let items = items_summing(def, total);
    let scored = score_scale(def, &items, None).unwrap();
    ScaleResponse {
        scale_abbr: abbr.into(),
        item_scores: items,
        total_score: scored.total,
        severity: scored.severity,
        interpretation: String::new(),
        dialogue_evidence: BTreeMap::new(),
        rater,
        adjustment: None,
    }
}

fn resolve(self_total: i32, clinician_total: i32, xi: f64, conceal: u32, exaggerate: u32) -> (Severity, ResolutionRule) {
    let repo = Repository::bundled();
    let prompts = PromptSet::bundled();
    let params = AgentParams::default();
    let plan = ScalePlan {
        clinician_scales: vec![PlanEntry::new("HAM-D", "")],
        self_report_scales: vec![PlanEntry::new("PHQ-9", "")],
    };
    let self_reports = BTreeMap::from([("PHQ-9".to_string(), response(&repo, "PHQ-9", self_total, Rater::Patient))]);
    let clinician = BTreeMap::from([("HAM-D".to_string(), response(&repo, "HAM-D", clinician_total, Rater::Evaluator))]);
    let reply = serde_json::json!({
        "final_diagnosis": {"status": "Depression", "severity": "Mild"},
        "reasoning": {"symptom_match": "low mood", "key_evidence": ["Turn 3: low mood"]}
    });
    let entries = BTreeMap::from([("Diagnostician/*".to_string(), ScriptEntry::json(reply))]);
    let backends = Backends::single(Arc::new(ScriptedBackend::new("dx", entries, ScriptOptions::default())));
    let mut io = AgentIo::new(&backends, &prompts, &params, 9);
    let profile = fixture_profile(&FixtureSpec {
        id: "dx".into(),
        status: ClinicalStatus::Depression,
        severity: Severity::Moderate,
        strategy: DeceptionStrategy::Frankness,
        gender: Gender::Male,
        age: 40,
    });
    let mut tracker = SuspicionTracker::new(0.5, 0.5, 0.1).with_xi(xi);
    tracker.concealing_votes = conceal;
    tracker.exaggerating_votes = exaggerate;
    let input = DiagnoseInput {
        profile: &profile,
        plan: &plan,
        repo: &repo,
        self_reports: &self_reports,
        clinician_reports: &clinician,
        tracker: &tracker,
        last_round: 12,
    };
    let r = diagnose(&input, &mut io).unwrap();
    (r.severity, r.rule)
}

#[test]
fn criterion_09_discrepancy_rules() {
    // PHQ-9: 7 Mild, 12 Moderate, 22 Severe. HAM-D: 16 Moderate.
    let conceal = resolve(7, 16, 0.8, 3, 0);
    let exaggerate = resolve(22, 16, 0.8, 0, 3);
    let agree = resolve(12, 16, 0.1, 0, 0);
    let pass = conceal == (Severity::Moderate, ResolutionRule::ClinicianOverConcealment)
        && exaggerate == (Severity::Moderate, ResolutionRule::DowngradeExaggeration)
        && agree == (Severity::Moderate, ResolutionRule::Agreement);
    verdict(9, "diagnostician discrepancy rules", pass, &format!("conceal {conceal:?}, exaggerate {exaggerate:?}, agree {agree:?}"));
    assert!(pass);
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_strata_sampling() {
    let w = World::new();
    let out = run_batch(&mixed_profiles(100), &w.env(), |p| Ok(scripted_backends(p, &w.repo)), 10);
    let strata = BTreeMap::from([
        (DeceptionStrategy::Concealment, 12),
        (DeceptionStrategy::Exaggeration, 13),
        (DeceptionStrategy::Frankness, 25),
    ]);
    let a = stratified_sample(&out.records, &strata, 7).unwrap();
    let b = stratified_sample(&out.records, &strata, 7).unwrap();
    let mut counts: BTreeMap<DeceptionStrategy, usize> = BTreeMap::new();
    for &i in &a {
        *counts.entry(out.records[i].profile.honesty.deception_strategy).or_default() += 1;
    }
    let pass = out.records.len() == 100 && counts == strata && a == b && a.len() == 50;
    verdict(10, "strata sampling", pass, &format!("corpus {}, sample {}, counts {counts:?}, deterministic = {}", out.records.len(), a.len(), a == b));
    assert!(pass);
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_icc_oracle() {
    // Raters x items. Mean squares from a two-way least-squares fit:
    // MS_items = 6.9, MS_raters = 247/6, MS_error = 17/30, so
    // ICC(2,1) = (6.9 - 17/30) / (6.9 + 2*17/30 + 3*(247/6 - 17/30)/6) = 19/85.
    let m = vec![
        vec![9.0, 6.0, 8.0, 7.0, 10.0, 6.0],
        vec![2.0, 1.0, 4.0, 1.0, 5.0, 2.0],
        vec![5.0, 3.0, 6.0, 2.0, 6.0, 4.0],
    ];
    let got = icc_two_way(&m).unwrap();
    let row = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
    let same = icc_two_way(&[row.clone(), row.clone(), row]).unwrap();
    let pass = (got - 19.0 / 85.0).abs() <= 1e-9 && (same - 1.0).abs() <= 1e-9;
    verdict(11, "ICC(2,1) oracle", pass, &format!("fixture {got:.12} vs 19/85, identical raters {same:.12}"));
    assert!(pass);
}
