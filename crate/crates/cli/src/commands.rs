use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use intake_core::backends::RoleTag;
use intake_core::config::{Resources, RunConfig};
use intake_core::evaluation::{
    ablation_run, classification_metrics, confusion, diagnostic_alignment, final_suspicion, icc_two_way,
    mean_by_record, presentation_order, rate_realism, read_human_scores, realism_table, score_matrix,
    stratified_sample, suspicion_alignment, write_delta_trust_csv, write_trust_by_round_csv, AblationArm,
    AlignmentReport, BackendFactory, MetricsReport, RealismScore,
};
use intake_core::fixtures::{write_ablation_fixtures, write_mixed_fixtures};
use intake_core::profiles::{DeceptionStrategy, PatientProfile};
use intake_core::scales::Repository;
use intake_core::session::{
    corpus_stats, load_profiles, public_view, read_corpus, read_manifest, run_batch, transcript_text,
    validate_record, write_corpus, write_json_atomic, BatchEntry, BatchReport, CorpusRecord, EntryStatus,
    SessionEnv,
};

use crate::output::{f3, table, CliError, Outcome, EXIT_FAILURE};
use crate::RunArgs;

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(path).map_err(CliError::from)
}

/// Config with flag overrides applied, validated, plus its resources and
/// the profiles to run.
fn prepare(run: &RunArgs) -> Result<(RunConfig, Resources, Vec<PatientProfile>), CliError> {
    let mut cfg = load_config(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &run.out {
        cfg.paths.output = Some(out.clone());
    }
    if let Some(w) = run.workers {
        cfg.session.workers = w;
    }
    cfg.validate()?;
    let res = cfg.resources()?;
    if !run.profiles.exists() {
        return Err(CliError::config(format!("profiles path {} does not exist", run.profiles.display())));
    }
    let profiles = load_profiles(&run.profiles).map_err(CliError::config)?;
    if profiles.is_empty() {
        return Err(CliError::config(format!("no profiles in {}", run.profiles.display())));
    }
    for p in &profiles {
        p.validate_with(&res.bank).map_err(|e| CliError::config(format!("profile {}: {e}", p.id)))?;
    }
    Ok((cfg, res, profiles))
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.paths.output.clone().ok_or_else(|| CliError::config("no output directory: pass --out or set paths.output"))
}

fn env<'a>(cfg: &RunConfig, res: &'a Resources) -> SessionEnv<'a> {
    SessionEnv {
        repo: &res.repo,
        prompts: &res.prompts,
        bank: &res.bank,
        agent: cfg.agent.clone(),
        session: cfg.session.clone(),
        config_hash: cfg.hash(),
    }
}

/// Readable records of a corpus plus the files that failed to parse.
fn load_corpus(dir: &Path) -> Result<(Vec<CorpusRecord>, Vec<(String, String)>), CliError> {
    let loaded = read_corpus(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for l in loaded {
        match l.record {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", l.path.display());
                skipped.push((l.path.display().to_string(), e));
            }
        }
    }
    Ok((records, skipped))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    write_json_atomic(path, value).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn batch_text(report: &BatchReport, out: &Path) -> String {
    let mut text = format!("{} succeeded, {} failed; corpus written to {}\n", report.succeeded, report.failed, out.display());
    for e in &report.entries {
        if let EntryStatus::Failed { error } = &e.status {
            text.push_str(&format!("  failed {} (seed {}): {error}\n", e.profile_id, e.seed));
        }
    }
    text
}

pub fn synthesize(run: &RunArgs, strict: bool) -> Result<Outcome, CliError> {
    let (cfg, res, profiles) = prepare(run)?;
    let out = output_dir(&cfg)?;
    let env = env(&cfg, &res);
    let batch = run_batch(&profiles, &env, |p| cfg.backends_for(p), cfg.seed);
    write_corpus(&out, &batch.records, &env.config_hash, &batch.report)
        .map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    let code = if batch.report.succeeded == 0 || (strict && batch.report.failed > 0) { EXIT_FAILURE } else { 0 };
    let result = json!({"out": out, "config_hash": env.config_hash, "report": batch.report});
    Ok(Outcome::new(&result, batch_text(&batch.report, &out)).with_code(code))
}

fn metrics_rows(task: &str, m: &MetricsReport) -> Vec<String> {
    vec![task.to_string(), m.n.to_string(), f3(m.accuracy), f3(m.macro_f1), f3(m.weighted_f1), f3(m.kappa), f3(m.mcc)]
}

const METRIC_HEADER: [&str; 7] = ["task", "n", "accuracy", "macro_f1", "weighted_f1", "kappa", "mcc"];

fn per_class_table(m: &MetricsReport) -> String {
    let rows: Vec<Vec<String>> = m
        .per_class
        .iter()
        .map(|(l, c)| vec![l.clone(), f3(c.precision), f3(c.recall), f3(c.f1), c.support.to_string()])
        .collect();
    table(&["label", "precision", "recall", "f1", "support"], &rows)
}

fn alignment_text(a: &AlignmentReport) -> String {
    let mut rows = vec![metrics_rows("status", &a.status)];
    if let Some(s) = &a.severity {
        rows.push(metrics_rows("severity", s));
    }
    let mut text = table(&METRIC_HEADER, &rows);
    text.push_str("\nstatus per class\n");
    text.push_str(&per_class_table(&a.status));
    if let Some(s) = &a.severity {
        text.push_str("\nseverity per class\n");
        text.push_str(&per_class_table(s));
    }
    let l = &a.leakage;
    let graded: u64 = l.healthy_graded.values().sum();
    text.push_str(&format!(
        "\nleakage: {graded} of {} healthy cases graded {:?}; {} non-healthy cases judged not applicable\n",
        l.healthy_total, l.healthy_graded, l.graded_not_applicable
    ));
    text
}

#[derive(serde::Deserialize)]
struct PairRow {
    truth: String,
    pred: String,
}

fn evaluate_pairs(path: &Path) -> Result<(Value, String), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let rows: Vec<PairRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::failed(format!("{} has no rows", path.display())));
    }
    let labels: BTreeSet<&str> = rows.iter().flat_map(|r| [r.truth.as_str(), r.pred.as_str()]).collect();
    let order: Vec<&str> = labels.into_iter().collect();
    let truth: Vec<&str> = rows.iter().map(|r| r.truth.as_str()).collect();
    let pred: Vec<&str> = rows.iter().map(|r| r.pred.as_str()).collect();
    let cm = confusion(&truth, &pred, &order).map_err(CliError::failed)?;
    let m = classification_metrics(&cm).map_err(CliError::failed)?;
    let mut text = table(&METRIC_HEADER, &[metrics_rows("pairs", &m)]);
    text.push('\n');
    text.push_str(&per_class_table(&m));
    Ok((json!({"confusion": cm, "metrics": m}), text))
}

fn human_analysis(records: &[CorpusRecord], path: &Path) -> Result<(Value, String), CliError> {
    let scores = read_human_scores(path).map_err(CliError::config)?;
    let human = mean_by_record(&scores);
    let (mut system, mut rated) = (Vec::new(), Vec::new());
    for r in records {
        if let (Some(xi), Some(h)) = (final_suspicion(r), human.get(&r.record_id)) {
            system.push(xi);
            rated.push(*h);
        }
    }
    let mut text = String::new();
    let alignment = match suspicion_alignment(&system, &rated) {
        Ok(s) => {
            text.push_str(&format!(
                "suspicion alignment: n={} pearson r={} (p={}) auc={}\n",
                s.n,
                f3(s.pearson_r),
                f3(s.pearson_p),
                f3(s.auc)
            ));
            serde_json::to_value(s).expect("serializes")
        }
        Err(e) => {
            text.push_str(&format!("suspicion alignment unavailable: {e}\n"));
            json!({"error": e.to_string(), "n": system.len()})
        }
    };
    let icc = match score_matrix(&scores).and_then(|(raters, items, m)| Ok((raters.len(), items.len(), icc_two_way(&m)?))) {
        Ok((raters, items, v)) => {
            text.push_str(&format!("inter-rater ICC(2,1): {} over {raters} raters x {items} records\n", f3(v)));
            json!({"icc": v, "raters": raters, "items": items})
        }
        Err(e) => {
            text.push_str(&format!("inter-rater ICC unavailable: {e}\n"));
            json!({"error": e.to_string()})
        }
    };
    Ok((json!({"suspicion": alignment, "reliability": icc}), text))
}

pub fn evaluate(corpus: Option<&Path>, pairs: Option<&Path>, human: Option<&Path>, out: Option<&Path>) -> Result<Outcome, CliError> {
    let (result, text) = match (corpus, pairs) {
        (_, Some(p)) => evaluate_pairs(p)?,
        (Some(dir), None) => {
            let (records, skipped) = load_corpus(dir)?;
            if records.is_empty() {
                return Err(CliError::failed(format!("no readable records in {}", dir.display())));
            }
            let a = diagnostic_alignment(&records).map_err(CliError::failed)?;
            let mut text = format!("{} records evaluated, {} skipped\n", records.len(), skipped.len());
            text.push_str(&alignment_text(&a));
            let mut result = json!({"records": records.len(), "skipped": skipped.len(), "alignment": a});
            if let Some(h) = human {
                let (v, t) = human_analysis(&records, h)?;
                text.push_str(&t);
                result["human"] = v;
            }
            (result, text)
        }
        (None, None) => return Err(CliError::config("pass a corpus directory or --pairs")),
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("metrics.json"), &result)?;
        write_text(&dir.join("metrics.txt"), &text)?;
    }
    Ok(Outcome::new(&result, text))
}

pub fn ablate(run: &RunArgs, arm_paths: &[PathBuf]) -> Result<Outcome, CliError> {
    let (cfg, res, profiles) = prepare(run)?;
    let out = output_dir(&cfg)?;
    let mut arm_cfgs = Vec::new();
    for path in arm_paths {
        let arm = load_config(path)?;
        arm.validate()?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("arm").to_string();
        arm_cfgs.push((name, arm));
    }
    let factories: Vec<Box<BackendFactory<'_>>> = arm_cfgs
        .iter()
        .map(|(_, a)| Box::new(move |p: &PatientProfile| a.backends_for(p)) as Box<BackendFactory<'_>>)
        .collect();
    let arms: Vec<AblationArm<'_>> = arm_cfgs
        .iter()
        .zip(&factories)
        .map(|((name, a), f)| AblationArm { name: name.clone(), params: a.agent.clone(), backends: f.as_ref() })
        .collect();
    let report = ablation_run(&profiles, &arms, &env(&cfg, &res), cfg.seed).map_err(CliError::config)?;

    create_dir(&out)?;
    write_json(&out.join("ablation.json"), &report)?;
    let csv_file = |name: &str| {
        let path = out.join(name);
        fs::File::create(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    };
    write_trust_by_round_csv(&report, csv_file("trust_by_round.csv")?).map_err(CliError::io)?;
    write_delta_trust_csv(&report, csv_file("delta_trust.csv")?).map_err(CliError::io)?;

    let rows: Vec<Vec<String>> = report
        .arms
        .iter()
        .map(|a| {
            vec![
                a.name.clone(),
                a.sessions.to_string(),
                a.failures.len().to_string(),
                f3(a.mean_delta_trust),
                format!("{:.2}", a.mean_rounds_to_saturation),
                f3(a.status_accuracy),
                a.severity_accuracy.map(f3).unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut text = table(&["arm", "sessions", "failed", "delta_trust", "rounds", "status_acc", "severity_acc"], &rows);
    text.push_str(&format!("written to {}\n", out.display()));
    let summary: Vec<Value> = report
        .arms
        .iter()
        .map(|a| {
            json!({
                "name": a.name,
                "sessions": a.sessions,
                "failed": a.failures.len(),
                "mean_delta_trust": a.mean_delta_trust,
                "mean_rounds_to_saturation": a.mean_rounds_to_saturation,
                "status_accuracy": a.status_accuracy,
                "severity_accuracy": a.severity_accuracy,
            })
        })
        .collect();
    let failed = report.arms.iter().any(|a| a.sessions == 0);
    let result = json!({"out": out, "seed": report.seed, "arms": summary});
    Ok(Outcome::new(&result, text).with_code(if failed { EXIT_FAILURE } else { 0 }))
}

pub fn validate(corpus: &Path, config: Option<&Path>) -> Result<Outcome, CliError> {
    let repo = match config {
        Some(p) => {
            let cfg = load_config(p)?;
            cfg.validate()?;
            cfg.resources()?.repo
        }
        None => Repository::bundled(),
    };
    let loaded = read_corpus(corpus).map_err(|e| CliError::io(format!("{}: {e}", corpus.display())))?;
    let mut problems = Vec::new();
    let mut clean = 0;
    for l in &loaded {
        let file = l.path.display().to_string();
        match &l.record {
            Ok(r) => {
                let v = validate_record(r, &repo);
                if v.is_clean() {
                    clean += 1;
                } else {
                    problems.push(json!({"file": file, "record_id": v.record_id, "violations": v.violations}));
                }
            }
            Err(e) => problems.push(json!({"file": file, "error": e})),
        }
    }
    let mut text = format!("{} records checked, {clean} clean, {} with problems\n", loaded.len(), problems.len());
    for p in &problems {
        text.push_str(&format!("  {}\n", serde_json::to_string(p).expect("serializes")));
    }
    let result = json!({"checked": loaded.len(), "clean": clean, "problems": problems});
    let code = if problems.is_empty() && !loaded.is_empty() { 0 } else { EXIT_FAILURE };
    Ok(Outcome::new(&result, text).with_code(code))
}

pub fn stats(corpus: &Path) -> Result<Outcome, CliError> {
    let (records, skipped) = load_corpus(corpus)?;
    let s = corpus_stats(&records).ok_or_else(|| CliError::failed(format!("no readable records in {}", corpus.display())))?;
    let mut rows = vec![
        vec!["dialogues".to_string(), s.total_dialogues.to_string()],
        vec!["tokens".to_string(), s.total_tokens.to_string()],
        vec!["turns".to_string(), s.total_turns.to_string()],
        vec!["avg turns".to_string(), format!("{:.2}", s.avg_turns)],
        vec!["tokens per turn".to_string(), format!("{:.2}", s.tokens_per_turn)],
        vec!["mean age".to_string(), format!("{:.1} ({}-{})", s.demographics.mean_age, s.demographics.min_age, s.demographics.max_age)],
    ];
    for (k, v) in &s.pathology {
        rows.push(vec![format!("pathology {k}"), format!("{v:.1}%")]);
    }
    for (k, v) in &s.severity {
        rows.push(vec![format!("severity {k}"), format!("{v:.1}%")]);
    }
    for (k, v) in &s.demographics.gender {
        rows.push(vec![format!("gender {k}"), format!("{v:.1}%")]);
    }
    let mut text = table(&["statistic", "value"], &rows);
    if !skipped.is_empty() {
        text.push_str(&format!("{} unreadable files skipped\n", skipped.len()));
    }
    let result = json!({"stats": s, "skipped": skipped.len()});
    Ok(Outcome::new(&result, text))
}

/// Source manifest's hash and report restricted to `records`.
fn carried_manifest(corpus: &Path, records: &[CorpusRecord]) -> (String, BatchReport) {
    let keep: BTreeSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
    match read_manifest(corpus) {
        Some(m) => {
            let entries: Vec<BatchEntry> = m
                .report
                .entries
                .into_iter()
                .filter(|e| matches!(&e.status, EntryStatus::Ok { record_id } if keep.contains(record_id.as_str())))
                .collect();
            let report = BatchReport { seed: m.report.seed, succeeded: entries.len(), failed: 0, entries };
            (m.config_hash, report)
        }
        None => {
            let entries = records
                .iter()
                .enumerate()
                .map(|(index, r)| BatchEntry {
                    index,
                    profile_id: r.profile.id.clone(),
                    seed: r.run_meta.seed,
                    status: EntryStatus::Ok { record_id: r.record_id.clone() },
                })
                .collect();
            let hash = records.first().map(|r| r.run_meta.config_hash.clone()).unwrap_or_default();
            (hash, BatchReport { seed: 0, succeeded: records.len(), failed: 0, entries })
        }
    }
}

pub fn export(corpus: &Path, out: &Path, public: bool) -> Result<Outcome, CliError> {
    let (records, skipped) = load_corpus(corpus)?;
    let records: Vec<CorpusRecord> = if public { records.iter().map(public_view).collect() } else { records };
    let (hash, report) = carried_manifest(corpus, &records);
    write_corpus(out, &records, &hash, &report).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    let text = format!(
        "{} records exported to {}{}; {} unreadable files skipped\n",
        records.len(),
        out.display(),
        if public { " without internal traces" } else { "" },
        skipped.len()
    );
    let result = json!({"out": out, "written": records.len(), "public": public, "skipped": skipped.len()});
    Ok(Outcome::new(&result, text))
}

pub fn sample(corpus: &Path, counts: &[usize], seed: u64, out: &Path) -> Result<Outcome, CliError> {
    let [conceal, exaggerate, frank] = counts else {
        return Err(CliError::config("--strata takes three counts: concealment,exaggeration,frankness"));
    };
    let strata = BTreeMap::from([
        (DeceptionStrategy::Concealment, *conceal),
        (DeceptionStrategy::Exaggeration, *exaggerate),
        (DeceptionStrategy::Frankness, *frank),
    ]);
    let (records, _) = load_corpus(corpus)?;
    let picked = stratified_sample(&records, &strata, seed).map_err(CliError::failed)?;
    let chosen: Vec<CorpusRecord> = picked.iter().map(|&i| records[i].clone()).collect();
    let (hash, report) = carried_manifest(corpus, &chosen);
    write_corpus(out, &chosen, &hash, &report).map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    let ids: Vec<&str> = chosen.iter().map(|r| r.record_id.as_str()).collect();
    let strata_out: BTreeMap<&str, usize> = strata.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let text = format!("{} records sampled ({strata_out:?}) into {}\n", chosen.len(), out.display());
    let result = json!({"out": out, "seed": seed, "strata": strata_out, "record_ids": ids});
    Ok(Outcome::new(&result, text))
}

#[derive(Serialize)]
struct Rated {
    system: String,
    record_id: String,
    position: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<RealismScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn rate(config: &Path, corpora: &[PathBuf], seed: u64, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = load_config(config)?;
    cfg.validate()?;
    let res = cfg.resources()?;
    let mut systems = Vec::new();
    for dir in corpora {
        let name = dir.file_name().and_then(|s| s.to_str()).unwrap_or("corpus").to_string();
        let (records, _) = load_corpus(dir)?;
        systems.push((name, records));
    }
    let longest = systems.iter().map(|s| s.1.len()).max().unwrap_or(0);
    let mut rated = Vec::new();
    let mut call = 0u32;
    for i in 0..longest {
        for (position, s) in presentation_order(systems.len(), seed, i as u64).into_iter().enumerate() {
            let (name, records) = &systems[s];
            let Some(r) = records.get(i) else { continue };
            let result = cfg.backends_for(&r.profile).and_then(|b| {
                rate_realism(&transcript_text(&r.final_transcript), b.for_role(RoleTag::Rater), &res.prompts, seed, call)
            });
            call += 1;
            let (score, error) = match result {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            rated.push(Rated { system: name.clone(), record_id: r.record_id.clone(), position, score, error });
        }
    }
    let ok: Vec<(String, RealismScore)> =
        rated.iter().filter_map(|r| r.score.clone().map(|s| (r.system.clone(), s))).collect();
    let failed = rated.len() - ok.len();
    let summary = realism_table(&ok);
    let mut text = summary.render();
    text.push_str(&format!("{} dialogues rated, {failed} failed\n", ok.len()));
    let result = json!({"table": summary, "ratings": rated, "failed": failed});
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("realism.json"), &result)?;
        write_text(&dir.join("realism.txt"), &text)?;
    }
    let code = if ok.is_empty() { EXIT_FAILURE } else { 0 };
    Ok(Outcome::new(&result, text).with_code(code))
}

pub fn fixtures(out: &Path, count: usize, ablation: bool) -> Result<Outcome, CliError> {
    let repo = Repository::bundled();
    let written = if ablation {
        write_ablation_fixtures(out, count, &repo)
    } else {
        write_mixed_fixtures(out, count, &repo)
    };
    written.map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
    let kind = if ablation { "ablation" } else { "mixed" };
    let text = format!("{count} {kind} fixture profiles with scripts and configs written to {}\n", out.display());
    Ok(Outcome::new(&json!({"out": out, "count": count, "kind": kind}), text))
}
