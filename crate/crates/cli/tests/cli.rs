use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn intake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intake")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Mixed fixtures written by the binary itself.
fn mixed(dir: &Path, n: usize) -> PathBuf {
    let fx = dir.join("fx");
    let o = intake(&["fixtures", "--out", s(&fx), "--count", &n.to_string()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fx
}

fn synthesize(fx: &Path, out: &Path, extra: &[&str]) -> Output {
    let config = fx.join("config.toml");
    let profiles = fx.join("profiles");
    let mut args = vec!["synthesize", "--config", s(&config), "--profiles", s(&profiles), "--out", s(out)];
    args.extend_from_slice(extra);
    intake(&args)
}

fn record_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("manifest.json"))
        .collect();
    files.sort();
    files
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn synthesize_validate_stats_evaluate_export() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 8);
    let corpus = tmp.path().join("corpus");

    let o = synthesize(&fx, &corpus, &["--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("8 succeeded, 0 failed"));
    assert_eq!(record_files(&corpus).len(), 8);
    let manifest: Value = serde_json::from_slice(&fs::read(corpus.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["report"]["entries"].as_array().unwrap().len(), 8);

    assert_eq!(code(&intake(&["validate", s(&corpus)])), 0);

    let stats = json(&intake(&["--json", "stats", s(&corpus)]));
    let keys: Vec<&str> = stats["result"]["stats"].as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["total_dialogues", "total_tokens", "total_turns", "avg_turns", "tokens_per_turn", "pathology", "severity", "demographics"] {
        assert!(keys.contains(&k), "{k} missing from {keys:?}");
    }
    assert_eq!(stats["result"]["stats"]["total_dialogues"], 8);

    let metrics = tmp.path().join("metrics");
    let o = intake(&["evaluate", s(&corpus), "--out", s(&metrics)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("accuracy"));
    let m: Value = serde_json::from_slice(&fs::read(metrics.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["alignment"]["status"]["accuracy"], 1.0);
    assert_eq!(m["alignment"]["status"]["n"], 8);
    assert!(metrics.join("metrics.txt").exists());

    let public = tmp.path().join("public");
    assert_eq!(code(&intake(&["export", s(&corpus), "--out", s(&public), "--public"])), 0);
    let files = record_files(&public);
    assert_eq!(files.len(), 8);
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        assert!(!text.contains("patient_trace") && !text.contains("clinician_trace"), "{}", f.display());
    }
    assert!(fs::read_to_string(record_files(&corpus)[0].clone()).unwrap().contains("clinician_trace"));
    assert_eq!(code(&intake(&["validate", s(&public)])), 0);
}

#[test]
fn rerun_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 6);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&synthesize(&fx, &a, &["--seed", "3"])), 0);
    assert_eq!(code(&synthesize(&fx, &b, &["--seed", "3"])), 0);
    assert_eq!(dir_bytes(&a), dir_bytes(&b));

    let (pa, pb) = (tmp.path().join("pa"), tmp.path().join("pb"));
    intake(&["export", s(&a), "--out", s(&pa), "--public"]);
    intake(&["export", s(&a), "--out", s(&pb), "--public"]);
    assert_eq!(dir_bytes(&pa), dir_bytes(&pb));

    let c = tmp.path().join("c");
    assert_eq!(code(&synthesize(&fx, &c, &["--seed", "4"])), 0);
    assert_ne!(dir_bytes(&a), dir_bytes(&c));
}

#[test]
fn missing_repository_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 2);
    let config = fx.join("config.toml");
    let mut text = fs::read_to_string(&config).unwrap();
    text = text.replacen("seed = 1", "seed = 1\n[paths]\nrepository = \"missing/scales.json\"", 1);
    fs::write(&config, text).unwrap();
    let o = synthesize(&fx, &tmp.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("paths.repository"));
    assert!(!tmp.path().join("out").exists());

    let o = intake(&["--json", "synthesize", "--config", s(&config), "--profiles", s(&fx.join("profiles")), "--out", "x"]);
    let env = json(&o);
    assert_eq!((env["ok"].as_bool(), env["exit_code"].as_i64()), (Some(false), Some(2)));
    assert_eq!(env["error"]["kind"], "config");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = intake(&["synthesize", "--config", "/nonexistent/c.toml", "--profiles", "/nonexistent", "--out", "x"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn session_failures_exit_zero_unless_strict() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 4);
    fs::remove_file(fx.join("scripts/fx-002.json")).unwrap();
    let o = synthesize(&fx, &tmp.path().join("lenient"), &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("3 succeeded, 1 failed"));
    assert!(stdout(&o).contains("failed fx-002"));
    assert_eq!(record_files(&tmp.path().join("lenient")).len(), 3);
    assert_eq!(code(&synthesize(&fx, &tmp.path().join("strict"), &["--strict"])), 1);

    for f in fs::read_dir(fx.join("scripts")).unwrap() {
        fs::remove_file(f.unwrap().path()).unwrap();
    }
    assert_eq!(code(&synthesize(&fx, &tmp.path().join("none"), &[])), 1);
}

#[test]
fn corrupt_records_are_skipped_and_counted() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 4);
    let corpus = tmp.path().join("corpus");
    synthesize(&fx, &corpus, &[]);
    fs::write(corpus.join("broken.json"), "{\"record_id\": ").unwrap();

    let o = intake(&["--json", "evaluate", s(&corpus)]);
    assert_eq!(code(&o), 0);
    let env = json(&o);
    assert_eq!((env["result"]["records"].as_u64(), env["result"]["skipped"].as_u64()), (Some(4), Some(1)));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json"));

    let o = intake(&["--json", "validate", s(&corpus)]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["result"]["problems"].as_array().unwrap().len(), 1);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&intake(&["evaluate", s(&empty)])), 1);
    assert_eq!(code(&intake(&["validate", s(&empty)])), 1);
    assert_eq!(code(&intake(&["stats", s(&empty)])), 1);
}

#[test]
fn evaluate_pairs_file() {
    let tmp = TempDir::new().unwrap();
    let pairs = tmp.path().join("pairs.csv");
    let mut rows = String::from("truth,pred\n");
    for (t, p, n) in [("a", "a", 25), ("a", "b", 5), ("b", "a", 10), ("b", "b", 10)] {
        for _ in 0..n {
            rows.push_str(&format!("{t},{p}\n"));
        }
    }
    fs::write(&pairs, rows).unwrap();
    let env = json(&intake(&["--json", "evaluate", "--pairs", s(&pairs)]));
    let m = &env["result"]["metrics"];
    assert_eq!(m["n"], 50);
    assert!((m["accuracy"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!((m["kappa"].as_f64().unwrap() - 0.16 / 0.46).abs() < 1e-12);
}

#[test]
fn sample_draws_the_requested_strata() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 100);
    let corpus = tmp.path().join("corpus");
    assert_eq!(code(&synthesize(&fx, &corpus, &["--seed", "2"])), 0);

    let sample = tmp.path().join("sample");
    let o = intake(&["--json", "sample", s(&corpus), "--strata", "12,13,25", "--seed", "5", "--out", s(&sample)]);
    assert_eq!(code(&o), 0);
    let env = json(&o);
    assert_eq!(env["result"]["record_ids"].as_array().unwrap().len(), 50);
    assert_eq!(record_files(&sample).len(), 50);
    let manifest: Value = serde_json::from_slice(&fs::read(sample.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["report"]["entries"].as_array().unwrap().len(), 50);

    let again = tmp.path().join("again");
    intake(&["sample", s(&corpus), "--strata", "12,13,25", "--seed", "5", "--out", s(&again)]);
    assert_eq!(dir_bytes(&sample), dir_bytes(&again));

    let o = intake(&["sample", s(&corpus), "--strata", "99,13,25", "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&intake(&["sample", s(&corpus), "--strata", "1,2", "--out", "x"])), 2);
}

fn ablation(dir: &Path, arms: &[&Path], out: &Path) -> Output {
    let arms: Vec<&str> = arms.iter().map(|p| s(p)).collect();
    intake(&[
        "ablate",
        "--config",
        s(&dir.join("config.toml")),
        "--profiles",
        s(&dir.join("profiles")),
        "--out",
        s(out),
        "--arms",
        &arms.join(","),
    ])
}

/// CSV rows with the `arm` column removed, grouped by arm.
fn rows_by_arm(path: &Path) -> BTreeMap<String, Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let arm_col = header.iter().position(|h| *h == "arm").unwrap();
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in lines {
        let mut cells: Vec<&str> = line.split(',').collect();
        let arm = cells.remove(arm_col).to_string();
        out.entry(arm).or_default().push(cells.join(","));
    }
    out
}

#[test]
fn ablate_writes_comparable_series() {
    let tmp = TempDir::new().unwrap();
    let ab = tmp.path().join("ab");
    assert_eq!(code(&intake(&["fixtures", "--out", s(&ab), "--count", "4", "--ablation"])), 0);
    let out = tmp.path().join("out");
    let o = ablation(&ab, &[&ab.join("cot.toml"), &ab.join("passive.toml")], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let header = |f: &str| fs::read_to_string(out.join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("trust_by_round.csv"), "round,mean_trust,arm,n");
    assert_eq!(header("delta_trust.csv"), "arm,record_id,delta_trust,rounds_to_saturation");
    let report: Value = serde_json::from_slice(&fs::read(out.join("ablation.json")).unwrap()).unwrap();
    let arm = |i: usize, k: &str| report["arms"][i][k].as_f64().unwrap();
    assert!(arm(0, "mean_delta_trust") > arm(1, "mean_delta_trust"));
    assert!(arm(0, "mean_rounds_to_saturation") < arm(1, "mean_rounds_to_saturation"));

    let twin = ab.join("cot_twin.toml");
    fs::copy(ab.join("cot.toml"), &twin).unwrap();
    let same = tmp.path().join("same");
    assert_eq!(code(&ablation(&ab, &[&ab.join("cot.toml"), &twin], &same)), 0);
    for f in ["trust_by_round.csv", "delta_trust.csv"] {
        let rows = rows_by_arm(&same.join(f));
        assert_eq!(rows.len(), 2);
        assert_eq!(rows["cot"], rows["cot_twin"], "{f}");
    }

    let again = tmp.path().join("again");
    ablation(&ab, &[&ab.join("cot.toml"), &twin], &again);
    assert_eq!(dir_bytes(&same), dir_bytes(&again));
}

#[test]
fn rate_scores_each_system() {
    let tmp = TempDir::new().unwrap();
    let fx = mixed(tmp.path(), 3);
    let (full, public) = (tmp.path().join("full"), tmp.path().join("public"));
    synthesize(&fx, &full, &[]);
    intake(&["export", s(&full), "--out", s(&public), "--public"]);
    let o = intake(&["--json", "rate", "--config", s(&fx.join("config.toml")), s(&full), s(&public), "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let env = json(&o);
    let ratings = env["result"]["ratings"].as_array().unwrap();
    assert_eq!(ratings.len(), 6);
    assert_eq!(env["result"]["failed"], 0);
    for r in ratings {
        let dims = r["score"]["dimensions"].as_object().unwrap();
        assert_eq!(dims.len(), 5);
        assert!(dims.values().all(|d| (1..=10).contains(&d["score"].as_u64().unwrap())));
    }
    let rows = env["result"]["table"]["rows"].as_object().unwrap();
    assert_eq!(rows.keys().collect::<Vec<_>>(), ["full", "public"]);
}

#[test]
fn usage_errors_become_envelopes_under_json() {
    let o = intake(&["--json", "sample", "somewhere"]);
    assert_eq!(code(&o), 2);
    let env = json(&o);
    assert_eq!(env["error"]["kind"], "usage");
    assert!(env["error"]["message"].as_str().unwrap().contains("--out"));
}
