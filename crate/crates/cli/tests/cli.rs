//! End-to-end tests of the `supervisim` binary: exit codes, artifact
//! naming, manifest integrity, and agreement between emitted files and the
//! library they are derived from.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use supervisim_core::{run_simulation, Policy, SimulationConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supervisim"))
        .args(args)
        .env_remove("SUPERVISIM_OUT")
        .output()
        .expect("spawn supervisim")
}

fn run_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supervisim"))
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn supervisim")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn file_names(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|entry| entry.expect("entry").file_name().to_string_lossy().into_owned())
        .collect()
}

fn write_series(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("series.csv");
    fs::write(&path, body).expect("write series");
    path
}

// ── Exit codes ───────────────────────────────────────────────────────────

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"][..], &["simulate", "--help"][..]] {
        let output = run(args);
        assert_eq!(exit_code(&output), 0, "{args:?}");
        assert!(!output.stdout.is_empty(), "{args:?} prints to stdout");
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["frobnicate"][..],
        &["simulate", "--no-such-flag"][..],
        &["batch", "--runs", "0"][..],
    ] {
        assert_eq!(exit_code(&run(args)), 1, "{args:?}");
    }
}

#[test]
fn invalid_inputs_exit_one() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = tmp.path().join("out");
    let out = out.to_str().expect("utf-8");

    let bad_config = tmp.path().join("bad.json");
    fs::write(&bad_config, r#"{"duration_months": 0}"#).expect("write config");
    let output = run(&["simulate", "--config", bad_config.to_str().expect("utf-8"), "--out", out]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("duration"), "mentions the bad field: {}", stderr(&output));

    let output = run(&["simulate", "--stamp", "a/b", "--out", out]);
    assert_eq!(exit_code(&output), 1, "path separators in the stamp");

    let series = write_series(tmp.path(), "month,count\n3,10\n2,11\n");
    let output = run(&["forecast", "--input", series.to_str().expect("utf-8"), "--out", out]);
    assert_eq!(exit_code(&output), 1, "non-increasing months");

    let series = write_series(tmp.path(), "month,count\n0,10\n1,11\n");
    let output = run(&[
        "forecast", "--input", series.to_str().expect("utf-8"), "--alpha", "0", "--out", out,
    ]);
    assert_eq!(exit_code(&output), 1, "alpha outside (0, 1]");
}

#[test]
fn io_failures_exit_two() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = tmp.path().join("out");
    let out = out.to_str().expect("utf-8");

    let missing = tmp.path().join("nope.json");
    let missing = missing.to_str().expect("utf-8");
    assert_eq!(exit_code(&run(&["simulate", "--config", missing, "--out", out])), 2);
    assert_eq!(exit_code(&run(&["forecast", "--input", missing, "--out", out])), 2);
    assert_eq!(exit_code(&run(&["replay", "--input", missing, "--out", out])), 2);

    // /dev/null is not a directory, so creating the output tree fails.
    let output = run(&["simulate", "--seed", "1", "--out", "/dev/null/x"]);
    assert_eq!(exit_code(&output), 2, "{}", stderr(&output));
}

// ── Artifact naming and layout ───────────────────────────────────────────

#[test]
fn batch_emits_one_report_csv_per_run_plus_summary_and_manifest() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("out");
    let output = run(&[
        "batch", "--seed", "5", "--runs", "3", "--policy", "all", "--out",
        dir.to_str().expect("utf-8"), "--stamp", "t",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let names = file_names(&dir);
    assert_eq!(names.len(), 14, "12 report CSVs + batch summary + manifest: {names:?}");
    assert!(names.contains("batch_summary_t.json"));
    assert!(names.contains("manifest_t.json"));
    for tag in [
        "non-prioritized",
        "random_fairness",
        "prioritized",
        "diversity_prioritized",
    ] {
        for run_index in ["00", "01", "02"] {
            let name = format!("{tag}_simulation.{run_index}_t.csv");
            assert!(names.contains(&name), "missing {name}");
        }
    }
}

#[test]
fn simulate_layout_honours_the_output_env_var() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("from-env");
    let output = run_with_env(
        &["simulate", "--seed", "2", "--policy", "diversity", "--stamp", "t"],
        "SUPERVISIM_OUT",
        dir.to_str().expect("utf-8"),
    );
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let names = file_names(&dir);
    assert_eq!(
        names,
        BTreeSet::from([
            "diversity_prioritized_simulation.00_t.csv".to_string(),
            "diversity_prioritized_monthly.00_t.csv".to_string(),
            "diversity_prioritized_summary.00_t.json".to_string(),
            "manifest_t.json".to_string(),
        ])
    );
}

// ── Manifest integrity ───────────────────────────────────────────────────

#[test]
fn manifest_lists_every_artifact_with_its_digest() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("out");
    let output = run(&[
        "simulate", "--seed", "8", "--policy", "priority", "--feedback", "--out",
        dir.to_str().expect("utf-8"), "--stamp", "t",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("manifest_t.json")).expect("manifest"))
            .expect("valid JSON");
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 8);
    assert_eq!(manifest["stamp"], "t");
    assert_eq!(manifest["out_dir"], dir.to_str().expect("utf-8"));

    let listed = manifest["files"].as_array().expect("files array");
    let mut listed_names = BTreeSet::new();
    for entry in listed {
        let name = entry["name"].as_str().expect("name").to_string();
        let bytes = fs::read(dir.join(&name)).expect("listed file exists");
        assert_eq!(entry["bytes"].as_u64().expect("size"), bytes.len() as u64, "{name}");
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"].as_str().expect("digest"), digest, "{name}");
        listed_names.insert(name);
    }

    let mut on_disk = file_names(&dir);
    on_disk.remove("manifest_t.json");
    assert_eq!(listed_names, on_disk, "manifest covers exactly the emitted artifacts");
}

// ── Emitted files agree with the library ─────────────────────────────────

#[test]
fn report_csv_matches_the_library_run() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("out");
    let output = run(&[
        "simulate", "--seed", "9", "--policy", "random", "--out",
        dir.to_str().expect("utf-8"), "--stamp", "t",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let config = SimulationConfig {
        policy: Policy::Random,
        master_seed: 9,
        ..SimulationConfig::default()
    };
    let expected = run_simulation(&config, false).expect("library run");

    let mut reader = csv::Reader::from_path(dir.join("random_fairness_simulation.00_t.csv"))
        .expect("report CSV");
    assert_eq!(
        reader.headers().expect("header"),
        &csv::StringRecord::from(vec![
            "report_id",
            "arrival_month",
            "processed_month",
            "source",
            "risk_type",
            "supervision_cost",
            "accessibility",
            "potential_damage",
            "priority",
        ])
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.expect("row")).collect();
    assert_eq!(rows.len(), expected.reports.len(), "one row per generated report");

    let processed_rows = rows.iter().filter(|row| !row[2].is_empty()).count();
    let processed = expected.reports.iter().filter(|r| r.processed_month.is_some()).count();
    assert_eq!(processed_rows, processed);

    // Rows are processed reports in (month, id) order, then the backlog.
    let first = &rows[0];
    assert_eq!(first[2].parse::<u32>().expect("month"), expected.config.observation_months);
    let backlog_ids: Vec<u64> = rows[processed_rows..]
        .iter()
        .map(|row| row[0].parse().expect("id"))
        .collect();
    assert!(backlog_ids.windows(2).all(|w| w[0] < w[1]), "backlog sorted by id");
}

#[test]
fn forecast_labels_continue_the_input_calendar() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("out");
    let series = write_series(tmp.path(), "month,count\n2024-01,10\n2024-02,12\n2024-03,15\n");
    let output = run(&[
        "forecast", "--input", series.to_str().expect("utf-8"), "--horizon", "3", "--out",
        dir.to_str().expect("utf-8"), "--stamp", "t",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let mut reader = csv::Reader::from_path(dir.join("forecast_t.csv")).expect("forecast CSV");
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.expect("row")).collect();
    let months: Vec<&str> = rows.iter().map(|row| &row[0]).collect();
    assert_eq!(months, ["2024-04", "2024-05", "2024-06"]);
    for row in &rows {
        let worst: f64 = row[1].parse().expect("worst");
        let average: f64 = row[2].parse().expect("average");
        let best: f64 = row[3].parse().expect("best");
        assert!(best <= average && average <= worst, "{row:?}");
    }
}

#[test]
fn replay_accepts_a_renamed_schema() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path().join("out");

    let corpus = tmp.path().join("corpus.csv");
    let mut body = String::from("id,when,rounds,tox,sev,obs,ida,ins,thr,sex\n");
    for i in 0..8 {
        let month = if i < 4 { "03" } else { "04" };
        body.push_str(&format!(
            "x{i},2024-{month}-0{},{},0.1,0,0,0,0,0,0\n",
            1 + i,
            2 + i % 3
        ));
    }
    fs::write(&corpus, body).expect("write corpus");

    let schema = tmp.path().join("schema.json");
    fs::write(
        &schema,
        serde_json::json!({
            "record_id": "id",
            "timestamp": "when",
            "turns": "rounds",
            "categories": {
                "toxicity": "tox",
                "severe_toxicity": "sev",
                "obscene": "obs",
                "identity_attack": "ida",
                "insult": "ins",
                "threat": "thr",
                "sexual_explicit": "sex",
            },
        })
        .to_string(),
    )
    .expect("write schema");

    let output = run(&[
        "replay", "--input", corpus.to_str().expect("utf-8"), "--schema",
        schema.to_str().expect("utf-8"), "--policy", "fifo", "--out",
        dir.to_str().expect("utf-8"), "--stamp", "t",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(String::from_utf8_lossy(&output.stdout).contains("8"), "reports all 8 records");
}
