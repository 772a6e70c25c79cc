use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "subject_id,task_id,valence,arousal,dominance,likeness\n";

fn glba(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glba"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        stdout(o),
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Task `a` rated by four subjects, task `b` by two.
fn small_responses(dir: &Path) {
    let mut body = HEADER.to_string();
    for (s, v) in [("s1", 1), ("s2", 2), ("s3", 8), ("s4", 9)] {
        body += &format!("{s},a,{v},5,5,5\n");
    }
    body += "s1,b,3,5,5,5\ns2,b,4,5,5,5\n";
    fs::write(dir.join("responses.csv"), body).unwrap();
}

#[test]
fn build_graph_reports_dropped_tasks() {
    let dir = TempDir::new().unwrap();
    small_responses(dir.path());
    let out = glba(dir.path(), &["build-graph", "--responses", "responses.csv"]);
    ok(&out);
    assert_eq!(
        stdout(&out).trim(),
        "1 tasks, 4 subjects, 12 edges (1 tasks dropped with fewer than 4 raters)"
    );
    let graph = fs::read_to_string(dir.path().join("graph.tsv")).unwrap();
    assert!(graph.starts_with("# dropped_tasks=1\n"));

    let out = glba(dir.path(), &["--min-raters", "2", "build-graph", "--responses", "responses.csv"]);
    ok(&out);
    assert!(stdout(&out).starts_with("2 tasks, 4 subjects, 14 edges (0 tasks dropped"));
}

#[test]
fn missing_column_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "subject_id,task_id,valence\ns1,a,3\n").unwrap();
    let out = glba(dir.path(), &["build-graph", "--responses", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("arousal"));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let out = glba(dir.path(), &["build-graph", "--responses", "absent.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gamma_and_grid_conflict() {
    let dir = TempDir::new().unwrap();
    let out = glba(dir.path(), &["--gamma", "0.3", "--gamma-grid", "0.3:0.4:2", "fit", "--graph", "g.tsv"]);
    assert!(!out.status.success());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    small_responses(dir.path());
    fs::write(dir.path().join("run.conf"), "tolerance = 1e-6\n").unwrap();
    let out = glba(dir.path(), &["--config", "run.conf", "build-graph", "--responses", "responses.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

fn pipeline(dir: &Path) {
    let steps: [&[&str]; 6] = [
        &["simulate", "ratings", "--subjects", "30", "--tasks", "150", "--spammers", "3", "--seed", "5"],
        &["build-graph", "--responses", "responses.csv"],
        &["--gamma-grid", "0.3:0.48:2", "fit", "--graph", "graph.tsv"],
        &["rank", "--fits", "fit_gamma_0.3000.tsv", "fit_gamma_0.4800.tsv"],
        &["pr", "--ranking", "ranking.tsv", "--annotated", "planted.txt", "--top", "3,6"],
        &["baseline-ds", "--responses", "responses.csv"],
    ];
    for args in steps {
        ok(&glba(dir, args));
    }
}

#[test]
fn end_to_end_pipeline_is_reproducible() {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    pipeline(first.path());
    pipeline(second.path());

    let ranking = fs::read_to_string(first.path().join("ranking.tsv")).unwrap();
    let header = ranking.lines().next().unwrap();
    assert_eq!(header.split('\t').collect::<Vec<_>>(), [
        "method", "rank", "subject_id", "score", "alpha", "beta", "beta_variance"
    ]);
    assert_eq!(ranking.lines().count(), 31);

    let pr = fs::read_to_string(first.path().join("pr.tsv")).unwrap();
    assert!(pr.lines().any(|l| l.starts_with("# top_3=")));
    assert!(pr.lines().any(|l| l.starts_with("# top_6=")));

    for name in ["graph.tsv", "fit_gamma_0.3000.tsv", "trace_gamma_0.4800.tsv", "ranking.tsv", "pr.tsv", "ranking_ds.tsv"] {
        let a = fs::read(first.path().join(name)).unwrap();
        let b = fs::read(second.path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn manifest_records_and_verifies_inputs() {
    let dir = TempDir::new().unwrap();
    small_responses(dir.path());
    ok(&glba(dir.path(), &["--delta", "0.25", "build-graph", "--responses", "responses.csv"]));
    let manifest = fs::read_to_string(dir.path().join("manifest_build-graph.txt")).unwrap();
    assert!(manifest.lines().any(|l| l.starts_with("input ") && l.ends_with(" responses.csv")));
    assert!(manifest.lines().any(|l| l.starts_with("output ") && l.ends_with(" graph.tsv")));
    assert!(manifest.contains("0.25"));

    let out = glba(dir.path(), &["verify-manifest", "manifest_build-graph.txt"]);
    ok(&out);
    assert_eq!(stdout(&out).trim(), "1 inputs verified");

    fs::write(dir.path().join("responses.csv"), HEADER).unwrap();
    let out = glba(dir.path(), &["verify-manifest", "manifest_build-graph.txt"]);
    assert!(!out.status.success());
}

#[test]
fn injected_spammers_are_listed() {
    let dir = TempDir::new().unwrap();
    ok(&glba(dir.path(), &["simulate", "ratings", "--subjects", "20", "--tasks", "60", "--spammers", "2"]));
    fs::rename(dir.path().join("responses.csv"), dir.path().join("base.csv")).unwrap();
    ok(&glba(
        dir.path(),
        &["inject", "--responses", "base.csv", "--spammers", "3", "--tasks-per-spammer", "10"],
    ));
    let listed = fs::read_to_string(dir.path().join("spammers.txt")).unwrap();
    assert_eq!(listed.lines().count(), 3);
    let responses = fs::read_to_string(dir.path().join("responses.csv")).unwrap();
    for id in listed.lines() {
        assert_eq!(responses.lines().filter(|l| l.starts_with(&format!("{id},"))).count(), 10);
    }
}
