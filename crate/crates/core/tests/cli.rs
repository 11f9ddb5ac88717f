use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dyadic_factor::cli::{read_artifact, write_artifact};
use dyadic_factor::dyadic::{Branch, BranchSet};
use dyadic_factor::mixed::{xdiagonal_distance, MixedOperator};
use dyadic_factor::multiplier::{stopping_projection, HaarMultiplier};
use dyadic_factor::scalar::{self, ratio};
use dyadic_factor::stepfun::Space;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-factor")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary_value<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace().find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('='))).unwrap()
}

#[test]
fn triple_norm_of_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("id.json");
    write_artifact(&f, "multiplier", &HaarMultiplier::identity(4)).unwrap();
    let o = run(&["triple-norm", path(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "triple=1 opnorm=1 ratio=1");
}

#[test]
fn triple_norm_of_stopping_projection() {
    let dir = tempfile::tempdir().unwrap();
    let mut set = BranchSet::new(4);
    for mask in [0b000, 0b011, 0b101] {
        set.insert(Branch::new(4, mask).unwrap());
    }
    let f = dir.path().join("p.json");
    write_artifact(&f, "multiplier", &stopping_projection(&set).unwrap()).unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["triple-norm", path(&f), "--output", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary_value(&stdout(&o), "ratio"), "1");
    let report: serde_json::Value = read_artifact(&out, "triple-norm-report").unwrap();
    assert_eq!(report["triple"], "1");
}

#[test]
fn triple_norm_ratio_of_random_file_is_between_one_and_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = HaarMultiplier::from_fn(5, |i| ratio((i.code() as i64 * 37) % 11 - 5, 4));
    let f = dir.path().join("d.json");
    fs::write(&f, serde_json::to_string(&d).unwrap()).unwrap();
    let o = run(&["triple-norm", path(&f)]);
    let r = scalar::parse(summary_value(&stdout(&o), "ratio")).unwrap();
    assert!(r >= ratio(1, 1) && r <= ratio(3, 1));
}

#[test]
fn parse_errors_name_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    fs::write(&f, "{\"depth\": 2,\n \"entries\": {\"1\": 1}}").unwrap();
    let o = run(&["triple-norm", path(&f)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");
    let g = dir.path().join("bad_entry.json");
    fs::write(&g, r#"{"depth": 1, "entries": {"1": "1/0"}}"#).unwrap();
    let err = String::from_utf8_lossy(&run(&["triple-norm", path(&g)]).stderr).into_owned();
    assert!(err.contains("entries.1"), "{err}");
}

#[test]
fn pipeline_on_a_scalar_echoes_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.json");
    write_artifact(&f, "mixed-operator", &MixedOperator::scalar(3, 2, Space::l1(), ratio(3, 5)).unwrap()).unwrap();
    let out = dir.path().join("run");
    let o = run(&["pipeline", path(&f), "--seed", "1", "--output", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("lambda=")).unwrap();
    assert_eq!(summary_value(line, "lambda"), "3/5");
    assert_eq!(summary_value(line, "epsilon_total"), "0");
    let report: serde_json::Value = read_artifact(&out.join("pipeline.json"), "pipeline-report").unwrap();
    assert_eq!(report["verified"], true);
    assert!(out.join("certificate.json").exists() && out.join("05-collapse.json").exists());
}

#[test]
fn pipeline_budget_failure_keeps_the_partial_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["pipeline", "--family", "planted", "--seed", "3", "--strict-collapse", "--output", path(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("failed at stage collapse"));
    assert!(out.join("01-diagonalize.json").exists() && !out.join("certificate.json").exists());
    let report: serde_json::Value = read_artifact(&out.join("pipeline.json"), "pipeline-report").unwrap();
    assert_eq!(report["failure"]["stage"], "collapse");
    assert_eq!(report["exit_code"], 2);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())).collect()
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let base = ["pipeline", "--family", "contraction", "--depth-outer", "3", "--depth-inner", "2", "--seed", "5"];
    let oa = run(&[&base[..], &["--jobs", "1", "--output", path(&a)]].concat());
    let ob = run(&[&base[..], &["--jobs", "3", "--output", path(&b)]].concat());
    assert_eq!(oa.status.code(), ob.status.code());
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn check_lemmas_table() {
    let o = run(&["check-lemmas", "--seed", "2", "--trials", "30", "--max-depth", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for suite in ["sandwich", "branch-variation", "concentration", "tensor-collapse", "certificate-algebra"] {
        let row = s.lines().find(|l| l.starts_with(suite)).unwrap();
        assert!(row.ends_with("PASS"), "{row}");
    }
}

#[test]
fn check_lemmas_catches_the_injected_fault() {
    let o = run(&["check-lemmas", "--seed", "2", "--trials", "200", "--inject-fault", "triple-norm-off-by-one"]);
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    assert!(s.lines().find(|l| l.starts_with("sandwich")).unwrap().ends_with("FAIL"));
    let line = s.lines().find(|l| l.starts_with("counterexample for sandwich: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim_start_matches("counterexample for sandwich: ")).unwrap();
    let d: HaarMultiplier = serde_json::from_value(v["multiplier"].clone()).unwrap();
    assert!(d.depth >= 2);
}

#[test]
fn check_lemmas_with_no_trials_is_empty() {
    let o = run(&["check-lemmas", "--seed", "0", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn random_operator_families() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    assert_eq!(run(&["random-operator", "--family", "identity", "--seed", "0", "--output", path(&id)]).status.code(), Some(0));
    let t: MixedOperator = read_artifact(&id, "mixed-operator").unwrap();
    assert!(t.is_identity());

    let (p, q) = (dir.path().join("p.json"), dir.path().join("q.json"));
    let args = ["random-operator", "--family", "planted", "--mass", "0.3", "--depth-outer", "3", "--seed", "8", "--output"];
    let o = run(&[&args[..], &[path(&p)]].concat());
    assert!(stdout(&o).contains("verified on load"));
    run(&[&args[..], &[path(&q)]].concat());
    assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
    let t: MixedOperator = read_artifact(&p, "mixed-operator").unwrap();
    assert!(xdiagonal_distance(&t) <= ratio(3, 10));
}

#[test]
fn seed_is_required() {
    assert_eq!(run(&["random-operator", "--family", "contraction"]).status.code(), Some(1));
}
