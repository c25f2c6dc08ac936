use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use liprec::Report;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_liprec");

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn liprec(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run(problem: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        problem.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    liprec(&args)
}

fn read_report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn piecewise_fixture_task_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&problems().join("example3.json"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_report(&out);
    assert_eq!(r.task, "example3");
    let names: Vec<_> = r.assertions.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "unit_interval_certified_at_1",
            "pair_1_2_not_injective",
            "full_interval_not_lipschitz",
            "gappy_set_certified_at_2",
            "gappy_set_violated_at_1_99"
        ]
    );
    assert!(r.passed());
}

#[test]
fn bundled_problems_pass() {
    let dir = TempDir::new().unwrap();
    for entry in std::fs::read_dir(problems()).unwrap() {
        let path = entry.unwrap().path();
        let out = dir.path().join("r.json");
        let o = run(&path, &out, &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(read_report(&out).passed());
    }
}

#[test]
fn square_operator_is_exact_inversion() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(
        run(&problems().join("theorem3_square.json"), &out, &[])
            .status
            .code(),
        Some(0)
    );
    let r = read_report(&out);
    let exact = r
        .assertions
        .iter()
        .find(|a| a.name == "exact_inversion_error")
        .unwrap();
    assert!(exact.observed <= 1e-8);
    assert_eq!(r.details["t"], 0);
    assert_eq!(r.details["rank_reduced"], false);
}

#[test]
fn failed_assertion_exits_2_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(
        &problems().join("certify_piecewise.json"),
        &out,
        &["--set", "omega=1.5"],
    );
    assert_eq!(o.status.code(), Some(2));
    let r = read_report(&out);
    assert!(!r.passed());
    assert_eq!(r.details["witness"], serde_json::json!([1, 2]));
}

#[test]
fn oversized_rip_exits_1() {
    let dir = TempDir::new().unwrap();
    let row: Vec<String> = (0..60)
        .map(|k| format!("{}", (k as f64 * 0.37).sin()))
        .collect();
    let rows: Vec<String> = (0..6).map(|_| format!("[{}]", row.join(","))).collect();
    let problem = write(
        &dir,
        "p.json",
        &format!(
            r#"{{"operator": {{"type": "matrix", "rows": 6, "cols": 60, "data": [{}]}}, "task": "rip", "params": {{"S": 6}}}}"#,
            rows.join(",")
        ),
    );
    let out = dir.path().join("r.json");
    let o = run(&problem, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("TooLargeError"));
    assert!(!out.exists());
}

#[test]
fn malformed_json_reports_position() {
    let dir = TempDir::new().unwrap();
    let problem = write(
        &dir,
        "p.json",
        "{\n  \"task\": \"mwet\",\n  \"params\": {\"omega\": }\n}",
    );
    let o = run(&problem, &dir.path().join("r.json"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn schema_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let problem = write(
        &dir,
        "p.json",
        r#"{"task": "mwet", "params": {"epsilon": "big"}}"#,
    );
    let o = run(&problem, &dir.path().join("r.json"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.epsilon"));
}

#[test]
fn dimension_mismatch_exits_1() {
    let dir = TempDir::new().unwrap();
    let problem = write(
        &dir,
        "p.json",
        r#"{"operator": {"type": "matrix", "rows": 1, "cols": 2, "data": [[1.0, 0.0]]},
            "signals": {"type": "list", "data": [[1.0, 2.0], [3.0]]}, "task": "certify"}"#,
    );
    let o = run(&problem, &dir.path().join("r.json"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("signal 1 has dimension 1"));

    let problem = write(
        &dir,
        "q.json",
        r#"{"operator": {"type": "matrix", "rows": 2, "cols": 2, "data": [[1.0, 0.0]]}, "task": "rip", "params": {"S": 1}}"#,
    );
    assert_eq!(
        run(&problem, &dir.path().join("r.json"), &[]).status.code(),
        Some(1)
    );
}

#[test]
fn reports_are_deterministic_apart_from_runtime() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        assert_eq!(
            run(&problems().join("theorem3_wide.json"), out, &[])
                .status
                .code(),
            Some(0)
        );
    }
    let (mut ra, mut rb) = (read_report(&a), read_report(&b));
    ra.metadata.runtime_ms = 0.0;
    rb.metadata.runtime_ms = 0.0;
    assert_eq!(ra, rb);
}

#[test]
fn trace_lists_assertions() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.csv");
    let o = run(
        &problems().join("theorem1_piecewise.json"),
        &dir.path().join("r.json"),
        &["--trace", trace.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("name,passed,observed,bound"));
    assert!(lines.any(|l| l.starts_with("max_recovery_error,true,")));
}

#[test]
fn selftest_filter_and_negative_control() {
    let o = liprec(&["selftest", "--filter", "example3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS] criterion 7"));
    let o = liprec(&["selftest", "--filter", "example3", "--corrupt-tolerance"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        liprec(&["selftest", "--filter", "nothing"]).status.code(),
        Some(1)
    );
}

#[test]
fn selftest_reports_repeat_modulo_timing() {
    let dir = TempDir::new().unwrap();
    let strip = |p: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["runtime_ms"] = 0.into();
        for r in v["results"].as_array_mut().unwrap() {
            r["runtime_ms"] = 0.into();
        }
        v
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = liprec(&[
            "selftest",
            "--filter",
            "theorem1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(strip(&a), strip(&b));
}
