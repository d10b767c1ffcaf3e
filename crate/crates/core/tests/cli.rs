use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mmqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmqp"))
        .args(args)
        .output()
        .expect("run mmqp")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn solve_example1_reports_optimal() {
    let out = mmqp(&["solve", &fixture("example1.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["alpha"], serde_json::json!([3]));
    assert_eq!(v["f"].as_f64(), Some(6.5));
    let z: Vec<f64> = serde_json::from_value(v["z"].clone()).unwrap();
    let expected = [2.0, -1.0, 0.0, 3.0, 0.0, -2.0];
    assert!(z.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn infeasible_fixture_exits_two() {
    let out = mmqp(&["solve", "@infeasible"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["status"], "infeasible");
}

#[test]
fn input_errors_exit_four() {
    assert_eq!(mmqp(&["solve", "/nonexistent/problem.json"]).status.code(), Some(4));
    assert_eq!(mmqp(&["solve", "@nope"]).status.code(), Some(4));
    assert_eq!(mmqp(&["solve", "--bogus"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"nx\": 1}").unwrap();
    assert_eq!(mmqp(&["solve", &bad]).status.code(), Some(4));
    assert_eq!(mmqp(&["--help"]).status.code(), Some(0));
}

#[test]
fn forced_sequence_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = path(dir.path(), "trace.csv");
    let json_path = path(dir.path(), "trace.json");
    let out = mmqp(&[
        "solve",
        "@example1",
        "--force-sequence",
        "4,5,2,3",
        "--trace",
        &csv_path,
        "--trace-json",
        &json_path,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "iter"));
    let rows = rdr.records().count();
    assert_eq!(rows, 8);
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(trace.as_array().map(Vec::len), Some(rows));
}

#[test]
fn trace_table_for_forced_replay() {
    let out = mmqp(&["trace", "@example1", "--force-sequence", "4,5,2,3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("drop constraint 4"), "{text}");
    assert!(text.contains("13/2"), "{text}");
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn generate_then_solve_recovers_planted_point() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "p.json");
    let args = ["generate", "--type", "2", "--nx", "10", "--ny", "20", "--m", "30", "--na", "10", "--seed", "7", "-o", &file];
    assert_eq!(mmqp(&args).status.code(), Some(0));
    let planted: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let z_star: Vec<f64> = serde_json::from_value(planted["z_star"].clone()).unwrap();
    let out = mmqp(&["solve", &file]);
    assert_eq!(out.status.code(), Some(0));
    let z: Vec<f64> = serde_json::from_value(stdout_json(&out)["z"].clone()).unwrap();
    let err = z.iter().zip(&z_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "max error {err}");
    let v = mmqp(&["verify", &file]);
    assert_eq!(v.status.code(), Some(0));
}

#[test]
fn verify_accepts_and_rejects() {
    let out = mmqp(&["verify", &fixture("example1.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("example1.json")).unwrap()).unwrap();
    v["z_star"][0] = serde_json::json!(2.5);
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(mmqp(&["verify", &bad]).status.code(), Some(1));
}

#[test]
fn enumerate_and_fixture_commands() {
    let out = mmqp(&["enumerate", "@example2"]);
    assert_eq!(out.status.code(), Some(0));
    let f = mmqp(&["fixture", "example1"]);
    assert_eq!(f.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&f.stdout).unwrap();
    assert_eq!(v["nx"], 2);
}

#[test]
fn deterministic_bench_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, jobs: &str| {
        let out = path(dir.path(), &format!("{tag}.csv"));
        let reps = path(dir.path(), &format!("{tag}-reps.csv"));
        let status = mmqp(&[
            "bench", "--type", "1", "--scale", "3,6,9,3", "--scale", "4,8,12,4", "--reps", "4",
            "--seed", "11", "--jobs", jobs, "--deterministic", "-o", &out, "--reps-out", &reps,
        ]);
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        (std::fs::read(out).unwrap(), std::fs::read(reps).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("nx,ny,m,na,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn attack_writes_result_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "attack.csv");
    let status = mmqp(&[
        "attack",
        "--prices",
        &fixture("market/prices.csv"),
        "--volumes",
        &fixture("market/volumes.csv"),
        "--b-grid",
        "0,6",
        "--trials",
        "20",
        "-o",
        &out,
    ]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(headers, ["b", "method", "q_before", "q_after", "rho", "active_count"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let rho: f64 = r[4].parse().unwrap();
        assert!(rho >= 0.0);
    }
}
