use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn catchment(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catchment"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("CATCHMENT_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_round_trip() {
    let dir = TempDir::new().unwrap();
    let rel = data().join("figure1.rel");
    ok(&catchment(dir.path(), &["ingest", path(&rel)]));
    let first = fs::read_to_string(dir.path().join("topology.txt")).unwrap();
    assert!(first.starts_with("# catchment-topology v1\n"));
    assert!(first.contains("edge 1 3 p2c"));

    let again = TempDir::new().unwrap();
    let canonical = dir.path().join("topology.txt");
    ok(&catchment(again.path(), &["ingest", path(&canonical)]));
    assert_eq!(fs::read_to_string(again.path().join("topology.txt")).unwrap(), first);
}

#[test]
fn ingest_reports_bad_line() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.rel");
    fs::write(&bad, "1|2|-1\n2|3|7\n").unwrap();
    let o = catchment(dir.path(), &["ingest", path(&bad)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn run_writes_figure1_table() {
    let dir = TempDir::new().unwrap();
    ok(&catchment(dir.path(), &["run", path(&data().join("figure1.toml"))]));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv, "node,f\n1,m1\n2,m2\n3,m1\n4,0\n5,m2\n6,0\n7,m1\n8,0\n");
    let json = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(json.contains("\"certain-inference\""));
}

#[test]
fn probabilistic_mode_adds_columns() {
    let dir = TempDir::new().unwrap();
    let s = data().join("figure1.toml");
    ok(&catchment(dir.path(), &["run", path(&s), "--mode", "probabilistic"]));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("node,f,pi_m1,pi_m2,pi_state\n"));
    assert!(csv.contains("\n4,0,0.5,0.5,forward\n"));
}

#[test]
fn oracle_scenario() {
    let dir = TempDir::new().unwrap();
    ok(&catchment(dir.path(), &["run", path(&data().join("figure1-oracles.toml"))]));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.contains("\n6,m1,"));
    assert!(csv.contains("\n4,m1,"));
}

#[test]
fn missing_oracle_file_fails() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.toml");
    let text = fs::read_to_string(data().join("figure1-oracles.toml"))
        .unwrap()
        .replace("figure1-oracles.csv", "absent.csv")
        .replace("figure1.rel", path(&data().join("figure1.rel")));
    fs::write(&s, text).unwrap();
    let o = catchment(dir.path(), &["run", path(&s)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn data_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("s.toml");
    fs::copy(data().join("figure1.toml"), &s).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_catchment"))
        .args(["--out", path(dir.path()), "run", path(&s)])
        .env("CATCHMENT_DATA_DIR", data())
        .output()
        .unwrap();
    ok(&o);
}

#[test]
fn plan_with_baseline_and_optimum() {
    let dir = TempDir::new().unwrap();
    let s = data().join("figure1-plan.toml");
    let stdout = ok(&catchment(dir.path(), &["plan", path(&s), "--exact-guard", "2"]));
    assert!(stdout.contains("greedy gap 0"));
    let csv = fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "rank,node,expected_nc_after,random_baseline_nc");
    assert!(rows[1].starts_with("1,4,7.5,"));
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let cols: Vec<f64> = row.split(',').skip(2).map(|c| c.parse().unwrap()).collect();
        assert!(cols[0] >= cols[1]);
    }
}

#[test]
fn zero_budget_plan_is_empty() {
    let dir = TempDir::new().unwrap();
    let s = data().join("figure1-plan.toml");
    ok(&catchment(dir.path(), &["plan", path(&s), "--budget", "0"]));
    let csv = fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn plan_rejects_unknown_candidate() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("cands.txt");
    fs::write(&c, "4\n99\n").unwrap();
    let s = data().join("figure1-plan.toml");
    let o = catchment(dir.path(), &["plan", path(&s), "--candidates", path(&c)]);
    assert!(!o.status.success());
}

#[test]
fn exact_guard_reports_capacity() {
    let dir = TempDir::new().unwrap();
    let s = data().join("figure1-plan.toml");
    let o = catchment(dir.path(), &["plan", path(&s), "--budget", "3", "--exact-guard", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
}

#[test]
fn sweep_writes_each_k() {
    let dir = TempDir::new().unwrap();
    let s = data().join("figure1.toml");
    let stdout = ok(&catchment(dir.path(), &["run", path(&s), "--sp", "--sweep", "m2:2"]));
    assert!(stdout.starts_with("k,certain_m2,certain_nodes\n"));
    for k in 0..=2 {
        assert!(dir.path().join(format!("report-k{k}.csv")).exists());
    }
    let o = catchment(dir.path(), &["run", path(&s), "--sweep", "m2:-1"]);
    assert!(!o.status.success());
}

#[test]
fn same_seed_same_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let s = data().join("figure1-plan.toml");
    for d in [&a, &b] {
        ok(&catchment(d.path(), &["--seed", "5", "run", path(&s)]));
    }
    for f in ["report.json", "report.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn validate_quick_passes() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(&catchment(dir.path(), &["validate", "quick"]));
    assert!(stdout.contains("all suites passed"));
}

#[test]
fn validate_catches_injected_bug() {
    let dir = TempDir::new().unwrap();
    let o = catchment(dir.path(), &["validate", "quick", "--inject-bug"]);
    assert_eq!(o.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL figure1"));
    assert!(stdout.contains("FAIL certain-soundness"));
}
