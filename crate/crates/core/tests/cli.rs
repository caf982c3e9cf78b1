use std::path::Path;
use std::process::{Command, Output};

fn qleak(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qleak"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.conf");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const NARROW: &str = "victim_port = 40500\nport_lo = 40000\nport_hi = 40999\n";

#[test]
fn run_succeeds_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), NARROW);
    let out = qleak(&["run", "--config", &conf, "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("scenario,scan_time_s,queries,"));
    assert!(summary.trim_end().ends_with(",true"));
    assert!(dir.path().join("series.csv").exists());
}

#[test]
fn failed_scan_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), &format!("{NARROW}throttle = 1/100ms\n"));
    let out = qleak(&["run", "--config", &conf], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.trim_end().ends_with(",false"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "uplink = 0\n");
    let out = qleak(&["run", "--config", &conf], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":1: uplink"), "{err}");

    let out = qleak(&["run", "--config", "idle", "--pipeline", "full_netfilter"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qleak(&["run", "--config", "no-such-scenario"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qleak(&["run", "--pipeline", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qleak(&["tables", "--table", "9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_per_seed_and_aggregate_rows() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), NARROW);
    let out = qleak(&["sweep", "--config", &conf, "--seed", "1", "--runs", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.lines().nth(1).unwrap().starts_with("3,1.000000,"));
}
