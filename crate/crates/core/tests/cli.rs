mod common;

use std::path::Path;
use std::process::{Command, Output};

fn ddruc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddruc")).args(args).output().expect("run ddruc")
}

fn fixture(name: &str) -> String {
    common::fixture_dir().join(name).display().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_fixture_sizes() {
    let out = ddruc(&["validate", "--instance", &fixture("four_bus.toml"), "--history", &fixture("four_bus_wind.csv")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("4 buses"), "{text}");
    assert!(text.contains("731 days"), "{text}");
}

#[test]
fn bad_inputs_give_distinct_exit_codes() {
    let missing = ddruc(&["validate", "--instance", "/nonexistent/x.toml"]);
    assert_eq!(missing.status.code(), Some(3));
    let usage = ddruc(&["solve-day", "--date", "2012-06-01"]);
    assert_eq!(usage.status.code(), Some(2), "{}", String::from_utf8_lossy(&usage.stderr));
    let unparsable = ddruc(&["solve-day", "--date", "yesterday"]);
    assert!(!unparsable.status.success());
}

#[test]
fn solve_day_then_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("day");
    let (instance, history) = (fixture("four_bus.toml"), fixture("four_bus_wind.csv"));
    let base = ["--instance", &instance, "--history", &history];
    let run = ddruc(&[&["solve-day", "--date", "2012-03-10", "--k", "5", "--out", path(&out)][..], &base].concat());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for file in ["schedule.json", "trace.csv", "window.json"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().count() >= 2);

    let schedule = out.join("schedule.json");
    let check = ddruc(&[&["oracle-check", "--schedule", path(&schedule), "--date", "2012-03-10", "--k", "5"][..], &base].concat());
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));
    assert!(String::from_utf8(check.stdout).unwrap().contains("agreement"));
}

#[test]
fn solve_day_without_enough_history_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("early");
    let run = ddruc(&[
        "solve-day",
        "--date",
        "2012-01-05",
        "--instance",
        &fixture("four_bus.toml"),
        "--history",
        &fixture("four_bus_wind.csv"),
        "--out",
        path(&out),
    ]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(!out.join("schedule.json").exists());
}

#[test]
fn gen_scenarios_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for target in [&a, &b] {
        let run = ddruc(&[
            "gen-scenarios",
            "--history",
            &fixture("four_bus_wind.csv"),
            "--date",
            "2012-09-01",
            "--count",
            "20",
            "--window",
            "60",
            "--seed",
            "7",
            "--out",
            path(target),
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
}
