use std::collections::BTreeSet;
use std::fs;
use std::process::{Command, Output};

use slar::cli::sweep::{read_csv, CSV_COLUMNS};

fn slar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slar")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_prints_a_total_line() {
    let o = slar(&["run", "--nodes", "10", "--seed", "1", "--set", "duration=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l.trim_start().starts_with("total")), "{out}");
}

#[test]
fn run_json_is_a_report() {
    let o = slar(&["run", "--nodes", "10", "--set", "duration=1", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["flows"].as_array().unwrap().len(), 5);
}

#[test]
fn odd_node_count_is_rejected() {
    let o = slar(&["run", "--nodes", "11"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("11"), "{}", stderr(&o));
}

#[test]
fn unknown_protocol_lists_the_valid_ones() {
    let o = slar(&["run", "--protocol", "aodv"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for p in ["rlar", "dlar", "secure_rlar", "secure_dlar"] {
        assert!(err.contains(p), "{err}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let o = slar(&["run", "--set", "warp=9"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("warp"));
}

#[test]
fn trace_file_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    let o = slar(&["run", "--nodes", "10", "--set", "duration=0.5", "--trace", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 0);
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn sweep_csv_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "sweep".to_string(),
            "--family".into(),
            "malicious".into(),
            "--seeds".into(),
            "2".into(),
            "--set".into(),
            "duration=0.5".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    for p in [&a, &b] {
        let argv = args(p);
        let o = slar(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());

    let text = String::from_utf8(bytes.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = read_csv(bytes.as_slice()).unwrap();
    // six attacker counts, four protocols, two seeds
    assert_eq!(rows.len(), 6 * 4 * 2);
    let counts: BTreeSet<usize> = rows.iter().map(|r| r.malicious).collect();
    assert_eq!(counts, BTreeSet::from([2, 4, 6, 8, 10, 12]));
    assert!(rows.iter().all(|r| r.nodes == 40 && r.delivered <= r.sent));
}

#[test]
fn unknown_family_is_rejected() {
    let o = slar(&["sweep", "--family", "height"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("density"));
}
