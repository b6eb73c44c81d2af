use std::path::Path;
use std::process::{Command, Output};

use eigentrack::experiments::CSV_HEADER;

fn eigentrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigentrack")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_steps_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let res = eigentrack(&["--command", "sbm-track", "--n", "100", "--steps", "0", "--output", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.trim_end(), CSV_HEADER.join(","));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 0);
    assert_eq!(summary["command"], "sbm-track");
}

#[test]
fn sbm_track_is_deterministic_and_summarized() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = eigentrack(&[
            "--command", "sbm-track", "--n", "120", "--steps", "4", "--r", "4", "--q", "3", "--seed", "11", "--oracle",
            "--output", path_str(&out),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        std::fs::read(&out).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let mut reader = csv::Reader::from_reader(a.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        // Timing columns stay empty unless requested.
        assert_eq!(&row[13], "");
        assert_eq!(&row[14], "");
        let dist: f64 = row[12].parse().unwrap();
        assert!(dist <= 1e-3);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 4);
    assert_eq!(summary["oracle_exceedances"], 0);
    assert_eq!(summary["config"]["seed"], 11);
}

#[test]
fn stdout_output_and_timing() {
    let res = eigentrack(&["--command", "solve-once", "--n", "60", "--r", "3", "--timing"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[8], "3");
    assert!(row[13].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn missing_input_exits_with_one() {
    let res = eigentrack(&["--command", "graph-track", "--input", "/definitely/not/here.txt"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!res.stderr.is_empty());
}

#[test]
fn invalid_arguments_are_rejected() {
    let res = eigentrack(&["--command", "sbm-track", "--eps", "2"]);
    assert_eq!(res.status.code(), Some(1));
    let res = eigentrack(&["--command", "no-such-command"]);
    assert!(!res.status.success());
}

#[test]
fn graph_input_writes_id_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("edges.txt");
    let mut text = String::from("# src dst t\n");
    // Two dense clusters joined by one bridge, plus a detached pair.
    let mut t = 0;
    for base in [100u64, 200] {
        for i in 0..8 {
            for j in i + 1..8 {
                text.push_str(&format!("{} {} {t}\n", base + i, base + j));
                t += 1;
            }
        }
    }
    text.push_str(&format!("100 200 {t}\n9000 9001 {}\n", t + 1));
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("g.csv");
    let res = eigentrack(&[
        "--command", "graph-track", "--input", path_str(&input), "--r", "2", "--q", "2", "--batch-size", "10",
        "--output", path_str(&out),
    ]);
    assert_ne!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    let ids = std::fs::read_to_string(dir.path().join("g.csv.ids.csv")).unwrap();
    let mut lines = ids.lines();
    assert_eq!(lines.next().unwrap(), "compact_id,original_id");
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 16);
    assert_eq!(body[0], "0,100");
    assert_eq!(body[15], "15,207");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["vertices"], 16);
}

#[test]
fn ssa_and_pca_commands_run() {
    let res = eigentrack(&["--command", "ssa-run", "--steps", "3", "--window", "64", "--length", "256"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let row: Vec<&str> = last.split(',').collect();
    assert!(row[23].parse::<f64>().unwrap() > 0.99);
    assert!(row[24].parse::<f64>().is_ok());
    let res = eigentrack(&["--command", "pca-track", "--model", "gaussian", "--n", "120", "--steps", "3", "--oracle"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(String::from_utf8(res.stdout).unwrap().lines().count(), 4);
}
