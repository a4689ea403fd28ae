use std::process::Command;

use unimatch::indices::IndexKind;
use unimatch::runner::{
    aggregate, emit_csv, mean_and_stderr, read_aggregate_csv, read_comments, read_csv_file,
    run_all, write_aggregate_csv, Algo, ExperimentConfig, InstanceSpec, Schedule, RECORD_HEADER,
};

fn unimatch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unimatch"))
}

#[test]
fn run_writes_header_and_checkpoint_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let status = unimatch()
        .args([
            "run",
            "--algo",
            "grab",
            "--instance",
            "custom",
            "--theta",
            "0.9,0.8,0.5,0.4",
            "--horizon",
            "3",
            "--seeds",
            "2",
            "--trace-every",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], RECORD_HEADER);
    assert_eq!(data.len(), 7);
    let records = read_csv_file(&out).unwrap();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.elapsed_s.is_none()));
    assert!(read_comments(&out)
        .unwrap()
        .iter()
        .any(|c| c.contains("index")));
}

#[test]
fn verify_reports_pass() {
    let out = unimatch()
        .args(["verify", "--lemmas", "--L-max", "3", "--instances", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout)
        .trim_end()
        .ends_with("PASS"));
}

#[test]
fn invalid_instance_is_rejected_before_running() {
    let out = unimatch()
        .args([
            "run",
            "--algo",
            "grab",
            "--instance",
            "exp2",
            "--L",
            "4",
            "--mu",
            "0.5",
            "--delta",
            "0.2",
            "--horizon",
            "10",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn klcombucb_refuses_large_instances() {
    let out = unimatch()
        .args([
            "run",
            "--algo",
            "klcombucb",
            "--instance",
            "exp1",
            "--L",
            "7",
            "--delta",
            "0.1",
            "--horizon",
            "10",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn csv_round_trip_and_aggregation() {
    let config = ExperimentConfig::new(
        Algo::GrabPlus,
        InstanceSpec::Exp1 { l: 3, delta: 0.1 },
        2_000,
    )
    .with_seeds(3, 4)
    .with_index(IndexKind::KlUcb)
    .with_schedule(Schedule::Geometric);
    let records = run_all(&config, Some(2)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.csv");
    emit_csv(&records, &config.comment_lines(), &path).unwrap();
    let back = read_csv_file(&path).unwrap();
    assert_eq!(back, records);

    let row = aggregate(&config, &back).unwrap();
    let finals: Vec<f64> = back
        .iter()
        .filter(|r| r.t == 2_000)
        .map(|r| r.cum_regret)
        .collect();
    assert_eq!(finals.len(), 4);
    let (mean, stderr) = mean_and_stderr(&finals);
    assert_eq!(row.mean_regret, mean);
    assert_eq!(row.stderr_regret, stderr);
    assert_eq!(row.seeds, 4);

    let mut buf = Vec::new();
    write_aggregate_csv(std::slice::from_ref(&row), &[], &mut buf).unwrap();
    assert_eq!(read_aggregate_csv(buf.as_slice()).unwrap(), vec![row]);
}

#[test]
fn klcombucb_and_random_run_end_to_end() {
    for algo in [Algo::KlCombUcb, Algo::Random] {
        let config = ExperimentConfig::new(algo, InstanceSpec::Exp1 { l: 3, delta: 0.1 }, 500);
        let records = run_all(&config, Some(1)).unwrap();
        let last = records.last().unwrap();
        assert_eq!(last.t, 500);
        assert!(last.frac_opt_leader.is_none());
        assert!(last.cum_regret >= 0.0);
    }
}
