//! End-to-end tests of the `lnmmsb` binary: every subcommand runs against
//! real files in a temporary directory, and the process exit codes follow
//! the documented convention (0 success, 1 argument error, 2 data error,
//! 3 numerical failure).

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lnmmsb"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn assert_status(out: &Output, expected: i32, context: &str) {
    let got = out.status.code().expect("exit code");
    assert_eq!(
        got,
        expected,
        "{context}: expected exit {expected}, got {got}\nstdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn generate_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = run(&[
            "generate",
            "--nodes",
            "20",
            "--roles",
            "2",
            "--times",
            "3",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_status(&res, 0, "generate");
    }
    for file in ["network.tsv", "truth.csv", "params.json", "config.txt"] {
        assert_eq!(
            read(&a.join(file)),
            read(&b.join(file)),
            "{file} differs between identically seeded runs"
        );
    }
}

#[test]
fn static_fit_evaluate_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let fit = dir.path().join("fit");
    let exp = dir.path().join("exp");
    let res = run(&[
        "generate",
        "--nodes",
        "30",
        "--roles",
        "2",
        "--edge-on",
        "0.7",
        "--edge-off",
        "0.1",
        "--seed",
        "11",
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "generate");
    let net = gen.join("network.tsv");

    let res = run(&[
        "fit",
        "--network",
        net.to_str().unwrap(),
        "--roles",
        "2",
        "--restarts",
        "2",
        "--seed",
        "5",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "fit");
    for file in ["fit.json", "trajectories.csv", "params.json", "config.txt"] {
        assert!(fit.join(file).exists(), "fit did not write {file}");
    }
    let params: serde_json::Value =
        serde_json::from_slice(&read(&fit.join("params.json"))).unwrap();
    assert_eq!(params["model"], "static");
    assert_eq!(params["k"], 2);

    let res = run(&[
        "evaluate",
        "--network",
        net.to_str().unwrap(),
        "--fit",
        fit.join("fit.json").to_str().unwrap(),
        "--truth",
        gen.join("truth.csv").to_str().unwrap(),
        "--samples",
        "200",
    ]);
    assert_status(&res, 0, "evaluate");
    let text = stdout_of(&res);
    for key in [
        "model = static",
        "loglik = ",
        "bic = ",
        "alignment = ",
        "membership_error_l2 = ",
    ] {
        assert!(text.contains(key), "evaluate output lacks `{key}`:\n{text}");
    }

    let res = run(&[
        "export",
        "--fit",
        fit.join("fit.json").to_str().unwrap(),
        "--out",
        exp.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "export");
    // Re-emitting from saved state must reproduce the fit's own tables.
    assert_eq!(
        read(&fit.join("trajectories.csv")),
        read(&exp.join("trajectories.csv")),
        "exported trajectories differ from the fit's"
    );
    assert_eq!(
        read(&fit.join("params.json")),
        read(&exp.join("params.json")),
        "exported parameters differ from the fit's"
    );
}

#[test]
fn dynamic_fit_runs_on_dense_format() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let fit = dir.path().join("fit");
    let res = run(&[
        "generate",
        "--nodes",
        "18",
        "--roles",
        "2",
        "--times",
        "3",
        "--format",
        "dense",
        "--seed",
        "3",
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "generate dense");
    let net = gen.join("network.csv");
    let res = run(&[
        "fit",
        "--network",
        net.to_str().unwrap(),
        "--roles",
        "2",
        "--restarts",
        "1",
        "--max-outer",
        "15",
        "--seed",
        "5",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "fit dynamic");
    let params: serde_json::Value =
        serde_json::from_slice(&read(&fit.join("params.json"))).unwrap();
    assert_eq!(params["model"], "dynamic");
    assert_eq!(
        params["mu_traj"].as_array().map(|a| a.len()),
        Some(3),
        "dynamic fit must record one prior mean per snapshot"
    );
}

#[test]
fn select_prints_score_table_and_best_k() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let sel = dir.path().join("sel");
    let res = run(&[
        "generate",
        "--nodes",
        "30",
        "--roles",
        "2",
        "--edge-on",
        "0.8",
        "--edge-off",
        "0.05",
        "--seed",
        "13",
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "generate");
    let res = run(&[
        "select",
        "--network",
        gen.join("network.tsv").to_str().unwrap(),
        "--k-min",
        "1",
        "--k-max",
        "3",
        "--restarts",
        "1",
        "--samples",
        "200",
        "--seed",
        "2",
        "--out",
        sel.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "select");
    let text = stdout_of(&res);
    assert!(text.contains("best_k = "), "missing best_k line:\n{text}");
    let table = String::from_utf8(read(&sel.join("selection.csv"))).unwrap();
    // Header plus one row per candidate role count.
    assert_eq!(table.lines().count(), 4, "selection table rows:\n{table}");
    assert!(table.starts_with("k,loglik,loglik_se,n_params,bic"));
}

#[test]
fn argument_errors_exit_one() {
    // Missing required flag (clap usage error).
    let res = run(&["fit"]);
    assert_status(&res, 1, "fit without --network");
    // Nonsensical option value caught by validation.
    let dir = tempfile::tempdir().unwrap();
    let res = run(&[
        "generate",
        "--nodes",
        "10",
        "--roles",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_status(&res, 1, "generate with zero roles");
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // Missing input file.
    let res = run(&[
        "fit",
        "--network",
        dir.path().join("absent.tsv").to_str().unwrap(),
        "--roles",
        "2",
    ]);
    assert_status(&res, 2, "fit on a missing network file");
    // Malformed edge list.
    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "this is not\tan edge list\n").unwrap();
    let res = run(&[
        "fit",
        "--network",
        bad.to_str().unwrap(),
        "--roles",
        "2",
    ]);
    assert_status(&res, 2, "fit on a malformed network file");
}

#[test]
fn numerical_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let fit = dir.path().join("fit");
    let res = run(&[
        "generate",
        "--nodes",
        "12",
        "--roles",
        "1",
        "--edge-on",
        "0.6",
        "--seed",
        "19",
        "--out",
        gen.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "generate");
    let res = run(&[
        "fit",
        "--network",
        gen.join("network.tsv").to_str().unwrap(),
        "--roles",
        "1",
        "--restarts",
        "1",
        "--seed",
        "1",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert_status(&res, 0, "fit");
    // Corrupt the saved state so the model assigns zero probability to
    // every observed edge: all importance weights vanish.
    let state_path = fit.join("fit.json");
    let mut state: serde_json::Value =
        serde_json::from_slice(&read(&state_path)).unwrap();
    state["params"]["b"] = serde_json::json!([[0.0]]);
    std::fs::write(&state_path, serde_json::to_vec(&state).unwrap()).unwrap();
    let res = run(&[
        "evaluate",
        "--network",
        gen.join("network.tsv").to_str().unwrap(),
        "--fit",
        state_path.to_str().unwrap(),
        "--samples",
        "100",
    ]);
    assert_status(&res, 3, "evaluate with an impossible compatibility matrix");
}
