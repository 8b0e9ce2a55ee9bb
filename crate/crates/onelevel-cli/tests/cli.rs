//! End-to-end runs of the `onelevel` binary.
//!
//! Every test gets its own cache directory so runs cannot observe each
//! other's prime or tau tables.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_onelevel"));
    cmd.env_remove("ONELEVEL_CACHE_DIR");
    cmd
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process was not signalled")
}

fn run(args: &[&str], cache: &Path) -> Output {
    bin()
        .args(args)
        .arg("--cache-dir")
        .arg(cache)
        .output()
        .expect("binary launches")
}

#[test]
fn kernel_reports_the_prediction_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let text = run(&["kernel", "--sigma", "1.2"], dir.path());
    assert_eq!(exit_code(&text), 0);
    assert!(stdout(&text).contains("prediction=0.416666"));

    let json = run(&["kernel", "--sigma", "1.2", "--format", "json"], dir.path());
    assert_eq!(exit_code(&json), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let prediction = value["prediction"].as_f64().unwrap();
    assert!((prediction - 5.0 / 12.0).abs() <= 1e-12);
    assert_eq!(value["sigma"].as_f64().unwrap(), 1.2);
}

#[test]
fn poisson_check_passes_and_reports_value_lines() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["poisson-check", "--q", "3", "--X", "10"], dir.path());
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "q X lhs rhs diff mTerms");
    assert!(lines[1].starts_with("3 10 "));
    assert_eq!(lines[1].split_whitespace().count(), 6);
    assert_eq!(*lines.last().unwrap(), "PASS diff<1e-6");
}

#[test]
fn a_short_contour_fails_the_accuracy_contract() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["poisson-check", "--q", "3", "--X", "10", "--poisson-height", "80"],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 4);
    assert!(stderr(&output).contains("error:"));
}

#[test]
fn density_emits_the_csv_column_set() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["density", "--family", "gl1", "--sigma", "0.5", "--X", "100,200"],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "X,family,M,sigma,mode,Z,W_X,d_count,empirical_D,prediction,diff,prime_limit,wall_time_s"
    );
    assert!(lines[1].starts_with("100,gl1,1,0.5,simplified,"));
    assert!(lines[2].starts_with("200,gl1,1,0.5,simplified,"));
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 13);
    }
}

#[test]
fn density_json_carries_the_same_keys() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &[
            "density", "--family", "gl1", "--sigma", "0.5", "--X", "100,200", "--format", "json",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 0);
    let value: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let rows = value.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in [
        "X",
        "family",
        "M",
        "sigma",
        "mode",
        "Z",
        "W_X",
        "d_count",
        "empirical_D",
        "prediction",
        "diff",
        "prime_limit",
        "wall_time_s",
    ] {
        assert!(rows[0].get(key).is_some(), "missing key {key}");
    }
    assert_eq!(rows[0]["X"].as_f64().unwrap(), 100.0);
    assert_eq!(rows[1]["X"].as_f64().unwrap(), 200.0);
}

#[test]
fn density_sweep_runs_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["density-sweep", "--family", "gl1", "--sigma", "0.5", "--X", "100"],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().any(|l| l.contains(",simplified,")));
    assert!(lines.iter().any(|l| l.contains(",full,")));
}

#[test]
fn config_files_supply_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# defaults\nsigma = 1.2\n").unwrap();

    let from_file = run(
        &["kernel", "--config", conf.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(exit_code(&from_file), 0);
    assert!(stdout(&from_file).contains("sigma=1.2"));

    let overridden = run(
        &["kernel", "--config", conf.to_str().unwrap(), "--sigma", "0.5"],
        dir.path(),
    );
    assert_eq!(exit_code(&overridden), 0);
    assert!(stdout(&overridden).contains("prediction=0.75"));
}

#[test]
fn unknown_config_keys_are_rejected_with_the_valid_set() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "sigmaa = 1\n").unwrap();
    let output = run(&["kernel", "--config", conf.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&output), 2);
    let err = stderr(&output);
    assert!(err.contains("sigmaa"));
    assert!(err.contains("cache-dir"));
}

#[test]
fn tau_cache_round_trips_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["tau", "--n", "200"], dir.path());
    let second = run(&["tau", "--n", "200"], dir.path());
    assert_eq!(exit_code(&first), 0);
    assert_eq!(exit_code(&second), 0);
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).contains("tau_n=-2154174528000"));
    assert!(!stderr(&first).contains("cache hit"));
    assert!(stderr(&second).contains("cache hit"));

    std::fs::write(dir.path().join("tau.tsv"), "garbage\n").unwrap();
    let corrupt = run(&["tau", "--n", "200"], dir.path());
    assert_eq!(exit_code(&corrupt), 3);
}

#[test]
fn sieve_reports_the_prime_count_and_reuses_its_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["sieve", "--limit", "10000"], dir.path());
    assert_eq!(exit_code(&first), 0);
    assert!(stdout(&first).contains("primes=1229"));
    assert!(stdout(&first).contains("largest=9973"));

    let second = run(&["sieve", "--limit", "10000"], dir.path());
    assert_eq!(exit_code(&second), 0);
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stderr(&second).contains("cache hit"));
}

#[test]
fn the_environment_cache_dir_is_honored_when_the_flag_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["sieve", "--limit", "100"])
        .env("ONELEVEL_CACHE_DIR", dir.path())
        .output()
        .expect("binary launches");
    assert_eq!(exit_code(&output), 0);
    assert!(dir.path().join("primes_100.bin").exists());
}

#[test]
fn gauss_split_and_delta_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let gauss = run(&["gauss-check", "--limit", "100"], dir.path());
    assert_eq!(exit_code(&gauss), 0);
    assert!(stdout(&gauss).contains("PASS"));

    let split = run(
        &["split-check", "--X", "1000", "--sigma", "0.5", "--Z", "10", "--p-max", "5"],
        dir.path(),
    );
    assert_eq!(exit_code(&split), 0);
    let split_text = stdout(&split);
    assert!(split_text.lines().last().unwrap().starts_with("PASS"));
    assert!(split_text.contains("sM="));
    assert!(split_text.contains("dual="));

    let delta = run(&["delta-check", "--family", "gl1", "--X", "10000"], dir.path());
    assert_eq!(exit_code(&delta), 0);
    let delta_text = stdout(&delta);
    assert!(delta_text.contains("family=gl1"));
    assert!(delta_text.contains("expected=1"));
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["kernel"],
        &["kernel", "--sigma", "2.5"],
        &["density", "--family", "nope", "--sigma", "0.5", "--X", "100"],
        &["density", "--family", "gl1", "--sigma", "0.5"],
        &["density", "--family", "gl1", "--sigma", "0.5", "--X", "100", "--mode", "nope"],
        &["density", "--family", "delta", "--sigma", "1.5", "--X", "100"],
    ];
    for args in cases {
        let output = run(args, dir.path());
        assert_eq!(exit_code(&output), 2, "args {args:?}");
        assert!(stderr(&output).contains("error:"), "args {args:?}");
    }
}

#[test]
fn reports_can_be_written_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let output = run(
        &[
            "density", "--family", "gl1", "--sigma", "0.5", "--X", "100", "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).is_empty());
    assert!(stderr(&output).contains("wrote"));
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.starts_with("X,family,"));
    assert_eq!(written.lines().count(), 2);
}
