//! End-to-end checks of the `cqed` binary: flag/config merging, unit
//! conventions, output formats, determinism, and the exit-code contract
//! (0 success, 2 invalid input, 3 verification failure, 4 insufficient
//! statistics).

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn cqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("cqed-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn amplitudes_print_the_worked_point() {
    let out = cqed(&["amplitudes"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("g=1 kappa=0.5 gamma=1 epsilon=0.01 delta=0"));
    assert!(text.contains("1.666666666667e0"), "q = 5/3 missing:\n{text}");
    assert!(text.contains("-1.000000000000e0"), "p = -1 missing:\n{text}");
}

#[test]
fn invalid_parameters_exit_with_code_2() {
    let out = cqed(&["amplitudes", "--kappa", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn config_file_sets_parameters_and_flags_override_it() {
    let config = temp_path("override.toml");
    fs::write(&config, "epsilon = 0.02\nkappa = 0.5\n").unwrap();
    let config_str = config.to_str().unwrap();

    let from_file = cqed(&["amplitudes", "--config", config_str, "--format", "csv"]);
    assert!(from_file.status.success());
    // alpha = epsilon / (kappa (1 + 2 C1)) = 0.02 / 2.5.
    assert!(stdout(&from_file).contains("8.000000000000e-3"));

    let overridden =
        cqed(&["amplitudes", "--config", config_str, "--epsilon", "0.01", "--format", "csv"]);
    assert!(overridden.status.success());
    assert!(stdout(&overridden).contains("4.000000000000e-3"));
    fs::remove_file(&config).unwrap();
}

#[test]
fn unknown_config_keys_are_rejected() {
    let config = temp_path("unknown-key.toml");
    fs::write(&config, "epsilon = 0.02\nepsilonn = 0.3\n").unwrap();
    let out = cqed(&["amplitudes", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epsilonn"), "message should name the key:\n{}", stderr(&out));
    fs::remove_file(&config).unwrap();
}

#[test]
fn gamma_units_and_absolute_units_describe_the_same_physics() {
    // Scaling every rate by the same factor leaves dimensionless ratios
    // fixed; in gamma units that scaling is just --gamma.
    let in_gamma_units = cqed(&["correlations", "--gamma", "2", "--format", "csv"]);
    let absolute = cqed(&[
        "correlations",
        "--units",
        "absolute",
        "--g",
        "2",
        "--kappa",
        "1",
        "--gamma",
        "2",
        "--epsilon",
        "0.02",
        "--format",
        "csv",
    ]);
    assert!(in_gamma_units.status.success() && absolute.status.success());
    assert_eq!(stdout(&in_gamma_units), stdout(&absolute));
    assert!(stdout(&absolute).contains("g2_tf,2.777777777778e0"));
}

#[test]
fn sweep_output_is_deterministic_and_carries_metadata() {
    let first = temp_path("sweep-a.csv");
    let second = temp_path("sweep-b.csv");
    for path in [&first, &second] {
        let out = cqed(&[
            "sweep",
            "--axis",
            "g:0.5:2:5",
            "--axis",
            "delta:-1:1:3",
            "--quantities",
            "concurrence,g2-tf",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = fs::read(&first).unwrap();
    let b = fs::read(&second).unwrap();
    assert_eq!(a, b, "identical sweep commands must produce identical bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# schema: sweep-v1"));
    assert!(text.contains("# backend: analytic"));
    assert!(text.contains("g,delta,concurrence,g2_tf,status"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 15);
    fs::remove_file(&first).unwrap();
    fs::remove_file(&second).unwrap();
}

#[test]
fn sweep_emits_json_lines_on_request() {
    let out =
        cqed(&["sweep", "--axis", "g:0.5:1.5:3", "--quantities", "q", "--format", "json-lines"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        assert!(line.starts_with('{') && line.ends_with('}'), "not a JSON line: {line}");
    }
}

#[test]
fn verify_passes_clean_and_fails_corrupted_jumps() {
    let clean = cqed(&["verify"]);
    assert_eq!(clean.status.code(), Some(0), "{}", stderr(&clean));
    assert!(stdout(&clean).contains("verification: pass"));

    let corrupted = cqed(&["verify", "--corrupt-jumps"]);
    assert_eq!(corrupted.status.code(), Some(3));
    assert!(stdout(&corrupted).contains("verification: FAIL"));
}

#[test]
fn schwarz_scan_reports_the_first_counterexample() {
    let out = cqed(&["schwarz-scan", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("g,1.000000000000e-1"));
    assert!(text.contains("kappa,1.000000000000e-1"));
    assert!(text.contains("schwarz_violated,false"));
}

#[test]
fn starved_trajectory_run_exits_with_code_4_but_still_exports_clicks() {
    let clicks = temp_path("clicks.csv");
    let out = cqed(&[
        "trajectories",
        "--n-traj",
        "2",
        "--t-total",
        "20",
        "--seed",
        "11",
        "--out",
        clicks.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let text = fs::read_to_string(&clicks).unwrap();
    assert!(text.starts_with("trajectory,time,channel"));
    fs::remove_file(&clicks).unwrap();
}
