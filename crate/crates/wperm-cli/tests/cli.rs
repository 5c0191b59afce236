//! End-to-end tests of the binary: output formats, exit codes, config
//! resolution, and reproducibility of artifact runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wperm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wperm"))
}

fn run(args: &[&str]) -> Output {
    wperm().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wperm-cli-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

#[test]
fn hn_rational_matches_closed_form() {
    let out = run(&[
        "hn",
        "--model",
        "ewens:theta=2",
        "--restriction",
        "full",
        "--n",
        "0..12",
        "--kind",
        "rational",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,h"));
    for (n, line) in lines.enumerate() {
        // h_n = (n+1) for theta = 2
        assert_eq!(line, format!("{n},{}", n + 1));
    }
}

#[test]
fn ell1_law_is_uniform_record() {
    let out = run(&[
        "law",
        "--stat",
        "ell1",
        "--model",
        "uniform",
        "--restriction",
        "full",
        "--n",
        "10",
        "--kind",
        "rational",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for k in 1..=10 {
        assert!(
            text.contains(&format!("{k},1/10")),
            "missing row {k}: {text}"
        );
    }
}

#[test]
fn charfn_at_zero_is_one() {
    let out = run(&[
        "charfn",
        "--model",
        "ewens:theta=2",
        "--n",
        "20",
        "--quantity",
        "t",
        "--s-min",
        "0",
        "--s-max",
        "1",
        "--s-steps",
        "2",
    ]);
    assert!(out.status.success());
    let first_row = stdout(&out).lines().nth(1).unwrap().to_owned();
    let fields: Vec<&str> = first_row.split(',').collect();
    assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
    assert!((fields[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn exit_codes_follow_the_contract() {
    // parse error: 2
    let out = run(&["hn", "--model", "nonsense", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    // clap usage error: 2
    let out = run(&["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
    // degenerate measure: 3
    let out = run(&[
        "law",
        "--stat",
        "ell1",
        "--model",
        "uniform",
        "--restriction",
        "list:2",
        "--n",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // success: 0
    let out = run(&["hn", "--model", "uniform", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_seed_is_generated_and_printed() {
    let out = run(&["sample", "--model", "uniform", "--n", "5", "--samples", "3"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed: "), "stderr was: {err}");
}

#[test]
fn sample_rows_are_sparse_and_reproducible() {
    let args = [
        "sample",
        "--model",
        "ewens:theta=2",
        "--n",
        "9",
        "--samples",
        "4",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b), "same seed reproduces draws");
    let text = stdout(&a);
    let row = text.lines().nth(1).unwrap();
    let (id, cycles) = row.split_once(',').unwrap();
    assert_eq!(id, "0");
    // sparse m:count pairs summing to the degree
    let total: u64 = cycles
        .split(' ')
        .map(|pair| {
            let (m, c) = pair.split_once(':').unwrap();
            m.parse::<u64>().unwrap() * c.parse::<u64>().unwrap()
        })
        .sum();
    assert_eq!(total, 9);
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tmp_dir("config");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "model=ewens:theta=2\nn=0..3\nkind=rational\n").unwrap();
    // everything from the file
    let out = run(&["hn", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("3,4"));
    // the flag overrides the file's model
    let out = run(&[
        "hn",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "uniform",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("3,1"), "{}", stdout(&out));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn artifact_run_records_config_and_reproduces() {
    let dir = tmp_dir("artifact");
    let out = run(&[
        "law",
        "--stat",
        "t",
        "--model",
        "perturbed:theta=1,overrides=1:3;2:0.5",
        "--restriction",
        "odd",
        "--n",
        "7",
        "--kind",
        "rational",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let config_path = dir.join("run_config.json");
    let law_path = dir.join("law.csv");
    assert!(config_path.exists() && law_path.exists());
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&config_path).unwrap()).unwrap();
    assert_eq!(config["command"], "law");
    assert!(config["library_version"].as_str().is_some());
    let first = fs::read_to_string(&law_path).unwrap();

    // re-execute from the recorded options: identical artifact
    let opts = config["options"].as_object().unwrap();
    let dir2 = tmp_dir("artifact-rerun");
    let mut args: Vec<String> = vec!["law".into()];
    for (k, v) in opts {
        args.push(format!("--{k}"));
        args.push(v.as_str().unwrap().to_owned());
    }
    args.push("--out".into());
    args.push(dir2.to_str().unwrap().to_owned());
    let rerun = wperm().args(&args).output().unwrap();
    assert!(
        rerun.status.success(),
        "{}",
        String::from_utf8_lossy(&rerun.stderr)
    );
    let second = fs::read_to_string(dir2.join("law.csv")).unwrap();
    assert_eq!(first, second, "recorded config re-executes identically");
    // config -> flags -> config is the identity on the resolved options
    let config2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir2.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(config["options"], config2["options"]);
    let _ = fs::remove_dir_all(&dir);
    let _ = fs::remove_dir_all(&dir2);
}

#[test]
fn verify_cross_check_passes_and_writes_report() {
    let dir = tmp_dir("verify");
    let out = run(&[
        "verify",
        "--check",
        "cross",
        "--model",
        "uniform",
        "--n",
        "6",
        "--samples",
        "20000",
        "--seed",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Pass");
    assert!(Path::new(&dir.join("report.csv")).exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn verify_unknown_check_is_a_parse_error() {
    let out = run(&[
        "verify", "--check", "bogus", "--model", "uniform", "--n", "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
