use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fastkm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastkm"))
        .args(args)
        .env_remove("FASTKM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn fastkm_out(args: &[&str], out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    fastkm(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rebuilds the flag list recorded in `run.json`.
fn replay_args(run: &Value) -> Vec<String> {
    let obj = run.as_object().unwrap();
    let mut args = vec![obj["command"].as_str().unwrap().to_string()];
    for (key, value) in obj {
        if key == "command" || key == "version" || value.is_null() {
            continue;
        }
        args.push(format!("--{}", key.replace('_', "-")));
        args.push(match value {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    args
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn rotation_writes_trace_with_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let o = fastkm_out(
        &[
            "rotation",
            "--n",
            "1",
            "--kmax",
            "500",
            "--methods",
            "fast-km",
            "--alpha",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = parse_csv(&dir.path().join("fast-km.csv"));
    assert_eq!(
        header,
        [
            "k",
            "residual",
            "velocity",
            "k_times_residual",
            "x_0",
            "x_1"
        ]
    );
    assert_eq!(rows.len(), 501);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        for cell in &row[1..] {
            cell.parse::<f64>().unwrap();
        }
    }
    let (header, rows) = parse_csv(&dir.path().join("residuals.csv"));
    assert_eq!(header, ["k", "fast-km"]);
    assert_eq!(rows.len(), 501);
    let run = read_json(&dir.path().join("run.json"));
    assert_eq!(run["command"], "rotation");
    assert_eq!(run["n"], 1);
    assert_eq!(run["m_const"], 2.0);
    assert!(run["version"].is_string());
}

#[test]
fn rotation_parameter_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = fastkm_out(&["rotation", "--n", "1", "--alpha", "2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("α > 2"));
    let o = fastkm_out(
        &[
            "rotation",
            "--n",
            "1",
            "--methods",
            "fast-km",
            "--step",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("s ≤ 1/θ"));
    let o = fastkm_out(&["rotation", "--n", "1", "--m-const", "1"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("run.json").exists());
}

#[test]
fn unknown_flags_and_methods_exit_2() {
    assert_eq!(code(&fastkm(&["rotation", "--kmx", "10"])), 2);
    assert_eq!(code(&fastkm(&["rotation", "--methods", "newton"])), 2);
    assert_eq!(code(&fastkm(&["feasibility", "--methods", "dr10"])), 2);
    assert_eq!(code(&fastkm(&["check"])), 2);
    assert_eq!(code(&fastkm(&["frobnicate"])), 2);
}

#[test]
fn rotation_rerun_is_byte_identical_and_replays_from_run_json() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "rotation",
        "--n",
        "2",
        "--kmax",
        "300",
        "--methods",
        "km,halpern,appm,fast-km,fast-ogda",
    ];
    assert_eq!(code(&fastkm_out(&args, a.path())), 0);
    let replay = replay_args(&read_json(&a.path().join("run.json")));
    let replay: Vec<&str> = replay.iter().map(String::as_str).collect();
    let o = fastkm_out(&replay, b.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "km",
        "halpern",
        "appm",
        "fast-km",
        "fast-ogda",
        "residuals",
        "run",
    ] {
        let ext = if name == "run" { "json" } else { "csv" };
        let file = format!("{name}.{ext}");
        assert_eq!(
            std::fs::read(a.path().join(&file)).unwrap(),
            std::fs::read(b.path().join(&file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn feasibility_batch_schema_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "feasibility",
        "--n",
        "1",
        "--ntest",
        "10",
        "--ninit",
        "100",
        "--seed",
        "42",
        "--methods",
        "dr2,fast-km",
        "--alpha",
        "30",
    ];
    let o = fastkm_out(&args, a.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fast-km(alpha=30)"));
    let (header, rows) = parse_csv(&a.path().join("feasibility.csv"));
    assert_eq!(
        header,
        [
            "method",
            "ratio",
            "mean_iters",
            "std_iters",
            "n",
            "n_test",
            "n_init",
            "tol",
            "kmax",
            "seed"
        ]
    );
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "dr2");
    assert_eq!(rows[1][0], "fast-km(alpha=30)");
    for row in &rows {
        let ratio: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&ratio));
        assert_eq!(&row[4..7], ["1", "10", "100"]);
        assert_eq!(row[8], "100");
        assert_eq!(row[9], "42");
    }
    // Different worker count, same bytes.
    let mut single: Vec<&str> = args.to_vec();
    single.extend(["--jobs", "1"]);
    assert_eq!(code(&fastkm_out(&single, b.path())), 0);
    assert_eq!(
        std::fs::read(a.path().join("feasibility.csv")).unwrap(),
        std::fs::read(b.path().join("feasibility.csv")).unwrap()
    );
    let c = tempfile::tempdir().unwrap();
    let replay = replay_args(&read_json(&a.path().join("run.json")));
    let replay: Vec<&str> = replay.iter().map(String::as_str).collect();
    assert_eq!(code(&fastkm_out(&replay, c.path())), 0);
    assert_eq!(
        std::fs::read(a.path().join("feasibility.csv")).unwrap(),
        std::fs::read(c.path().join("feasibility.csv")).unwrap()
    );
}

#[test]
fn feasibility_zero_ratio_uses_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let o = fastkm_out(
        &[
            "feasibility",
            "--ntest",
            "2",
            "--ninit",
            "3",
            "--kmax",
            "0",
            "--tol",
            "1e-300",
            "--methods",
            "halpern",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let (_, rows) = parse_csv(&dir.path().join("feasibility.csv"));
    assert_eq!(rows[0][2], "-//-");
    assert_eq!(rows[0][3], "-//-");
}

#[test]
fn diagnose_reports_window_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let o = fastkm_out(
        &[
            "diagnose", "--alpha", "3", "--lambda", "1.5", "--n", "1", "--kmax", "1000",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("diagnostics.json"));
    for key in [
        "lambda_window",
        "k_lambda",
        "sup_tail_k_res",
        "loglog_slope",
        "plateau_ratios",
        "energy_min",
        "descent_violations",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["k_lambda"], 72);
    assert!((report["lambda_window"]["lower"].as_f64().unwrap() - 1.33715).abs() < 1e-4);
    assert_eq!(report["lambda_window"]["upper"], 1.75);
    assert_eq!(report["descent_violations"], 0);
    assert!(report["loglog_slope"].as_f64().unwrap() <= -1.0);

    let run = read_json(&dir.path().join("run.json"));
    assert_eq!(run["lambda"], 1.5);
    assert_eq!(run["step"], 2.0);
}

#[test]
fn diagnose_default_lambda_is_window_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = fastkm_out(
        &["diagnose", "--alpha", "3", "--n", "1", "--kmax", "200"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("diagnostics.json"));
    let w = &report["lambda_window"];
    let mid = 0.5 * (w["lower"].as_f64().unwrap() + w["upper"].as_f64().unwrap());
    assert_eq!(report["lambda"].as_f64().unwrap(), mid);
}

#[test]
fn diagnose_rejects_lambda_outside_window() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&fastkm_out(
            &["diagnose", "--alpha", "3", "--lambda", "1.0"],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&fastkm_out(&["diagnose", "--alpha", "2"], dir.path())),
        2
    );
    assert!(!dir.path().join("diagnostics.json").exists());
}

#[test]
fn diagnose_fits_a_saved_trace() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let o = fastkm_out(
        &[
            "rotation",
            "--n",
            "1",
            "--kmax",
            "2000",
            "--methods",
            "fast-km",
        ],
        &run_dir,
    );
    assert_eq!(code(&o), 0);
    let trace = run_dir.join("fast-km.csv");
    let diag_dir = dir.path().join("diag");
    let o = fastkm_out(
        &[
            "diagnose",
            "--alpha",
            "3",
            "--lambda",
            "1.5",
            "--trace",
            trace.to_str().unwrap(),
        ],
        &diag_dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&diag_dir.join("diagnostics.json"));
    assert!(report["loglog_slope"].as_f64().unwrap() <= -1.0);
    assert!(report["energy_min"].is_null());
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let o = fastkm_out(&["diagnose", "--trace", bad.to_str().unwrap()], &diag_dir);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["rotation", "dr-feasibility"] {
        let o = fastkm_out(&["check", "--operator", op, "--pairs", "1000"], dir.path());
        assert_eq!(code(&o), 0, "{op}: {}", String::from_utf8_lossy(&o.stderr));
        let report = read_json(&dir.path().join("check.json"));
        assert_eq!(report["violations"], 0);
        assert_eq!(report["pairs"], 1000);
    }
    let o = fastkm_out(&["check", "--operator", "misdeclared"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("worst margin"));
}

#[test]
fn out_dir_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fastkm"))
        .args(["check", "--operator", "rotation", "--pairs", "10"])
        .env("FASTKM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("check.json").exists());
    assert!(dir.path().join("run.json").exists());
}
