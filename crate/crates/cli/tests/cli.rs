use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use qrg_cli::commands::verify_with_rule;
use qrg_cli::config::Options;
use qrg_cli::{exit_code, Numerical, OUT_DIR_ENV};
use qrg_core::coupling::{renormalize_step, Coupling};

fn qrg(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qrg"));
    cmd.args(args).env_remove(OUT_DIR_ENV);
    if let Some(dir) = env_out {
        cmd.env(OUT_DIR_ENV, dir);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

#[test]
fn flow_at_fixed_point() {
    let o = qrg(&["flow", "--g", "1", "--steps", "3"], None);
    assert!(o.status.success());
    let g = column(&stdout(&o), "g_n");
    assert_eq!(g, vec![1.0; 4]);
}

#[test]
fn flow_squares_field() {
    let o = qrg(&["flow", "--g", "0.9", "--steps", "3"], None);
    let g = column(&stdout(&o), "g_n");
    for (got, want) in g.iter().zip([0.9, 0.81, 0.6561, 0.43046721]) {
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }
    assert_eq!(column(&stdout(&o), "N"), vec![2.0, 4.0, 8.0, 16.0]);
}

#[test]
fn flow_truncation_goes_to_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = qrg(&["flow", "--g", "3", "--n", "12"], Some(dir.path()));
    assert!(o.status.success());
    let m = manifest(dir.path(), "flow");
    let truncated = m["summary"]["truncated_rows"].as_u64().unwrap();
    assert!(truncated > 0);
    let csv = std::fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    assert_eq!(csv.lines().count() as u64 - 1 + truncated, 13);
    assert!(!m["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn csv_format() {
    let o = qrg(&["peaks", "--g", "1", "--n", "0"], None);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().next().unwrap(), "n,N,g,k,t_max,c_max");
    let row = text.lines().nth(1).unwrap();
    let t_max = row.split(',').nth(4).unwrap();
    assert_eq!(t_max.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn env_dir_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = qrg(&["derivative", "--n", "3..4", "--points", "201"], Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("derivative.csv").exists());
    assert!(dir.path().join("derivative.json").exists());
    let m = manifest(dir.path(), "derivative");
    assert_eq!(m["tool"], "qrg");
    assert_eq!(m["derived"]["critical_field"], 1.0);
    assert_eq!(m["config"]["n"], "3..4");
    assert_eq!(m["config"]["method"], "exact");
    assert!(m["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn out_flag_beats_env() {
    let env = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = qrg(&["flow", "--out", out.path().to_str().unwrap()], Some(env.path()));
    assert!(o.status.success());
    assert!(out.path().join("flow.csv").exists());
    assert!(!env.path().join("flow.csv").exists());
}

#[test]
fn manifest_config_reproduces_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let o = qrg(
        &[
            "collapse",
            "--n",
            "4..5",
            "--points",
            "301",
            "--time-unit",
            "bare",
            "--g",
            "0.8..1.2",
        ],
        Some(first.path()),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(first.path(), "collapse");
    let text: String = m["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    let cfg = second.path().join("run.cfg");
    std::fs::write(&cfg, text).unwrap();
    let o = qrg(&["collapse", "--config", cfg.to_str().unwrap()], Some(second.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["collapse.csv", "collapse.json"] {
        assert_eq!(
            std::fs::read(first.path().join(f)).unwrap(),
            std::fs::read(second.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "g = 0.5\nn = 2\n# comment\nJ = 3\n").unwrap();
    let o = qrg(&["flow", "--config", cfg.to_str().unwrap(), "--g", "0.9"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(column(&text, "g_n")[0], 0.9);
    assert_eq!(column(&text, "J_n")[0], 3.0);
    assert_eq!(column(&text, "n").len(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(qrg(&["flow", "--g", "-1"], None).status.code(), Some(1));
    assert_eq!(qrg(&["flow", "--bogus"], None).status.code(), Some(1));
    assert_eq!(
        qrg(&["dynamics", "--g", "1", "--t", "0..100", "--points", "50"], None)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(qrg(&["derivative", "--g", "0.9"], None).status.code(), Some(1));
    assert_eq!(
        qrg(&["flow", "--config", "/nonexistent/run.cfg"], None).status.code(),
        Some(1)
    );
    // The n = 0 dip lies left of the default range.
    assert_eq!(qrg(&["scaling", "--n", "0..3"], None).status.code(), Some(1));
    // g^(2^10) overflows the field bound.
    assert_eq!(
        qrg(&["derivative", "--n", "10", "--g", "0.5..3"], None).status.code(),
        Some(2)
    );
    assert_eq!(qrg(&["--help"], None).status.code(), Some(0));
}

#[test]
fn derivative_has_unique_interior_minimum() {
    let o = qrg(&["derivative", "--n", "6", "--g", "0.5..1.05"], None);
    assert!(o.status.success());
    let summary: serde_json::Value = {
        let err = String::from_utf8(o.stderr).unwrap();
        serde_json::from_str(err.split_once("--- derivative.json\n").unwrap().1).unwrap()
    };
    let m = &summary["minima"][0];
    assert_eq!(m["interior"], true);
    assert_eq!(m["grid_local_minima"], 1);
    let g_m = m["g_m"].as_f64().unwrap();
    assert!(g_m > 0.5 && g_m < 1.05);
}

#[test]
fn time_series_at_criticality() {
    let dir = tempfile::tempdir().unwrap();
    let o = qrg(
        &[
            "dynamics",
            "--g",
            "1",
            "--t-range",
            "0..40",
            "--n",
            "0..4",
            "--rescale-time",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path(), "dynamics");
    for entry in m["summary"]["maxima"].as_array().unwrap() {
        assert!((entry["envelope"].as_f64().unwrap() - 0.2).abs() < 1e-15);
        assert!(entry["sampled_max"].as_f64().unwrap() <= 0.2 + 1e-15);
    }
    let csv = std::fs::read_to_string(dir.path().join("dynamics.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,n,C,t_rescaled");
}

#[test]
fn time_series_below_criticality_collapses() {
    let dir = tempfile::tempdir().unwrap();
    let o = qrg(
        &[
            "dynamics",
            "--g",
            "0.9",
            "--t-range",
            "0..60",
            "--n",
            "3..6",
            "--points",
            "20001",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path(), "dynamics");
    let maxima: Vec<f64> = m["summary"]["maxima"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["sampled_max"].as_f64().unwrap())
        .collect();
    assert!(maxima.windows(2).all(|w| w[1] < w[0]), "{maxima:?}");
}

#[test]
fn verify_passes_quickly() {
    let start = Instant::now();
    let o = qrg(&["verify", "--grid-points", "200"], None);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.ends_with("PASS")));
}

#[test]
fn verify_catches_perturbed_recursion() {
    let perturbed = |c: Coupling| {
        let r = renormalize_step(c);
        Coupling::new(r.exchange() * (1.0 + 1e-6), r.field()).unwrap()
    };
    let o = Options {
        grid_points: Some(20),
        ..Options::default()
    };
    let report = verify_with_rule(&o, perturbed).unwrap();
    let failure = report.failure.expect("perturbed rule must fail");
    assert!(failure.contains("rg_recursion"));
    let suites = report.summary["suites"].as_array().unwrap();
    let failed: Vec<&str> = suites
        .iter()
        .filter(|v| v["passed"] == false)
        .map(|v| v["suite"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["rg_recursion"]);
    assert_eq!(exit_code(&Numerical(failure).into()), 2);
}
