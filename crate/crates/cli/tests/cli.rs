//! End-to-end checks of the installed binary: exit codes, artifact
//! layout, reproducibility of the written files, and the plain-text
//! outputs of the analysis subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_dmi-sim")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dmi-sim-cli-{}-{label}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run_ok(args: &[&str]) -> Output {
    let out = Command::new(binary()).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

#[test]
fn simulate_writes_reproducible_artifacts() {
    let config = configs_dir().join("smoke.toml");
    let first = scratch("repro-a");
    let second = scratch("repro-b");

    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    run_ok(&["simulate", "--config", config.to_str().unwrap(), "--out", second.to_str().unwrap()]);

    for name in ["report.json", "blocks.csv", "timeline.csv"] {
        let a = fs::read(first.join(name)).expect("first artifact");
        let b = fs::read(second.join(name)).expect("second artifact");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap())
            .expect("manifest parses");
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 42);
}

#[test]
fn simulate_trace_lists_every_block() {
    let config = configs_dir().join("smoke.toml");
    let out_dir = scratch("trace");
    run_ok(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--trace",
    ]);

    let blocks = fs::read_to_string(out_dir.join("blocks.csv")).unwrap();
    let trace = fs::read_to_string(out_dir.join("trace.jsonl")).unwrap();
    let block_rows = blocks.lines().count() - 1;
    let trace_rows = trace.lines().count();
    assert_eq!(block_rows, trace_rows, "one trace line per block");
    let first: serde_json::Value =
        serde_json::from_str(trace.lines().next().unwrap()).expect("trace line parses");
    assert_eq!(first["target_hex"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_assertions_gate_the_exit_code() {
    let config = configs_dir().join("smoke.toml");
    let out_dir = scratch("assert");

    let pass = run_ok(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--assert",
        "fork_rate<0.5",
        "--assert",
        "canonical_blocks>10",
    ]);
    let stdout = String::from_utf8_lossy(&pass.stdout);
    assert_eq!(stdout.matches("assert ok:").count(), 2, "stdout: {stdout}");

    let fail = Command::new(binary())
        .args([
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--assert",
            "tps>=1000",
        ])
        .output()
        .expect("binary runs");
    assert_eq!(fail.status.code(), Some(2), "failed assertion exits 2");
    assert!(String::from_utf8_lossy(&fail.stdout).contains("assert FAILED: tps>=1000"));
}

#[test]
fn missing_config_is_a_plain_error() {
    let out = Command::new(binary())
        .args(["simulate", "--config", "/nonexistent/nowhere.toml", "--out", "/tmp/unused"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn target_prints_one_retargeting_decision() {
    let out = run_ok(&["target", "--block-size", "1001000"]);
    let decision: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("target output is JSON");
    assert_eq!(decision["target_hex"].as_str().unwrap().len(), 64);
    let interval = decision["interval_seconds"].as_f64().unwrap();
    // Default network: ~1.3 s pairwise propagation, so the interval
    // lands a little above the 600 s the calibrated network would give.
    assert!(interval > 600.0 && interval < 625.0, "interval {interval}");
    assert_eq!(decision["interval_clamp"], serde_json::Value::Null);
    assert_eq!(decision["target_clamped"], false);
}

#[test]
fn propagation_exports_the_two_wave_curve() {
    let out = run_ok(&[
        "propagation",
        "--block-size",
        "1000",
        "--nodes",
        "2",
        "--neighbor-degree",
        "1",
        "--bandwidth",
        "1000",
        "--delay",
        "0",
    ]);
    let text = String::from_utf8(out.stdout).expect("utf8");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        vec![
            "t_seconds,informed_fraction",
            "0,0.5",
            "1,1",
            "# uninformed_integral_seconds,0.5",
        ],
    );
}

#[test]
fn analytic_sweep_covers_the_grid() {
    let out_dir = scratch("sweep-analytic");
    let sweep = out_dir.join("grid.toml");
    fs::create_dir_all(&out_dir).unwrap();
    fs::write(
        &sweep,
        r#"
mode = "analytic"

[grid]
block_size_bytes = { min = 200000.0, max = 1000000.0, steps = 3 }
interval_seconds = [120.0, 600.0, 1200.0]
"#,
    )
    .unwrap();

    run_ok(&["sweep", "--config", sweep.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "size_bytes,interval_seconds,analytic_fork_rate");
    assert_eq!(rows.len(), 1 + 9, "3x3 grid");

    // Longer intervals fork less at a fixed size.
    let rate = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(rate(rows[1]) > rate(rows[2]));
    assert!(rate(rows[2]) > rate(rows[3]));
}

#[test]
fn simulation_sweep_reports_observed_fork_rates() {
    let config = configs_dir().join("sweep-simulation.toml");
    let out_dir = scratch("sweep-sim");
    run_ok(&["sweep", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);

    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "size_bytes,interval_seconds,analytic_fork_rate,observed_fork_rate");
    assert_eq!(rows.len(), 1 + 4, "2x2 grid");
    for row in &rows[1..] {
        let observed = row.split(',').nth(3).unwrap().parse::<f64>().unwrap();
        assert!((0.0..1.0).contains(&observed), "row {row}");
    }
}
