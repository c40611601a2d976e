//! End-to-end tests of the `fringekit` binary: every subcommand, the
//! file-format chain between them, determinism, and failure exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fringekit"))
}

fn write_tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
            "scene": {
                "width": 80, "height": 60,
                "kind": "gaussian-peaks",
                "peaks": [{"center_x_px": 40.0, "center_y_px": 30.0,
                           "sigma_px": 12.0, "height_mm": 8.0}],
                "offset_mm": 2.0
            },
            "fringe": {
                "period_px": 20.0, "mean": 128.0, "amplitude": 100.0,
                "noise_sigma": 0.0, "quantize": "none", "rng_seed": 7
            }
        }"#,
    )
    .unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fringekit");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fringekit");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    out
}

#[test]
fn simulate_writes_expected_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "3",
        ]));
    }

    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 11, "files: {names:?}");
    assert!(names.iter().filter(|n| n.ends_with(".pgm")).count() == 8);
    assert!(names.contains(&"truth_phase.fphm".to_string()));
    assert!(names.contains(&"truth_height.fphm".to_string()));
    assert!(names.contains(&"simulation.json".to_string()));

    // Same seed, byte-identical data outputs. The sidecar echoes the full
    // configuration including the output directory, so compare it with
    // that one field removed.
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        if name == "simulation.json" {
            let strip = |bytes: &[u8]| -> serde_json::Value {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v.as_object_mut().unwrap().remove("out_dir");
                v
            };
            assert_eq!(strip(&a), strip(&b));
        } else {
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }
}

#[test]
fn file_chain_demod_unwrap_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let sim = dir.path().join("sim");
    run_ok(bin().args([
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
    ]));

    let arg = |p: &Path, n: &str| p.join(n).to_str().unwrap().to_string();
    let demod_obj = dir.path().join("demod-obj");
    run_ok(bin().args([
        "demod",
        &arg(&sim, "object_0.pgm"),
        &arg(&sim, "object_1.pgm"),
        &arg(&sim, "object_2.pgm"),
        &arg(&sim, "object_3.pgm"),
        "--out",
        demod_obj.to_str().unwrap(),
    ]));
    let demod_ref = dir.path().join("demod-ref");
    run_ok(bin().args([
        "demod",
        &arg(&sim, "reference_0.pgm"),
        &arg(&sim, "reference_1.pgm"),
        &arg(&sim, "reference_2.pgm"),
        &arg(&sim, "reference_3.pgm"),
        "--out",
        demod_ref.to_str().unwrap(),
    ]));

    let spatial = dir.path().join("spatial");
    run_ok(bin().args([
        "unwrap-spatial",
        &arg(&demod_ref, "phase.fphm"),
        &arg(&demod_ref, "modulation.fphm"),
        "--out",
        spatial.to_str().unwrap(),
    ]));
    // The scan-line variant must also run from the same inputs.
    run_ok(bin().args([
        "unwrap-spatial",
        &arg(&demod_ref, "phase.fphm"),
        &arg(&demod_ref, "modulation.fphm"),
        "--algorithm",
        "itoh",
        "--out",
        dir.path().join("spatial-itoh").to_str().unwrap(),
    ]));

    let geo = dir.path().join("geo");
    run_ok(bin().args([
        "unwrap-geometric",
        &arg(&demod_obj, "phase.fphm"),
        &arg(&spatial, "unwrapped_spatial.fphm"),
        "--out",
        geo.to_str().unwrap(),
    ]));

    let corrected = dir.path().join("corrected");
    run_ok(bin().args([
        "correct",
        &arg(&geo, "unwrapped_geometric.fphm"),
        "--quality",
        &arg(&demod_obj, "modulation.fphm"),
        "--out",
        corrected.to_str().unwrap(),
    ]));

    let eval = dir.path().join("eval");
    let out = run_ok(bin().args([
        "evaluate",
        &arg(&corrected, "corrected.fphm"),
        &arg(&sim, "truth_phase.fphm"),
        "--out",
        eval.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("evaluate prints JSON");
    // The file chain goes through 8-bit PGM, so expect quantization-level
    // error but no fringe-order errors.
    assert_eq!(report["order_error_count"], 0);
    assert!(report["rmse"].as_f64().unwrap() < 0.01);
    assert!(eval.join("report.json").exists());
    assert!(eval.join("abs_error.fphm").exists());
}

#[test]
fn pipeline_synthetic_geometric_and_dual() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());

    let out = run_ok(bin().args([
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("geo").to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["order_error_count"], 0);
    assert!(report["max_abs_err"].as_f64().unwrap() < 1e-9);

    // Dual-frequency on the same scene; period 20 at width 80 gives
    // frequency 4, so ratio 4 makes the low pattern unit-frequency.
    let out = run_ok(bin().args([
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "dual-frequency",
        "--ratio",
        "4",
        "--out",
        dir.path().join("dual").to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["order_error_count"], 0);
    assert!(report["max_abs_err"].as_f64().unwrap() < 1e-9);
    assert!(dir.path().join("dual/unwrapped_dual.fphm").exists());
    assert!(dir.path().join("dual/low_0.pgm").exists());
}

#[test]
fn pipeline_accepts_external_stacks() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let sim = dir.path().join("sim");
    run_ok(bin().args([
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
    ]));

    let stack_args = |prefix: &str| -> Vec<String> {
        (0..4)
            .map(|n| {
                sim.join(format!("{prefix}_{n}.pgm"))
                    .to_str()
                    .unwrap()
                    .into()
            })
            .collect()
    };
    let mut args: Vec<String> = vec![
        "pipeline".into(),
        "--config".into(),
        config.to_str().unwrap().into(),
        "--out".into(),
        dir.path().join("ext").to_str().unwrap().into(),
        "--object-pgm".into(),
    ];
    args.extend(stack_args("object"));
    args.push("--reference-pgm".into());
    args.extend(stack_args("reference"));
    let out = run_ok(bin().args(&args));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // No ground truth attached: completes with a summary, no report.
    assert!(stdout.contains("pipeline complete"), "stdout: {stdout}");
    assert!(dir.path().join("ext/phi_min.fphm").exists());
}

#[test]
fn sweep_emits_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let out = run_ok(bin().args([
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--ratios",
        "2,4",
        "--noise-sigmas",
        "0.0,2.0",
        "--seeds",
        "1,2",
        "--out",
        dir.path().join("sweep").to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("ratio\tnoise_sigma\tseed"));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    let on_disk = fs::read_to_string(dir.path().join("sweep/sweep.tsv")).unwrap();
    assert_eq!(on_disk, stdout);
}

#[test]
fn failures_exit_nonzero_with_stage_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());

    // Missing input file.
    let out = run_err(bin().args([
        "evaluate",
        dir.path().join("nope.fphm").to_str().unwrap(),
        dir.path().join("nope2.fphm").to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(1));

    // Invalid seed pixel: the error message names the failing stage.
    let out = run_err(bin().args([
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--seed-pixel",
        "9999,9999",
        "--out",
        dir.path().join("bad").to_str().unwrap(),
    ]));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unwrap-reference"), "stderr: {stderr}");

    // Corrupt PGM: distinct parse error.
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P6\n2 2\n255\n____").unwrap();
    let bad_str = bad.to_str().unwrap();
    let out = run_err(bin().args(["demod", bad_str, bad_str, bad_str, bad_str]));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unsupported magic"), "stderr: {stderr}");

    // Unknown method name.
    let out = run_err(bin().args([
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "bogus",
    ]));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown method"), "stderr: {stderr}");
}

#[test]
fn unwrap_dual_subcommand_with_unit_fold() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let sim = dir.path().join("sim");
    // Simulate with a low-frequency stack via the dual-frequency method.
    run_ok(bin().args([
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "dual-frequency",
        "--ratio",
        "4",
        "--out",
        sim.to_str().unwrap(),
    ]));

    let arg = |p: &Path, n: &str| p.join(n).to_str().unwrap().to_string();
    let demod_low = dir.path().join("demod-low");
    run_ok(bin().args([
        "demod",
        &arg(&sim, "low_0.pgm"),
        &arg(&sim, "low_1.pgm"),
        &arg(&sim, "low_2.pgm"),
        &arg(&sim, "low_3.pgm"),
        "--out",
        demod_low.to_str().unwrap(),
    ]));
    let demod_obj = dir.path().join("demod-obj");
    run_ok(bin().args([
        "demod",
        &arg(&sim, "object_0.pgm"),
        &arg(&sim, "object_1.pgm"),
        &arg(&sim, "object_2.pgm"),
        &arg(&sim, "object_3.pgm"),
        "--out",
        demod_obj.to_str().unwrap(),
    ]));

    let dual = dir.path().join("dual");
    run_ok(bin().args([
        "unwrap-dual",
        &arg(&demod_low, "phase.fphm"),
        &arg(&demod_obj, "phase.fphm"),
        "--low-freq",
        "1",
        "--high-freq",
        "4",
        "--fold-unit",
        "--out",
        dual.to_str().unwrap(),
    ]));

    let eval = dir.path().join("eval");
    let out = run_ok(bin().args([
        "evaluate",
        &arg(&dual, "unwrapped_dual.fphm"),
        &arg(&sim, "truth_phase.fphm"),
        "--out",
        eval.to_str().unwrap(),
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["order_error_count"], 0);
}
