//! End-to-end drive of the command-line surface: calibrate, simulate,
//! train, probe, and merge — each stage consuming the files the previous
//! one wrote, exactly as a user would chain them.

use std::path::{Path, PathBuf};
use std::process::Command;

use cpsg_core::scenario::{save_params, CpsParams};

struct Workspace {
    root: PathBuf,
}

impl Workspace {
    fn new(tag: &str) -> Self {
        let root = std::env::temp_dir().join(format!("cpsg_cli_{tag}_{}", std::process::id()));
        std::fs::remove_dir_all(&root).ok();
        std::fs::create_dir_all(&root).unwrap();
        Workspace { root }
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Run the binary with `--out-dir <dir>` and return captured stdout.
    fn run(&self, dir: &str, args: &[&str]) -> String {
        let out_dir = self.dir(dir);
        let output = Command::new(env!("CARGO_BIN_EXE_cpsg"))
            .arg("--out-dir")
            .arg(&out_dir)
            .args(args)
            .output()
            .expect("binary launches");
        assert!(
            output.status.success(),
            "cpsg {args:?} failed:\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
        String::from_utf8(output.stdout).expect("stdout is UTF-8")
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.root).ok();
    }
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("missing {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad JSON {}: {e}", path.display()))
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("missing {}: {e}", path.display()))
        .lines()
        .count()
}

#[test]
fn pipeline_calibrate_simulate_train_probe_report() {
    let ws = Workspace::new("pipeline");

    // 1. Calibrate against the bundled observed block.
    let out = ws.run("calib", &["calibrate", "harvey_synth"]);
    assert!(out.contains("calibrate"), "stdout: {out}");
    let fitted_params = ws.dir("calib").join("params.json");
    assert!(fitted_params.exists());
    let fit = read_json(&ws.dir("calib").join("fit_report.json"));
    assert!(fit["derivative_rmse"].as_f64().unwrap().is_finite());
    assert_eq!(fit["lambda"].as_f64().unwrap(), 0.01);

    // 2. Open-loop simulation with the fitted parameters reports model fit.
    ws.run(
        "open",
        &[
            "simulate",
            "harvey_synth",
            "--params",
            fitted_params.to_str().unwrap(),
            "--openloop",
        ],
    );
    assert_eq!(line_count(&ws.dir("open").join("states.csv")), 19, "header + 18 states");
    let open_summary = read_json(&ws.dir("open").join("summary.json"));
    let rmse = open_summary["metrics"]["rmse_vs_observed"].as_f64().unwrap();
    assert!(rmse.is_finite() && rmse < 0.5, "open-loop RMSE {rmse}");

    // 3. Train with the reference parameters and the scenario's seed.
    let ref_params = ws.root.join("reference_params.json");
    save_params(&ref_params, &CpsParams::reference()).unwrap();
    let out = ws.run(
        "train",
        &["train", "harvey_synth", "--params", ref_params.to_str().unwrap()],
    );
    assert!(out.contains("mean fear"), "stdout: {out}");
    let train_dir = ws.dir("train");
    assert_eq!(line_count(&train_dir.join("trace.csv")), 18, "header + 17 steps");
    for file in [
        "weights.json",
        "regressors.csv",
        "summary.json",
        "manifest.json",
        "figures/states.csv",
        "figures/controls.csv",
        "figures/residuals.csv",
        "figures/weight_norms.csv",
        "figures/pe_eigenvalues.csv",
    ] {
        assert!(train_dir.join(file).exists(), "train should write {file}");
    }
    let train_summary = read_json(&train_dir.join("summary.json"));
    let reduction = train_summary["metrics"]["fear_reduction_pct"].as_f64().unwrap();
    assert!(reduction > 0.0, "training reduces fear: {reduction}%");

    // 4. Exploitability probe of the learned weights (light: 10 directions).
    ws.run(
        "deviate",
        &[
            "deviate",
            "harvey_synth",
            "--weights",
            train_dir.join("weights.json").to_str().unwrap(),
            "--n",
            "10",
        ],
    );
    // Header plus 3 players x 3 default scales.
    assert_eq!(line_count(&ws.dir("deviate").join("deviation.csv")), 10);

    // 5. Excitation diagnostics from the recorded regressors.
    let out = ws.run(
        "pe",
        &[
            "pe-diag",
            "--trace",
            train_dir.join("regressors.csv").to_str().unwrap(),
        ],
    );
    assert!(out.contains("rank"), "stdout: {out}");
    assert!(ws.dir("pe").join("pe_eigenvalues.csv").exists());

    // 6. Merge everything into one report.
    let out = ws.run(
        "report",
        &[
            "report",
            "--traces",
            ws.dir("open").to_str().unwrap(),
            train_dir.to_str().unwrap(),
            ws.dir("deviate").to_str().unwrap(),
        ],
    );
    assert!(out.contains("report"), "stdout: {out}");
    let report = std::fs::read_to_string(ws.dir("report").join("report.md")).unwrap();
    assert!(report.contains("## Outcome metrics"));
    assert!(report.contains("| mean fear |"), "metrics table present");
    assert!(report.contains("harvey_synth"));
    assert!(report.contains("## Unilateral deviations"), "deviation section present");
}

#[test]
fn baseline_and_sensitivity_commands() {
    let ws = Workspace::new("baseline");
    let ref_params = ws.root.join("reference_params.json");
    save_params(&ref_params, &CpsParams::reference()).unwrap();

    let out = ws.run(
        "constmax",
        &[
            "baseline",
            "harvey_synth",
            "--params",
            ref_params.to_str().unwrap(),
            "--method",
            "constmax",
        ],
    );
    assert!(out.contains("constmax"), "stdout: {out}");
    let summary = read_json(&ws.dir("constmax").join("summary.json"));
    // Saturated controls on every step: effort = 3 players x 17 steps x 1^2.
    let effort = summary["metrics"]["effort"].as_f64().unwrap();
    assert!((effort - 51.0).abs() < 1e-9, "constmax effort {effort}");

    let out = ws.run(
        "sens",
        &[
            "sensitivity",
            "harvey_synth",
            "--perturb",
            "default,beta1x2",
        ],
    );
    assert!(out.contains("sensitivity"), "stdout: {out}");
    // Header plus one row per variant.
    assert_eq!(line_count(&ws.dir("sens").join("sensitivity.csv")), 3);
}

#[test]
fn seed_override_changes_exploration() {
    let ws = Workspace::new("seeds");
    let ref_params = ws.root.join("reference_params.json");
    save_params(&ref_params, &CpsParams::reference()).unwrap();

    let mut traces = Vec::new();
    for (dir, seed) in [("s42", "42"), ("s43", "43")] {
        ws.run(
            dir,
            &[
                "--seed",
                seed,
                "train",
                "harvey_synth",
                "--params",
                ref_params.to_str().unwrap(),
            ],
        );
        traces.push(std::fs::read(ws.dir(dir).join("trace.csv")).unwrap());
    }
    assert_ne!(traces[0], traces[1], "different seeds draw different probe phases");
}
