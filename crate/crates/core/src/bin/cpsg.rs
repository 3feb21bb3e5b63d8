//! Command-line front end: calibration, simulation, training, baselines,
//! deviation/PE diagnostics, sensitivity sweeps, and report merging. Every
//! run writes a manifest (seed + config hash + input digests) so outputs
//! can be reproduced bit-exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use cpsg_core::baselines;
use cpsg_core::calibration::{self, FitOptions};
use cpsg_core::diagnostics::{self, parse_perturbation, Perturbation};
use cpsg_core::error::{CpsgError, Result};
use cpsg_core::game::default_specs;
use cpsg_core::learner::{
    extended_rollout, fixed_policy_rollout, load_hyper, load_weights, run_game_loop, save_weights,
    Basis, HyperParams, LearnerState, TrainingTrace, WeightsFile,
};
use cpsg_core::report::{
    self, config_hash, line_svg, load_summary, render_report, states_series, write_json,
    write_string, Manifest, RunSummary,
};
use cpsg_core::scenario::{builtin_scenario, load_params, load_scenario, save_params, Scenario};

#[derive(Parser)]
#[command(
    name = "cpsg",
    version,
    about = "Disaster-response resource-allocation game: simulator, online learner, diagnostics"
)]
struct Cli {
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Seed override (takes precedence over CPSG_SEED and the scenario file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refit model parameters from a scenario's observed trajectory.
    Calibrate {
        /// Scenario file path or builtin name (harvey_synth, irma_synth).
        scenario: String,
        /// Tikhonov regularization strength.
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        /// Output parameter file (relative paths land in --out-dir).
        #[arg(long, default_value = "params.json")]
        out: PathBuf,
    },
    /// Integrate the model forward without control and report fit metrics.
    Simulate {
        scenario: String,
        /// Model parameter file.
        #[arg(long)]
        params: PathBuf,
        /// Tag the run as the open-loop reference.
        #[arg(long)]
        openloop: bool,
    },
    /// Online three-player actor-critic training.
    Train {
        scenario: String,
        #[arg(long)]
        params: PathBuf,
        /// Hyperparameter JSON (defaults match the published setup).
        #[arg(long)]
        hyper: Option<PathBuf>,
        /// Also roll the frozen policy out to <extend> times the horizon.
        #[arg(long)]
        extend: Option<usize>,
    },
    /// Reference controllers for comparison.
    Baseline {
        scenario: String,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
    },
    /// Unilateral-deviation (exploitability) probe of trained weights.
    Deviate {
        scenario: String,
        /// weights.json written by `train`.
        #[arg(long)]
        weights: PathBuf,
        /// Random directions per player and scale.
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Comma-separated relative perturbation scales.
        #[arg(long, default_value = "0.05,0.10,0.20")]
        scales: String,
    },
    /// Persistence-of-excitation diagnostics from a regressor CSV.
    PeDiag {
        /// regressors.csv written by `train`.
        #[arg(long)]
        trace: PathBuf,
        /// Excitation horizon in time units.
        #[arg(long, default_value_t = 12.0)]
        t_ex: f64,
    },
    /// Merge run summaries into one Markdown report plus figure CSVs.
    Report {
        /// summary.json files or run directories containing them.
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
    },
    /// Train design variants side by side (cost weights, gains, window).
    Sensitivity {
        scenario: String,
        /// Model parameter file (defaults to the reference set).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Perturbation labels: default | q<p>_<s>x<f> | beta<k>x<f> | delta=<n>.
        #[arg(long, value_delimiter = ',')]
        perturb: Vec<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Method {
    Constmax,
    Proportional,
    Centralized,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Seed precedence: --seed flag, then CPSG_SEED, then the scenario file.
fn resolve_scenario(spec: &str, flag_seed: Option<u64>) -> Result<Scenario> {
    let path = Path::new(spec);
    let mut scenario = if path.exists() {
        load_scenario(path)?
    } else {
        builtin_scenario(spec)?
    };
    if let Some(seed) = flag_seed {
        scenario.seed = seed;
    } else if let Ok(text) = std::env::var("CPSG_SEED") {
        scenario.seed = text.parse().map_err(|_| {
            CpsgError::Config(format!("CPSG_SEED must be an unsigned integer, got '{text}'"))
        })?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn finish(out_dir: &Path, mut manifest: Manifest, summary: &RunSummary, outputs: Vec<String>) -> Result<()> {
    manifest.outputs = outputs;
    manifest.outputs.push("summary.json".into());
    manifest.outputs.push("manifest.json".into());
    manifest.outputs.sort();
    write_json(&out_dir.join("summary.json"), summary)?;
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn controls_csv(trace: &TrainingTrace) -> String {
    let mut out = String::from("t,u1_raw,u2_raw,u3_raw,u1,u2,u3\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t, r.u_raw[0], r.u_raw[1], r.u_raw[2], r.u[0], r.u[1], r.u[2]
        );
    }
    out
}

fn residuals_csv(trace: &TrainingTrace) -> String {
    let mut out = String::from("t,eps1,eps2,eps3\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{},{}", r.t, r.eps[0], r.eps[1], r.eps[2]);
    }
    out
}

fn weight_norms_csv(trace: &TrainingTrace) -> String {
    let mut out = String::from("t,wc1,wc2,wc3,wa1,wa2,wa3\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t, r.wc_norm[0], r.wc_norm[1], r.wc_norm[2], r.wa_norm[0], r.wa_norm[1],
            r.wa_norm[2]
        );
    }
    out
}

fn trajectory_csv(states: &[cpsg_core::scenario::StateVector], dt: f64) -> String {
    let mut out = String::from("t,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10\n");
    for (k, x) in states.iter().enumerate() {
        let _ = write!(out, "{}", k as f64 * dt);
        for v in x.0 {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.clone();
    match cli.command {
        Command::Calibrate { scenario, lambda, out } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let observed = sc.observed.clone().ok_or_else(|| {
                CpsgError::Config(format!("scenario '{}' has no observed trajectory", sc.name))
            })?;
            let opts = FitOptions { lambda, ..FitOptions::default() };
            let (params, theta, fit) =
                calibration::fit(&observed, &sc.signals, sc.window_len, sc.dt, &opts)?;
            let rmse = calibration::openloop_rmse(&params, &sc)?;
            let params_path = if out.is_absolute() { out.clone() } else { out_dir.join(&out) };
            if let Some(parent) = params_path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CpsgError::write(parent, e))?;
            }
            save_params(&params_path, &params)?;
            write_json(&out_dir.join("fit_report.json"), &fit)?;
            write_json(&out_dir.join("theta.json"), &theta)?;

            let mut summary = RunSummary::new("calibrate", &sc.name, sc.seed);
            summary.calibration = Some(fit.clone());
            summary.notes.push(format!("open-loop RMSE vs observed: {rmse:.6}"));
            summary.notes.push(format!("fitted parameters written to {}", params_path.display()));
            let gamma_max = params.gamma8.max(params.gamma9).max(params.gamma10);
            if gamma_max * sc.dt >= 2.0 {
                let warn = format!(
                    "response rate {gamma_max} exceeds the explicit-Euler stability bound \
                     for dt={}; integrate the fitted model with dt < {:.3} (the fixed rates \
                     are sized for sub-daily steps)",
                    sc.dt,
                    2.0 / gamma_max
                );
                eprintln!("warning: {warn}");
                summary.notes.push(warn);
            }
            let hash = config_hash(&serde_json::json!({
                "command": "calibrate", "scenario": sc, "lambda": lambda,
            }))?;
            let manifest = Manifest::new("calibrate", &sc.name, sc.seed, hash);
            finish(
                &out_dir,
                manifest,
                &summary,
                vec![
                    "fit_report.json".into(),
                    "theta.json".into(),
                    params_path.display().to_string(),
                ],
            )?;
            println!(
                "calibrate {}: loss {:.6e} after {} iters (converged: {}), drift RMSE {:.3e}, open-loop RMSE {:.4}",
                sc.name, fit.final_loss, fit.iterations, fit.converged, fit.derivative_rmse, rmse
            );
            println!("wrote {}", params_path.display());
        }

        Command::Simulate { scenario, params, openloop } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let p = load_params(&params)?;
            let specs = default_specs(&p);
            let rollout = baselines::open_loop(&sc, &p, &specs)?;
            let metrics = diagnostics::compute_metrics(
                &rollout.states,
                &rollout.controls,
                &rollout.costs,
                sc.dt,
                None,
                sc.observed.as_deref(),
            );
            write_string(&out_dir.join("states.csv"), &trajectory_csv(&rollout.states, sc.dt))?;
            let svg = line_svg(
                &format!("{} open-loop states", sc.name),
                &states_series(&rollout.states, sc.dt, &[0, 3, 7, 8, 9]),
            );
            write_string(&out_dir.join("states.svg"), &svg)?;

            let mut summary = RunSummary::new("simulate", &sc.name, sc.seed);
            summary.label = Some(if openloop {
                format!("open loop ({})", sc.name)
            } else {
                format!("simulate ({})", sc.name)
            });
            summary.metrics = Some(metrics.clone());
            let hash = config_hash(&serde_json::json!({
                "command": "simulate", "scenario": sc, "params": p, "openloop": openloop,
            }))?;
            let mut manifest = Manifest::new("simulate", &sc.name, sc.seed, hash);
            manifest.record_input(&params)?;
            finish(&out_dir, manifest, &summary, vec!["states.csv".into(), "states.svg".into()])?;
            match metrics.rmse_vs_observed {
                Some(r) => println!(
                    "simulate {}: mean fear {:.4}, RMSE vs observed {:.6}",
                    sc.name, metrics.mean_fear, r
                ),
                None => println!("simulate {}: mean fear {:.4}", sc.name, metrics.mean_fear),
            }
        }

        Command::Train { scenario, params, hyper, extend } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let p = load_params(&params)?;
            let hy = match &hyper {
                Some(path) => load_hyper(path)?,
                None => HyperParams::default(),
            };
            let specs = default_specs(&p);
            let basis = Basis::quadratic(10);
            let learner = LearnerState::new(&basis, &hy, sc.seed)?;
            let trace = run_game_loop(&sc, &p, &specs, &basis, learner)?;
            // Headline closed-loop trajectory: the learned policies replayed
            // from x0 without probing. Effort and cost keep the training-run
            // convention (applied controls, probing included).
            let closed = fixed_policy_rollout(&sc, &p, &specs, &basis, &trace.learner.w_a)?;

            let open = baselines::open_loop(&sc, &p, &specs)?;
            let open_metrics = diagnostics::compute_metrics(
                &open.states,
                &open.controls,
                &open.costs,
                sc.dt,
                None,
                None,
            );
            let metrics = diagnostics::compute_metrics(
                &closed.states,
                &trace.controls(),
                &trace.costs(),
                sc.dt,
                Some(open_metrics.mean_fear),
                None,
            );
            let training_metrics = diagnostics::compute_metrics(
                &trace.states,
                &trace.controls(),
                &trace.costs(),
                sc.dt,
                Some(open_metrics.mean_fear),
                None,
            );
            let excitation_steps = trace
                .records
                .iter()
                .filter(|r| r.t <= hy.t_ex + 1e-12)
                .count();
            let pe = diagnostics::pe_diagnostics(&trace.regressors(), excitation_steps)?;
            let sat = diagnostics::saturation_stats(&trace, &specs);

            write_string(&out_dir.join("trace.csv"), &trace.to_csv())?;
            write_string(&out_dir.join("regressors.csv"), &trace.regressors_csv())?;
            let weights = WeightsFile::from_trace(&sc, sc.seed, &p, &hy, &trace);
            save_weights(&out_dir.join("weights.json"), &weights)?;

            let fig = out_dir.join("figures");
            write_string(
                &fig.join("states.csv"),
                &report::states_csv(&open.states, &closed.states, sc.dt, "open", "closed"),
            )?;
            write_string(&fig.join("controls.csv"), &controls_csv(&trace))?;
            write_string(&fig.join("residuals.csv"), &residuals_csv(&trace))?;
            write_string(&fig.join("weight_norms.csv"), &weight_norms_csv(&trace))?;
            write_string(&fig.join("pe_eigenvalues.csv"), &report::pe_csv(&pe))?;
            let mut fear_series = vec![
                (
                    "open x1".to_string(),
                    open.states.iter().enumerate().map(|(k, x)| (k as f64 * sc.dt, x[0])).collect(),
                ),
                (
                    "closed x1".to_string(),
                    closed.states.iter().enumerate().map(|(k, x)| (k as f64 * sc.dt, x[0])).collect(),
                ),
            ];
            fear_series.push((
                "closed x8".to_string(),
                closed.states.iter().enumerate().map(|(k, x)| (k as f64 * sc.dt, x[7])).collect(),
            ));
            write_string(&fig.join("states.svg"), &line_svg("open vs closed loop", &fear_series))?;
            let eps_series: Vec<(String, Vec<(f64, f64)>)> = (0..3)
                .map(|i| {
                    (
                        format!("eps{}", i + 1),
                        trace.records.iter().map(|r| (r.t, r.eps[i])).collect(),
                    )
                })
                .collect();
            write_string(&fig.join("residuals.svg"), &line_svg("Bellman residuals", &eps_series))?;
            let mut norm_series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for i in 0..3 {
                norm_series.push((
                    format!("|wc{}|", i + 1),
                    trace.records.iter().map(|r| (r.t, r.wc_norm[i])).collect(),
                ));
                norm_series.push((
                    format!("|wa{}|", i + 1),
                    trace.records.iter().map(|r| (r.t, r.wa_norm[i])).collect(),
                ));
            }
            write_string(&fig.join("weight_norms.svg"), &line_svg("weight norms", &norm_series))?;

            let mut summary = RunSummary::new("train", &sc.name, sc.seed);
            summary.metrics = Some(metrics.clone());
            summary.open_loop = Some(open_metrics);
            summary.training = Some(training_metrics);
            summary.pe = Some(pe);
            summary.saturation = Some(sat);
            for w in &trace.warnings {
                summary.notes.push(w.clone());
            }
            let mut outputs = vec![
                "trace.csv".into(),
                "regressors.csv".into(),
                "weights.json".into(),
                "figures/states.csv".into(),
                "figures/controls.csv".into(),
                "figures/residuals.csv".into(),
                "figures/weight_norms.csv".into(),
                "figures/pe_eigenvalues.csv".into(),
                "figures/states.svg".into(),
                "figures/residuals.svg".into(),
                "figures/weight_norms.svg".into(),
            ];
            if let Some(factor) = extend {
                let ext = extended_rollout(&trace, &sc, &p, &specs, &basis, factor)?;
                write_string(&out_dir.join("extended_states.csv"), &trajectory_csv(&ext.states, sc.dt))?;
                outputs.push("extended_states.csv".into());
                let ext_metrics = diagnostics::compute_metrics(
                    &ext.states,
                    &ext.controls,
                    &ext.costs,
                    sc.dt,
                    None,
                    None,
                );
                summary.notes.push(format!(
                    "extended rollout x{}: {} steps, mean fear {:.4}, final fear {:.4}",
                    factor,
                    ext.states.len() - 1,
                    ext_metrics.mean_fear,
                    ext.states.last().map(|x| x[0]).unwrap_or(f64::NAN)
                ));
            }
            let hash = config_hash(&serde_json::json!({
                "command": "train", "scenario": sc, "params": p, "hyper": hy, "extend": extend,
            }))?;
            let mut manifest = Manifest::new("train", &sc.name, sc.seed, hash);
            manifest.record_input(&params)?;
            if let Some(h) = &hyper {
                manifest.record_input(h)?;
            }
            finish(&out_dir, manifest, &summary, outputs)?;
            println!(
                "train {}: mean fear {:.4} (open loop {:.4}, reduction {:.1}%), total cost {:.4}",
                sc.name,
                metrics.mean_fear,
                summary.open_loop.as_ref().unwrap().mean_fear,
                metrics.fear_reduction_pct.unwrap_or(0.0),
                metrics.total_cost
            );
        }

        Command::Baseline { scenario, params, method } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let p = load_params(&params)?;
            let specs = default_specs(&p);
            let open = baselines::open_loop(&sc, &p, &specs)?;
            let open_fear = diagnostics::mean_fear(&open.states);
            let mut summary;
            let states;
            let label;
            match method {
                Method::Constmax => {
                    let r = baselines::constant_max(&sc, &p, &specs)?;
                    let m = diagnostics::compute_metrics(
                        &r.states, &r.controls, &r.costs, sc.dt, Some(open_fear), None,
                    );
                    label = "constmax".to_string();
                    summary = RunSummary::new("baseline", &sc.name, sc.seed);
                    summary.metrics = Some(m);
                    states = r.states;
                }
                Method::Proportional => {
                    let tuned = baselines::tune_proportional(
                        &sc,
                        &p,
                        &specs,
                        &baselines::default_gain_grid(),
                    )?;
                    let m = diagnostics::compute_metrics(
                        &tuned.rollout.states,
                        &tuned.rollout.controls,
                        &tuned.rollout.costs,
                        sc.dt,
                        Some(open_fear),
                        None,
                    );
                    label = format!(
                        "proportional K=({}, {}, {})",
                        tuned.gains[0], tuned.gains[1], tuned.gains[2]
                    );
                    summary = RunSummary::new("baseline", &sc.name, sc.seed);
                    summary.metrics = Some(m);
                    summary.notes.push(format!(
                        "tuned gains K = {:?}, total cost {:.6}",
                        tuned.gains, tuned.total_cost
                    ));
                    states = tuned.rollout.states;
                }
                Method::Centralized => {
                    let basis = Basis::quadratic(10);
                    let hy = HyperParams::default();
                    let trace = baselines::centralized_ac(&sc, &p, &specs, &basis, &hy, sc.seed)?;
                    let m = diagnostics::compute_metrics(
                        &trace.states,
                        &trace.controls(),
                        &trace.costs(),
                        sc.dt,
                        Some(open_fear),
                        None,
                    );
                    label = "centralized".to_string();
                    summary = RunSummary::new("baseline", &sc.name, sc.seed);
                    summary.metrics = Some(m);
                    states = trace.states;
                }
            }
            summary.label = Some(format!("{label} ({})", sc.name));
            write_string(&out_dir.join("states.csv"), &trajectory_csv(&states, sc.dt))?;
            let hash = config_hash(&serde_json::json!({
                "command": "baseline", "scenario": sc, "params": p,
                "method": format!("{method:?}").to_lowercase(),
            }))?;
            let mut manifest = Manifest::new("baseline", &sc.name, sc.seed, hash);
            manifest.record_input(&params)?;
            finish(&out_dir, manifest, &summary, vec!["states.csv".into()])?;
            let m = summary.metrics.as_ref().unwrap();
            println!(
                "baseline {label} on {}: mean fear {:.4}, effort {:.4}, total cost {:.4}",
                sc.name, m.mean_fear, m.effort, m.total_cost
            );
        }

        Command::Deviate { scenario, weights, n, scales } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let wf: WeightsFile = load_weights(&weights)?;
            let p = wf.params.clone();
            let specs = default_specs(&p);
            let basis = Basis::quadratic(10);
            let w_a = wf.actor_weights()?;
            let scale_list: Vec<f64> = scales
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        CpsgError::Config(format!("bad scale '{s}' in --scales"))
                    })
                })
                .collect::<Result<_>>()?;
            let dev = diagnostics::deviation_test(
                &sc, &p, &specs, &basis, &w_a, n, &scale_list, sc.seed,
            )?;
            write_string(&out_dir.join("deviation.csv"), &report::deviation_csv(&dev))?;
            let mut summary = RunSummary::new("deviate", &sc.name, sc.seed);
            summary.deviation = Some(dev.clone());
            let hash = config_hash(&serde_json::json!({
                "command": "deviate", "scenario": sc, "weights": wf, "n": n, "scales": scale_list,
            }))?;
            let mut manifest = Manifest::new("deviate", &sc.name, sc.seed, hash);
            manifest.record_input(&weights)?;
            finish(&out_dir, manifest, &summary, vec!["deviation.csv".into()])?;
            for pd in &dev.players {
                let worst = pd
                    .scales
                    .iter()
                    .map(|s| s.exploitability_pct)
                    .fold(0.0_f64, f64::max);
                println!(
                    "deviate P{}: base cost {:.4}, worst exploitability {:.3}%",
                    pd.player, pd.base_cost, worst
                );
            }
        }

        Command::PeDiag { trace, t_ex } => {
            let text = std::fs::read_to_string(&trace).map_err(|e| CpsgError::read(&trace, e))?;
            let mut times = Vec::new();
            let mut sigmas = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                if ln == 0 || line.trim().is_empty() {
                    continue;
                }
                let mut cells = line.split(',');
                let t: f64 = cells
                    .next()
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| CpsgError::Config(format!("bad time on line {}", ln + 1)))?;
                let row: Vec<f64> = cells
                    .map(|c| {
                        c.parse::<f64>().map_err(|_| {
                            CpsgError::Config(format!("bad value on line {}", ln + 1))
                        })
                    })
                    .collect::<Result<_>>()?;
                times.push(t);
                sigmas.push(row);
            }
            let excitation_steps = times.iter().filter(|t| **t <= t_ex + 1e-12).count();
            let pe = diagnostics::pe_diagnostics(&sigmas, excitation_steps)?;
            write_string(&out_dir.join("pe_eigenvalues.csv"), &report::pe_csv(&pe))?;
            let series = vec![(
                "min eig".to_string(),
                pe.min_eig_series
                    .iter()
                    .enumerate()
                    .map(|(k, v)| ((k + 1) as f64, *v))
                    .collect(),
            )];
            write_string(&out_dir.join("pe.svg"), &line_svg("running minimum eigenvalue", &series))?;
            let mut summary = RunSummary::new("pe-diag", "-", 0);
            summary.pe = Some(pe.clone());
            let hash = config_hash(&serde_json::json!({
                "command": "pe-diag", "t_ex": t_ex, "rows": sigmas.len(),
            }))?;
            let mut manifest = Manifest::new("pe-diag", "-", 0, hash);
            manifest.record_input(&trace)?;
            finish(
                &out_dir,
                manifest,
                &summary,
                vec!["pe_eigenvalues.csv".into(), "pe.svg".into()],
            )?;
            println!(
                "pe-diag: {} samples, effective rank {} of {}, min eig {:.3e}",
                pe.steps, pe.effective_rank, pe.basis_dim, pe.final_min_eig
            );
        }

        Command::Report { traces } => {
            let mut summaries = Vec::with_capacity(traces.len());
            for path in &traces {
                summaries.push(load_summary(path)?);
            }
            let markdown = render_report(&summaries);
            write_string(&out_dir.join("report.md"), &markdown)?;
            let mut outputs = vec!["report.md".to_string()];
            for (idx, s) in summaries.iter().enumerate() {
                let tag: String = s
                    .display_label()
                    .chars()
                    .map(|c| if c.is_alphanumeric() { c } else { '_' })
                    .collect();
                let tag = format!("{idx}_{tag}");
                if let Some(dev) = &s.deviation {
                    let name = format!("figures/deviation_{tag}.csv");
                    write_string(&out_dir.join(&name), &report::deviation_csv(dev))?;
                    outputs.push(name);
                }
                if let Some(pe) = &s.pe {
                    let name = format!("figures/pe_{tag}.csv");
                    write_string(&out_dir.join(&name), &report::pe_csv(pe))?;
                    outputs.push(name);
                }
                if let Some(rows) = &s.sensitivity {
                    let name = format!("figures/sensitivity_{tag}.csv");
                    write_string(&out_dir.join(&name), &report::sensitivity_csv(rows))?;
                    outputs.push(name);
                }
            }
            let hash = config_hash(&serde_json::json!({
                "command": "report",
                "traces": traces.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }))?;
            let mut manifest = Manifest::new("report", "-", 0, hash);
            for path in &traces {
                let file = if path.is_dir() { path.join("summary.json") } else { path.clone() };
                manifest.record_input(&file)?;
            }
            let summary = RunSummary::new("report", "-", 0);
            finish(&out_dir, manifest, &summary, outputs)?;
            println!("report: merged {} summaries into {}", summaries.len(), out_dir.join("report.md").display());
        }

        Command::Sensitivity { scenario, params, perturb } => {
            let sc = resolve_scenario(&scenario, cli.seed)?;
            let p = match &params {
                Some(path) => load_params(path)?,
                None => cpsg_core::scenario::CpsParams::reference(),
            };
            let specs = default_specs(&p);
            let basis = Basis::quadratic(10);
            let hy = HyperParams::default();
            let labels: Vec<String> = if perturb.is_empty() {
                ["default", "beta1x2", "beta1x0.5", "q1_1x2", "q1_1x0.5", "delta=3"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            } else {
                perturb
            };
            let perts: Vec<Perturbation> = labels
                .iter()
                .map(|l| parse_perturbation(l))
                .collect::<Result<_>>()?;
            let rows = diagnostics::sensitivity_sweep(&sc, &p, &specs, &basis, &hy, sc.seed, &perts)?;
            write_string(&out_dir.join("sensitivity.csv"), &report::sensitivity_csv(&rows))?;
            let mut summary = RunSummary::new("sensitivity", &sc.name, sc.seed);
            summary.sensitivity = Some(rows.clone());
            let hash = config_hash(&serde_json::json!({
                "command": "sensitivity", "scenario": sc, "params": p, "perturb": labels,
            }))?;
            let mut manifest = Manifest::new("sensitivity", &sc.name, sc.seed, hash);
            if let Some(path) = &params {
                manifest.record_input(path)?;
            }
            finish(&out_dir, manifest, &summary, vec!["sensitivity.csv".into()])?;
            for r in &rows {
                println!(
                    "sensitivity {}: fear reduction {:.2}%, effort {:.4}, total cost {:.4}",
                    r.label, r.fear_reduction_pct, r.effort, r.total_cost
                );
            }
        }
    }
    Ok(())
}
