//! Post-run diagnostics: outcome metrics, unilateral-deviation
//! (exploitability) probes, persistence-of-excitation checks on the critic
//! regressors, saturation accounting, and design-sensitivity sweeps.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::InputVectors;
use crate::error::{CpsgError, Result};
use crate::game::{PlayerSpec, N_PLAYERS};
use crate::learner::{rollout_with, Basis, Rollout, TrainingTrace};
use crate::scenario::{CpsParams, Scenario, StateVector};

/// Outcome summary for one trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean fear level over the post-initial states.
    pub mean_fear: f64,
    /// Percent reduction vs a reference mean fear, when one is supplied.
    pub fear_reduction_pct: Option<f64>,
    /// Mean `1 - x8` (grid shortfall).
    pub power_deficit: f64,
    /// Mean `1 - x4` (physical-health shortfall).
    pub health_deficit: f64,
    /// Mean `1 - x9` (EMS-capacity shortfall).
    pub ems_deficit: f64,
    /// Mean `x10` (fake-news level).
    pub fake_news: f64,
    /// Integrated squared control effort `sum_t sum_i u_i^2 dt`.
    pub effort: f64,
    pub per_player_cost: [f64; N_PLAYERS],
    pub total_cost: f64,
    /// RMSE vs an observed trajectory, when one is supplied.
    pub rmse_vs_observed: Option<f64>,
}

/// Mean fear over the states visited after the shared initial condition.
pub fn mean_fear(states: &[StateVector]) -> f64 {
    let slice = if states.len() > 1 { &states[1..] } else { states };
    slice.iter().map(|x| x[0]).sum::<f64>() / slice.len() as f64
}

pub fn compute_metrics(
    states: &[StateVector],
    controls: &[[f64; N_PLAYERS]],
    costs: &[f64; N_PLAYERS],
    dt: f64,
    reference_mean_fear: Option<f64>,
    observed: Option<&[StateVector]>,
) -> MetricsReport {
    let slice = if states.len() > 1 { &states[1..] } else { states };
    let n = slice.len() as f64;
    let mf = mean_fear(states);
    let fear_reduction_pct = reference_mean_fear.map(|open| {
        if open.abs() < 1e-300 {
            0.0
        } else {
            (open - mf) / open * 100.0
        }
    });
    let effort = controls
        .iter()
        .map(|u| u.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        * dt;
    let rmse_vs_observed = observed.map(|obs| {
        let len = states.len().min(obs.len());
        let mut sum = 0.0;
        for k in 0..len {
            for i in 0..10 {
                let r = states[k][i] - obs[k][i];
                sum += r * r;
            }
        }
        (sum / (len as f64 * 10.0)).sqrt()
    });
    MetricsReport {
        mean_fear: mf,
        fear_reduction_pct,
        power_deficit: slice.iter().map(|x| 1.0 - x[7]).sum::<f64>() / n,
        health_deficit: slice.iter().map(|x| 1.0 - x[3]).sum::<f64>() / n,
        ems_deficit: slice.iter().map(|x| 1.0 - x[8]).sum::<f64>() / n,
        fake_news: slice.iter().map(|x| x[9]).sum::<f64>() / n,
        effort,
        per_player_cost: *costs,
        total_cost: costs.iter().sum(),
        rmse_vs_observed,
    }
}

// ---------------------------------------------------------------------------
// Unilateral deviation / exploitability
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationScale {
    /// Relative perturbation magnitude (fraction of the player's actor norm).
    pub scale: f64,
    pub min_cost: f64,
    pub mean_cost: f64,
    pub max_cost: f64,
    /// `base_cost - min_cost` (positive when some deviation improves).
    pub best_improvement: f64,
    /// `max(0, best_improvement / |base_cost|) * 100`.
    pub exploitability_pct: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlayerDeviation {
    pub player: usize,
    pub base_cost: f64,
    pub actor_norm: f64,
    pub scales: Vec<DeviationScale>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationReport {
    pub n_directions: usize,
    pub seed: u64,
    pub players: Vec<PlayerDeviation>,
}

fn policy_cost(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    weights: &[Vec<f64>; N_PLAYERS],
    player: usize,
) -> Result<f64> {
    let rollout = policy_rollout(scenario, params, specs, basis, weights)?;
    Ok(rollout.costs[player])
}

/// Joint rollout under the fixed (exploration-free) actor policies.
pub fn policy_rollout(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    weights: &[Vec<f64>; N_PLAYERS],
) -> Result<Rollout> {
    let specs_local = specs.clone();
    let basis = basis.clone();
    let weights = weights.clone();
    rollout_with(scenario, params, specs, move |_, x| {
        let mut u = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            let slope = basis.grad_dot(x, &specs_local[i].g);
            u[i] = -crate::learner::dot(&slope, &weights[i]) / (2.0 * specs_local[i].r_own());
        }
        u
    })
}

/// For each player in turn, perturb only that player's actor weights along
/// `n` isotropic unit directions at each relative scale, keep the opponents
/// frozen, and compare realized costs against the unperturbed profile.
pub fn deviation_test(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    weights: &[Vec<f64>; N_PLAYERS],
    n_directions: usize,
    scales: &[f64],
    seed: u64,
) -> Result<DeviationReport> {
    if n_directions == 0 {
        return Err(CpsgError::Config("deviation test needs at least 1 direction".into()));
    }
    let p = basis.p();
    let mut players = Vec::with_capacity(N_PLAYERS);
    for i in 0..N_PLAYERS {
        let base_cost = policy_cost(scenario, params, specs, basis, weights, i)?;
        let actor_norm = crate::learner::norm(&weights[i]);
        // Per-player stream so adding players never reshuffles draws.
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut directions = Vec::with_capacity(n_directions);
        for _ in 0..n_directions {
            let mut d: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let nrm = crate::learner::norm(&d);
            if nrm > 0.0 {
                for v in &mut d {
                    *v /= nrm;
                }
            }
            directions.push(d);
        }
        let mut scale_rows = Vec::with_capacity(scales.len());
        for &scale in scales {
            let radius = scale * actor_norm;
            let mut min_cost = f64::INFINITY;
            let mut max_cost = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for d in &directions {
                let mut perturbed = weights.clone();
                for (w, dv) in perturbed[i].iter_mut().zip(d) {
                    *w += radius * dv;
                }
                let cost = policy_cost(scenario, params, specs, basis, &perturbed, i)?;
                min_cost = min_cost.min(cost);
                max_cost = max_cost.max(cost);
                sum += cost;
            }
            let best_improvement = base_cost - min_cost;
            let denom = base_cost.abs();
            let exploitability_pct = if denom < 1e-300 {
                if best_improvement > 0.0 { f64::INFINITY } else { 0.0 }
            } else {
                (best_improvement / denom).max(0.0) * 100.0
            };
            scale_rows.push(DeviationScale {
                scale,
                min_cost,
                mean_cost: sum / n_directions as f64,
                max_cost,
                best_improvement,
                exploitability_pct,
            });
        }
        players.push(PlayerDeviation {
            player: i + 1,
            base_cost,
            actor_norm,
            scales: scale_rows,
        });
    }
    Ok(DeviationReport { n_directions, seed, players })
}

// ---------------------------------------------------------------------------
// Persistence of excitation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeReport {
    pub steps: usize,
    pub basis_dim: usize,
    /// Eigenvalues above `rank_threshold` in the final averaged Gram matrix.
    pub effective_rank: usize,
    pub rank_threshold: f64,
    pub max_eig: f64,
    pub final_min_eig: f64,
    /// Running minimum eigenvalue of the averaged Gram matrix after each step.
    pub min_eig_series: Vec<f64>,
    /// Final spectrum, descending.
    pub spectrum: Vec<f64>,
    /// Minimum eigenvalue of the Gram average restricted to the excitation
    /// window (first `excitation_steps` samples); equals `final_min_eig`
    /// when the window covers the whole run.
    pub windowed_min_eig: f64,
    pub excitation_steps: usize,
}

/// Gram-matrix analysis of the normalized critic regressors
/// `sigma / (sigma' sigma + 1)`.
pub fn pe_diagnostics(sigmas: &[Vec<f64>], excitation_steps: usize) -> Result<PeReport> {
    if sigmas.is_empty() {
        return Err(CpsgError::Config("PE diagnostics need at least one regressor sample".into()));
    }
    let p = sigmas[0].len();
    if sigmas.iter().any(|s| s.len() != p) {
        return Err(CpsgError::Config("regressor samples have inconsistent dimension".into()));
    }
    let normalized: Vec<DVector<f64>> = sigmas
        .iter()
        .map(|s| {
            let v = DVector::from_column_slice(s);
            let denom = v.dot(&v) + 1.0;
            v / denom
        })
        .collect();

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut min_eig_series = Vec::with_capacity(normalized.len());
    let mut windowed_min_eig = f64::NAN;
    let excitation_steps = excitation_steps.min(normalized.len());
    for (k, v) in normalized.iter().enumerate() {
        gram += v * v.transpose();
        let avg = gram.clone() / (k + 1) as f64;
        let eigs = avg.symmetric_eigenvalues();
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        min_eig_series.push(min);
        if k + 1 == excitation_steps {
            windowed_min_eig = min;
        }
    }
    let avg = gram / normalized.len() as f64;
    let mut spectrum: Vec<f64> = avg.symmetric_eigenvalues().iter().cloned().collect();
    spectrum.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let max_eig = spectrum[0];
    let rank_threshold = 1e-10 * max_eig.max(0.0);
    let effective_rank = spectrum.iter().filter(|&&l| l > rank_threshold).count();
    let final_min_eig = *spectrum.last().unwrap();
    if windowed_min_eig.is_nan() {
        windowed_min_eig = final_min_eig;
    }
    Ok(PeReport {
        steps: normalized.len(),
        basis_dim: p,
        effective_rank,
        rank_threshold,
        max_eig,
        final_min_eig,
        min_eig_series,
        spectrum,
        windowed_min_eig,
        excitation_steps,
    })
}

// ---------------------------------------------------------------------------
// Saturation accounting
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaturationReport {
    /// Fraction of steps where the raw control was negative, per player.
    pub below_zero: [f64; N_PLAYERS],
    /// Fraction of steps where the raw control exceeded the cap, per player.
    pub above_max: [f64; N_PLAYERS],
    /// Fraction of steps where the applied control was exactly zero.
    pub at_zero: [f64; N_PLAYERS],
    /// Fraction of steps each state component hit the box projection.
    pub state_clamp_fraction: [f64; 10],
}

pub fn saturation_stats(trace: &TrainingTrace, specs: &[PlayerSpec; N_PLAYERS]) -> SaturationReport {
    let n = trace.records.len().max(1) as f64;
    let mut below = [0usize; N_PLAYERS];
    let mut above = [0usize; N_PLAYERS];
    let mut zero = [0usize; N_PLAYERS];
    let mut clamp = [0usize; 10];
    for r in &trace.records {
        for i in 0..N_PLAYERS {
            if r.u_raw[i] < 0.0 {
                below[i] += 1;
            }
            if r.u_raw[i] > specs[i].u_max {
                above[i] += 1;
            }
            if r.u[i] == 0.0 {
                zero[i] += 1;
            }
        }
        for (c, hit) in clamp.iter_mut().zip(&r.clamped) {
            if *hit {
                *c += 1;
            }
        }
    }
    let frac3 = |a: [usize; N_PLAYERS]| [a[0] as f64 / n, a[1] as f64 / n, a[2] as f64 / n];
    let mut state_clamp_fraction = [0.0; 10];
    for (out, c) in state_clamp_fraction.iter_mut().zip(&clamp) {
        *out = *c as f64 / n;
    }
    SaturationReport {
        below_zero: frac3(below),
        above_max: frac3(above),
        at_zero: frac3(zero),
        state_clamp_fraction,
    }
}

// ---------------------------------------------------------------------------
// Design sensitivity
// ---------------------------------------------------------------------------

/// One design tweak applied before a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// Baseline design, no change.
    Default,
    /// Scale penalty weight `s` (1-based) of player `p`: `q<p>_<s>x<factor>`.
    QWeight { player: usize, slot: usize, factor: f64 },
    /// Scale a control gain: `beta<k>x<factor>` with `k` in {1, 8, 9, 10}.
    Beta { channel: usize, factor: f64 },
    /// Override the information-window length: `delta=<steps>`.
    Delta { window_len: usize },
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Default => write!(f, "default"),
            Perturbation::QWeight { player, slot, factor } => {
                write!(f, "q{player}_{slot}x{factor}")
            }
            Perturbation::Beta { channel, factor } => write!(f, "beta{channel}x{factor}"),
            Perturbation::Delta { window_len } => write!(f, "delta={window_len}"),
        }
    }
}

/// Parse a perturbation label: `default`, `q<p>_<s>x<f>`, `beta<k>x<f>`,
/// or `delta=<steps>`.
pub fn parse_perturbation(text: &str) -> Result<Perturbation> {
    let bad = |msg: &str| CpsgError::Config(format!("perturbation '{text}': {msg}"));
    let t = text.trim();
    if t == "default" {
        return Ok(Perturbation::Default);
    }
    if let Some(rest) = t.strip_prefix("delta=") {
        let window_len: usize = rest.parse().map_err(|_| bad("expected delta=<steps>"))?;
        if window_len == 0 {
            return Err(bad("window length must be >= 1"));
        }
        return Ok(Perturbation::Delta { window_len });
    }
    if let Some(rest) = t.strip_prefix("beta") {
        let (chan, factor) = rest.split_once('x').ok_or_else(|| bad("expected beta<k>x<factor>"))?;
        let channel: usize = chan.parse().map_err(|_| bad("bad channel"))?;
        if ![1, 8, 9, 10].contains(&channel) {
            return Err(bad("channel must be one of 1, 8, 9, 10"));
        }
        let factor: f64 = factor.parse().map_err(|_| bad("bad factor"))?;
        if !factor.is_finite() || factor <= 0.0 {
            return Err(bad("factor must be positive"));
        }
        return Ok(Perturbation::Beta { channel, factor });
    }
    if let Some(rest) = t.strip_prefix('q') {
        let (head, factor) = rest.split_once('x').ok_or_else(|| bad("expected q<p>_<s>x<factor>"))?;
        let (p, s) = head.split_once('_').ok_or_else(|| bad("expected q<p>_<s>x<factor>"))?;
        let player: usize = p.parse().map_err(|_| bad("bad player"))?;
        let slot: usize = s.parse().map_err(|_| bad("bad slot"))?;
        if !(1..=N_PLAYERS).contains(&player) {
            return Err(bad("player must be 1..=3"));
        }
        if slot == 0 {
            return Err(bad("slot is 1-based"));
        }
        let factor: f64 = factor.parse().map_err(|_| bad("bad factor"))?;
        if !factor.is_finite() || factor < 0.0 {
            return Err(bad("factor must be non-negative"));
        }
        return Ok(Perturbation::QWeight { player, slot, factor });
    }
    Err(bad("unrecognized form (expected default | q<p>_<s>x<f> | beta<k>x<f> | delta=<steps>)"))
}

/// Apply a perturbation, returning adjusted copies of the design objects.
pub fn apply_perturbation(
    perturbation: &Perturbation,
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
) -> Result<(Scenario, CpsParams, [PlayerSpec; N_PLAYERS])> {
    let mut scenario = scenario.clone();
    let mut params = params.clone();
    let mut specs = specs.clone();
    match perturbation {
        Perturbation::Default => {}
        Perturbation::QWeight { player, slot, factor } => {
            let spec = &mut specs[*player - 1];
            if *slot > spec.penalties.len() {
                return Err(CpsgError::Config(format!(
                    "player {player} has {} penalty terms, slot {slot} out of range",
                    spec.penalties.len()
                )));
            }
            spec.penalties[*slot - 1].weight *= factor;
        }
        Perturbation::Beta { channel, factor } => {
            match channel {
                1 => params.beta1 *= factor,
                8 => params.beta8 *= factor,
                9 => params.beta9 *= factor,
                10 => params.beta10 *= factor,
                _ => unreachable!("validated in parse"),
            }
            let inputs = InputVectors::from_params(&params);
            for spec in &mut specs {
                *spec = spec.with_inputs(&inputs);
            }
        }
        Perturbation::Delta { window_len } => {
            scenario.window_len = *window_len;
        }
    }
    params.validate()?;
    scenario.validate()?;
    Ok((scenario, params, specs))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub mean_fear: f64,
    pub fear_reduction_pct: f64,
    pub effort: f64,
    pub total_cost: f64,
    pub final_residual_inf: f64,
}

/// Train once per perturbation (same seed and hyperparameters) and report
/// outcome metrics side by side. Fear reduction compares the learned
/// policy's closed-loop rollout against each variant's own open-loop run so
/// a gain change shows its true effect; effort and cost keep the training-run
/// convention (applied controls, probing included).
pub fn sensitivity_sweep(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    hyper: &crate::learner::HyperParams,
    seed: u64,
    perturbations: &[Perturbation],
) -> Result<Vec<SensitivityRow>> {
    let mut rows = Vec::with_capacity(perturbations.len());
    for pert in perturbations {
        let (sc, pa, sp) = apply_perturbation(pert, scenario, params, specs)?;
        let open = crate::baselines::open_loop(&sc, &pa, &sp)?;
        let open_fear = mean_fear(&open.states);
        let learner = crate::learner::LearnerState::new(basis, hyper, seed)?;
        let trace = crate::learner::run_game_loop(&sc, &pa, &sp, basis, learner)?;
        let closed =
            crate::learner::fixed_policy_rollout(&sc, &pa, &sp, basis, &trace.learner.w_a)?;
        let metrics = compute_metrics(
            &closed.states,
            &trace.controls(),
            &trace.costs(),
            sc.dt,
            Some(open_fear),
            None,
        );
        let final_residual_inf = trace
            .records
            .last()
            .map(|r| r.eps.iter().fold(0.0_f64, |a, e| a.max(e.abs())))
            .unwrap_or(0.0);
        rows.push(SensitivityRow {
            label: pert.to_string(),
            mean_fear: metrics.mean_fear,
            fear_reduction_pct: metrics.fear_reduction_pct.unwrap_or(0.0),
            effort: metrics.effort,
            total_cost: metrics.total_cost,
            final_residual_inf,
        });
    }
    Ok(rows)
}
