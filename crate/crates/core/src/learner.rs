//! Online actor-critic learner for the three-player game: quadratic value
//! basis, normalized-gradient critic updates, two-timescale actor tracking,
//! bounded sinusoidal exploration, and the windowed game loop.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, InputVectors};
use crate::error::{CpsgError, Result};
use crate::game::{self, ControlSample, PlayerSpec, N_PLAYERS};
use crate::scenario::{CpsParams, Scenario, StateVector, N_STATES};

/// Polynomial value-function basis: constant, linear, and quadratic
/// monomials in lexicographic order `[1, x1..x10, x1*x1, x1*x2, ..,
/// x10*x10]`.
#[derive(Clone, Debug)]
pub struct Basis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl Basis {
    pub fn quadratic(n: usize) -> Basis {
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for k in j..n {
                pairs.push((j, k));
            }
        }
        Basis { n, pairs }
    }

    /// Feature count `p = 1 + n + n(n+1)/2`.
    pub fn p(&self) -> usize {
        1 + self.n + self.pairs.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn features(&self, x: &StateVector) -> Vec<f64> {
        let mut phi = Vec::with_capacity(self.p());
        phi.push(1.0);
        phi.extend_from_slice(&x.0[..self.n]);
        for &(j, k) in &self.pairs {
            phi.push(x[j] * x[k]);
        }
        phi
    }

    /// Directional feature derivative `grad(phi)^T v` without materializing
    /// the Jacobian.
    pub fn grad_dot(&self, x: &StateVector, v: &[f64; N_STATES]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.p());
        out.push(0.0);
        out.extend_from_slice(&v[..self.n]);
        for &(j, k) in &self.pairs {
            out.push(if j == k {
                2.0 * x[j] * v[j]
            } else {
                v[j] * x[k] + x[j] * v[k]
            });
        }
        out
    }

    /// Gradient of one feature (test/diagnostic use).
    pub fn feature_grad(&self, m: usize, x: &StateVector) -> [f64; N_STATES] {
        let mut grad = [0.0; N_STATES];
        if m == 0 {
            return grad;
        }
        if m <= self.n {
            grad[m - 1] = 1.0;
            return grad;
        }
        let (j, k) = self.pairs[m - 1 - self.n];
        if j == k {
            grad[j] = 2.0 * x[j];
        } else {
            grad[j] = x[k];
            grad[k] = x[j];
        }
        grad
    }

    /// Value estimate `w^T phi(x)`.
    pub fn value(&self, w: &[f64], x: &StateVector) -> f64 {
        dot(w, &self.features(x))
    }

    /// Gradient of the value estimate, `sum_m w_m grad(phi_m)`.
    pub fn value_grad(&self, w: &[f64], x: &StateVector) -> [f64; N_STATES] {
        let mut grad = [0.0; N_STATES];
        for r in 0..self.n {
            grad[r] = w[1 + r];
        }
        for (idx, &(j, k)) in self.pairs.iter().enumerate() {
            let w_m = w[1 + self.n + idx];
            if j == k {
                grad[j] += 2.0 * w_m * x[j];
            } else {
                grad[j] += w_m * x[k];
                grad[k] += w_m * x[j];
            }
        }
        grad
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Learning hyperparameters (published defaults).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Critic learning rate.
    #[serde(default = "default_alpha_c")]
    pub alpha_c: f64,
    /// Actor learning rate.
    #[serde(default = "default_alpha_a")]
    pub alpha_a: f64,
    /// Exploration horizon in time units; probing is active for t <= t_ex.
    #[serde(default = "default_t_ex")]
    pub t_ex: f64,
    /// Exploration amplitude bound.
    #[serde(default = "default_n_bar")]
    pub n_bar: f64,
}

fn default_alpha_c() -> f64 {
    0.5
}
fn default_alpha_a() -> f64 {
    0.1
}
fn default_t_ex() -> f64 {
    12.0
}
fn default_n_bar() -> f64 {
    0.3
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha_c: default_alpha_c(),
            alpha_a: default_alpha_a(),
            t_ex: default_t_ex(),
            n_bar: default_n_bar(),
        }
    }
}

pub fn load_hyper(path: &Path) -> Result<HyperParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CpsgError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CpsgError::json(path, e))
}

const SINUSOIDS_PER_PLAYER: usize = 3;
/// Base frequencies proportional to {1, sqrt(2), pi} (pairwise
/// incommensurate). The proportionality constant is chosen so that even the
/// fastest tone (pi/2 * 1.7 ~ 2.67) stays inside (0, pi): at the step rate
/// dt = 1 anything at or above pi folds back (sin(pi t + phi) degenerates to
/// an alternating constant at integer t) and the probing would lose its
/// intended spectral spread.
const FREQ_BASE: f64 = 0.5;
const BASE_FREQS: [f64; SINUSOIDS_PER_PLAYER] =
    [FREQ_BASE, FREQ_BASE * std::f64::consts::SQRT_2, FREQ_BASE * std::f64::consts::PI];
/// Per-player frequency scaling keeps the banks distinct across players.
const PLAYER_FREQ_SCALE: [f64; N_PLAYERS] = [1.0, 1.3, 1.7];

/// Deterministic sinusoidal probing bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationBank {
    pub t_ex: f64,
    pub n_bar: f64,
    /// Phases per player and sinusoid, drawn once from the scenario seed.
    pub phases: [[f64; SINUSOIDS_PER_PLAYER]; N_PLAYERS],
}

impl ExplorationBank {
    pub fn new(t_ex: f64, n_bar: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut phases = [[0.0; SINUSOIDS_PER_PLAYER]; N_PLAYERS];
        for row in &mut phases {
            for phase in row.iter_mut() {
                *phase = rng.random_range(0.0..TAU);
            }
        }
        ExplorationBank { t_ex, n_bar, phases }
    }

    /// Probing signal for `player` (0-based) at time `t`; zero after `t_ex`.
    pub fn signal(&self, player: usize, t: f64) -> f64 {
        if t > self.t_ex || self.n_bar == 0.0 {
            return 0.0;
        }
        let amp = self.n_bar / SINUSOIDS_PER_PLAYER as f64;
        let mut sum = 0.0;
        for m in 0..SINUSOIDS_PER_PLAYER {
            let omega = BASE_FREQS[m] * PLAYER_FREQ_SCALE[player];
            sum += amp * (omega * t + self.phases[player][m]).sin();
        }
        sum
    }
}

///// Mutable learner state: per-player critic/actor weights plus the
/// exploration bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub w_c: [Vec<f64>; N_PLAYERS],
    pub w_a: [Vec<f64>; N_PLAYERS],
    pub alpha_c: [f64; N_PLAYERS],
    pub alpha_a: [f64; N_PLAYERS],
    pub bank: ExplorationBank,
}

impl LearnerState {
    /// Zero-initialized learner (admissible start: the zero actor is the
    /// open-loop policy).
    pub fn new(basis: &Basis, hyper: &HyperParams, seed: u64) -> Result<Self> {
        let p = basis.p();
        let state = LearnerState {
            w_c: [vec![0.0; p], vec![0.0; p], vec![0.0; p]],
            w_a: [vec![0.0; p], vec![0.0; p], vec![0.0; p]],
            alpha_c: [hyper.alpha_c; N_PLAYERS],
            alpha_a: [hyper.alpha_a; N_PLAYERS],
            bank: ExplorationBank::new(hyper.t_ex, hyper.n_bar, seed),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..N_PLAYERS {
            let (ac, aa) = (self.alpha_c[i], self.alpha_a[i]);
            if !(ac >= 0.0 && ac.is_finite() && aa >= 0.0 && aa.is_finite()) {
                return Err(CpsgError::Config(format!(
                    "learning rates must be finite and >= 0 (player {}: alpha_c={ac}, alpha_a={aa})",
                    i + 1
                )));
            }
            // Two-timescale separation, except in the degenerate frozen case.
            if ac <= aa && !(ac == 0.0 && aa == 0.0) {
                return Err(CpsgError::Config(format!(
                    "two-timescale separation requires alpha_c > alpha_a (player {}: {ac} <= {aa})",
                    i + 1
                )));
            }
        }
        if !(self.bank.n_bar >= 0.0 && self.bank.t_ex >= 0.0) {
            return Err(CpsgError::Config(
                "exploration bounds must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Actor policy before saturation: `-(1/2R_ii) g_i . grad(phi)^T W_a`.
pub fn actor_raw(spec: &PlayerSpec, basis: &Basis, w_a: &[f64], x: &StateVector) -> f64 {
    let sigma_g = basis.grad_dot(x, &spec.g);
    -dot(&sigma_g, w_a) / (2.0 * spec.r_own())
}

/// Saturated actor control.
pub fn actor_control(
    spec: &PlayerSpec,
    basis: &Basis,
    w_a: &[f64],
    x: &StateVector,
) -> ControlSample {
    game::saturate(actor_raw(spec, basis, w_a, x), spec.u_max)
}

/// Shared regressor `sigma = grad(phi)^T (f + sum_j g_j u_j)`.
pub fn regressor(
    basis: &Basis,
    x: &StateVector,
    drift_val: &[f64; N_STATES],
    inputs: &InputVectors,
    u: [f64; N_PLAYERS],
) -> Vec<f64> {
    let mut v = *drift_val;
    for j in 0..N_PLAYERS {
        for i in 0..N_STATES {
            v[i] += inputs.g[j][i] * u[j];
        }
    }
    basis.grad_dot(x, &v)
}

/// Bellman residual for player `i` given the shared regressor.
pub fn residual_given_sigma(
    spec: &PlayerSpec,
    x: &StateVector,
    u: [f64; N_PLAYERS],
    w_c: &[f64],
    sigma: &[f64],
) -> f64 {
    game::running_cost(spec, x, u) + dot(w_c, sigma)
}

/// Bellman residual and regressor in one call.
pub fn bellman_residual(
    w_c: &[f64],
    x: &StateVector,
    u: [f64; N_PLAYERS],
    spec: &PlayerSpec,
    drift_val: &[f64; N_STATES],
    inputs: &InputVectors,
    basis: &Basis,
) -> (f64, Vec<f64>) {
    let sigma = regressor(basis, x, drift_val, inputs, u);
    let eps = residual_given_sigma(spec, x, u, w_c, &sigma);
    (eps, sigma)
}

/// Normalized-gradient critic update (explicit Euler step of the
/// continuous law).
pub fn critic_step(w_c: &mut [f64], eps: f64, sigma: &[f64], alpha_c: f64, dt: f64) {
    let s = dot(sigma, sigma);
    let denom = (s + 1.0) * (s + 1.0);
    let scale = -dt * alpha_c * eps / denom;
    for (w, sig) in w_c.iter_mut().zip(sigma) {
        *w += scale * sig;
    }
}

/// Actor tracking update; contracts toward the critic weights.
pub fn actor_step(w_a: &mut [f64], w_c: &[f64], alpha_a: f64, dt: f64) -> Result<()> {
    if alpha_a * dt >= 1.0 {
        return Err(CpsgError::Config(format!(
            "actor step alpha_a*dt = {} >= 1 overshoots the contraction",
            alpha_a * dt
        )));
    }
    let gain = dt * alpha_a;
    for (a, c) in w_a.iter_mut().zip(w_c) {
        *a -= gain * (*a - *c);
    }
    Ok(())
}

/// Per-step record of the online loop.
#[derive(Clone, Debug)]
pub struct StepRecord {
    /// Physical time at the start of the step.
    pub t: f64,
    pub window: usize,
    /// State at the start of the step.
    pub x: StateVector,
    pub u_raw: [f64; N_PLAYERS],
    pub u: [f64; N_PLAYERS],
    pub eps: [f64; N_PLAYERS],
    /// Weight norms after this step's updates.
    pub wc_norm: [f64; N_PLAYERS],
    pub wa_norm: [f64; N_PLAYERS],
    /// Running costs including this step.
    pub j_running: [f64; N_PLAYERS],
    /// Shared critic regressor.
    pub sigma: Vec<f64>,
    pub clamped: [bool; N_STATES],
}

/// Full output of a training run.
#[derive(Clone, Debug)]
pub struct TrainingTrace {
    pub dt: f64,
    pub records: Vec<StepRecord>,
    /// States x_0..x_T (length horizon + 1).
    pub states: Vec<StateVector>,
    pub learner: LearnerState,
    pub warnings: Vec<String>,
}

impl TrainingTrace {
    pub fn controls(&self) -> Vec<[f64; N_PLAYERS]> {
        self.records.iter().map(|r| r.u).collect()
    }

    pub fn controls_raw(&self) -> Vec<[f64; N_PLAYERS]> {
        self.records.iter().map(|r| r.u_raw).collect()
    }

    pub fn costs(&self) -> [f64; N_PLAYERS] {
        self.records
            .last()
            .map(|r| r.j_running)
            .unwrap_or([0.0; N_PLAYERS])
    }

    pub fn regressors(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.sigma.clone()).collect()
    }

    /// Trace CSV: one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("t,window");
        for i in 1..=N_STATES {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",u{i}_raw"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",u{i}"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",eps{i}"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",wc{i}_norm"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",wa{i}_norm"));
        }
        for i in 1..=N_PLAYERS {
            out.push_str(&format!(",J{i}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{}", r.t, r.window));
            for v in r.x.0 {
                out.push_str(&format!(",{v}"));
            }
            for v in r.u_raw {
                out.push_str(&format!(",{v}"));
            }
            for v in r.u {
                out.push_str(&format!(",{v}"));
            }
            for v in r.eps {
                out.push_str(&format!(",{v}"));
            }
            for v in r.wc_norm {
                out.push_str(&format!(",{v}"));
            }
            for v in r.wa_norm {
                out.push_str(&format!(",{v}"));
            }
            for v in r.j_running {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Regressor CSV (`t, s0..s{p-1}`), input to the excitation diagnostics.
    pub fn regressors_csv(&self) -> String {
        let p = self.records.first().map_or(0, |r| r.sigma.len());
        let mut out = String::from("t");
        for m in 0..p {
            out.push_str(&format!(",s{m}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{}", r.t));
            for v in &r.sigma {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Run the online three-player loop over the scenario horizon.
///
/// Per step: freeze the window snapshot, form actor controls plus
/// exploration, saturate, evaluate the shared regressor and per-player
/// residuals, update critics then actors, then advance the plant. Weights
/// carry across window boundaries unchanged (warm start).
pub fn run_game_loop(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    mut learner: LearnerState,
) -> Result<TrainingTrace> {
    learner.validate()?;
    for spec in specs {
        spec.validate()?;
    }
    let dt = scenario.dt;
    for i in 0..N_PLAYERS {
        if learner.alpha_a[i] * dt >= 1.0 {
            return Err(CpsgError::Config(format!(
                "actor step alpha_a*dt = {} >= 1 overshoots the contraction (player {})",
                learner.alpha_a[i] * dt,
                i + 1
            )));
        }
    }
    let inputs = InputVectors::from_params(params);
    let mut x = scenario.x0;
    let mut states = Vec::with_capacity(scenario.horizon + 1);
    states.push(x);
    let mut records = Vec::with_capacity(scenario.horizon);
    let mut warnings = Vec::new();
    let mut j_running = [0.0; N_PLAYERS];

    for k in 0..scenario.horizon {
        let t = k as f64 * dt;
        let window = scenario.window_of(k);
        let snap = scenario.snapshot(k)?;

        let mut u_raw = [0.0; N_PLAYERS];
        let mut u = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            let raw = actor_raw(&specs[i], basis, &learner.w_a[i], &x) + learner.bank.signal(i, t);
            let sample = game::saturate(raw, specs[i].u_max);
            u_raw[i] = sample.raw;
            u[i] = sample.applied;
        }

        let f = dynamics::drift(&x, &snap, params).xdot;
        let sigma = regressor(basis, &x, &f, &inputs, u);

        let mut eps = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            eps[i] = residual_given_sigma(&specs[i], &x, u, &learner.w_c[i], &sigma);
        }
        for i in 0..N_PLAYERS {
            critic_step(&mut learner.w_c[i], eps[i], &sigma, learner.alpha_c[i], dt);
        }
        for i in 0..N_PLAYERS {
            // Checked above; per-step call keeps the contraction guard local.
            let wc = learner.w_c[i].clone();
            actor_step(&mut learner.w_a[i], &wc, learner.alpha_a[i], dt)?;
        }

        for i in 0..N_PLAYERS {
            j_running[i] += game::running_cost(&specs[i], &x, u) * dt;
        }

        let outcome = dynamics::step_detailed(&x, u, &snap, params, dt);
        if outcome.invariance_warning {
            warnings.push(format!(
                "step {k}: forward-invariant state overshot [0,1] beyond tolerance"
            ));
        }

        records.push(StepRecord {
            t,
            window,
            x,
            u_raw,
            u,
            eps,
            wc_norm: [
                norm(&learner.w_c[0]),
                norm(&learner.w_c[1]),
                norm(&learner.w_c[2]),
            ],
            wa_norm: [
                norm(&learner.w_a[0]),
                norm(&learner.w_a[1]),
                norm(&learner.w_a[2]),
            ],
            j_running,
            sigma,
            clamped: outcome.clamped,
        });

        x = outcome.state;
        states.push(x);
    }

    Ok(TrainingTrace {
        dt,
        records,
        states,
        learner,
        warnings,
    })
}

/// A plain rollout under an arbitrary feedback law (no learning, no
/// exploration). The controller returns raw controls; saturation is applied
/// here.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub states: Vec<StateVector>,
    pub controls_raw: Vec<[f64; N_PLAYERS]>,
    pub controls: Vec<[f64; N_PLAYERS]>,
    pub costs: [f64; N_PLAYERS],
    pub clamp_counts: [usize; N_STATES],
    pub invariance_warnings: usize,
}

pub fn rollout_with<F>(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    mut law: F,
) -> Result<Rollout>
where
    F: FnMut(usize, &StateVector) -> [f64; N_PLAYERS],
{
    let mut x = scenario.x0;
    let mut states = Vec::with_capacity(scenario.horizon + 1);
    states.push(x);
    let mut controls_raw = Vec::with_capacity(scenario.horizon);
    let mut controls = Vec::with_capacity(scenario.horizon);
    let mut costs = [0.0; N_PLAYERS];
    let mut clamp_counts = [0usize; N_STATES];
    let mut invariance_warnings = 0;

    for k in 0..scenario.horizon {
        let snap = scenario.snapshot(k)?;
        let raw = law(k, &x);
        let mut u = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            u[i] = game::saturate(raw[i], specs[i].u_max).applied;
        }
        for i in 0..N_PLAYERS {
            costs[i] += game::running_cost(&specs[i], &x, u) * scenario.dt;
        }
        let outcome = dynamics::step_detailed(&x, u, &snap, params, scenario.dt);
        for (i, c) in outcome.clamped.iter().enumerate() {
            if *c {
                clamp_counts[i] += 1;
            }
        }
        if outcome.invariance_warning {
            invariance_warnings += 1;
        }
        controls_raw.push(raw);
        controls.push(u);
        x = outcome.state;
        states.push(x);
    }

    Ok(Rollout {
        states,
        controls_raw,
        controls,
        costs,
        clamp_counts,
        invariance_warnings,
    })
}

/// Rollout of the frozen joint actor policy.
pub fn fixed_policy_rollout(
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    w_a: &[Vec<f64>; N_PLAYERS],
) -> Result<Rollout> {
    rollout_with(scenario, params, specs, |_, x| {
        let mut u = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            u[i] = actor_raw(&specs[i], basis, &w_a[i], x);
        }
        u
    })
}

/// Continue a trained run to `factor * horizon` total steps with frozen
/// weights, no exploration, and the exogenous drivers held at their last
/// observed sample. Returns the concatenated trajectory.
pub fn extended_rollout(
    trace: &TrainingTrace,
    scenario: &Scenario,
    params: &CpsParams,
    specs: &[PlayerSpec; N_PLAYERS],
    basis: &Basis,
    factor: usize,
) -> Result<Rollout> {
    if factor < 1 {
        return Err(CpsgError::Config("extend factor must be >= 1".into()));
    }
    let extra = scenario.horizon * (factor - 1);
    let hold = scenario.signals.sample(scenario.horizon - 1)?;
    let mut states = trace.states.clone();
    let mut controls_raw = trace.controls_raw();
    let mut controls = trace.controls();
    let mut costs = trace.costs();
    let mut x = *states.last().expect("trace has at least the initial state");
    for _ in 0..extra {
        let mut u_raw = [0.0; N_PLAYERS];
        let mut u = [0.0; N_PLAYERS];
        for i in 0..N_PLAYERS {
            let raw = actor_raw(&specs[i], basis, &trace.learner.w_a[i], &x);
            u_raw[i] = raw;
            u[i] = game::saturate(raw, specs[i].u_max).applied;
        }
        for i in 0..N_PLAYERS {
            costs[i] += game::running_cost(&specs[i], &x, u) * trace.dt;
        }
        x = dynamics::controlled_step(&x, u, &hold, params, trace.dt);
        controls_raw.push(u_raw);
        controls.push(u);
        states.push(x);
    }
    Ok(Rollout {
        states,
        controls_raw,
        controls,
        costs,
        clamp_counts: [0; N_STATES],
        invariance_warnings: 0,
    })
}

/// Self-contained training artifact: everything needed to replay or probe
/// the learned joint policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightsFile {
    pub scenario: String,
    pub seed: u64,
    pub params: CpsParams,
    pub hyper: HyperParams,
    pub w_c: Vec<Vec<f64>>,
    pub w_a: Vec<Vec<f64>>,
}

impl WeightsFile {
    pub fn from_trace(scenario: &Scenario, seed: u64, params: &CpsParams, hyper: &HyperParams, trace: &TrainingTrace) -> Self {
        WeightsFile {
            scenario: scenario.name.clone(),
            seed,
            params: params.clone(),
            hyper: *hyper,
            w_c: trace.learner.w_c.to_vec(),
            w_a: trace.learner.w_a.to_vec(),
        }
    }

    pub fn actor_weights(&self) -> Result<[Vec<f64>; N_PLAYERS]> {
        if self.w_a.len() != N_PLAYERS {
            return Err(CpsgError::Config(format!(
                "weights file has {} actor vectors, expected {}",
                self.w_a.len(),
                N_PLAYERS
            )));
        }
        Ok([self.w_a[0].clone(), self.w_a[1].clone(), self.w_a[2].clone()])
    }
}

pub fn load_weights(path: &Path) -> Result<WeightsFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CpsgError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CpsgError::json(path, e))
}

pub fn save_weights(path: &Path, weights: &WeightsFile) -> Result<()> {
    let text = serde_json::to_string_pretty(weights)
        .map_err(|e| CpsgError::Other(format!("weights serialization failed: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| CpsgError::write(path, e))
}
