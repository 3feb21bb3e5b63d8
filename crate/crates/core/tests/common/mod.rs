//! Shared helpers for the integration suites: an independent longhand
//! transcription of the community dynamics used as a numerical oracle,
//! random model generators, and a lazily trained reference run that the
//! slower checks share.
//!
//! Every formula in `oracle_drift` is written out from scratch on purpose —
//! no helper from the library is called — so a transcription slip in either
//! copy shows up as a mismatch instead of cancelling out.
#![allow(dead_code)]

use std::sync::OnceLock;

use cpsg_core::baselines::open_loop;
use cpsg_core::game::{default_specs, PlayerSpec};
use cpsg_core::learner::{
    fixed_policy_rollout, run_game_loop, Basis, HyperParams, LearnerState, Rollout, TrainingTrace,
};
use cpsg_core::scenario::{
    builtin_scenario, CpsParams, ExogenousSignals, IotaWeights, Scenario, SignalSnapshot,
    StateVector, N_STATES,
};
use rand::Rng;

// ---------------------------------------------------------------------------
// Independent drift transcription
// ---------------------------------------------------------------------------

/// Longhand re-derivation of the uncontrolled drift, state by state.
///
/// Index map (0-based storage vs the 1-based naming used in prose): fear x1,
/// info-seeking x2, flexibility x3, health x4, risk perception x5,
/// cooperation x6, learning x7, power x8, EMS x9, fake news x10.
pub fn oracle_drift(state: &StateVector, s: &SignalSnapshot, p: &CpsParams) -> [f64; N_STATES] {
    let x = state.as_array();
    let act = |z: f64| 1.0 / (1.0 + (-p.kappa * (z - p.zeta)).exp());
    let inh = |z: f64| 1.0 - 1.0 / (1.0 + (-p.kappa * (z - p.zeta)).exp());
    // Risk-weighted amplification of a relaxation target.
    let risk = x[4];
    let amplify = |target: f64, current: f64, eta: f64| {
        eta * (risk * (1.0 - (1.0 - current) * (1.0 - target)) + (1.0 - risk) * target * current)
            + (1.0 - eta) * target
    };

    // Social-layer targets.
    let fear_hat = p.iota.fear[0] * inh(x[5])
        + p.iota.fear[1] * inh(x[3])
        + p.iota.fear[2] * inh(x[7])
        + p.iota.fear[3] * act(s.p_s)
        + p.iota.fear[4] * inh(x[2])
        + p.iota.fear[5] * inh(x[6])
        + p.iota.fear[6] * inh(s.c_plus);
    let info_hat = p.iota.info[0] * act(x[4]) + p.iota.info[1] * act(x[9]);
    let flex_hat = p.iota.flex[0] * act(x[6]);

    let mut f = [0.0; N_STATES];
    f[0] = p.alpha[0] * (amplify(fear_hat, x[0], p.eta_amp[0]) - x[0]);
    f[1] = p.alpha[1] * (amplify(info_hat, x[1], p.eta_amp[1]) - x[1]);
    f[2] = p.alpha[2] * (amplify(flex_hat, x[2], p.eta_amp[2]) - x[2]);

    // Health: calm-gated relaxation, three drivers averaged over 3.
    f[3] = p.eta_p
        * inh(x[0])
        * ((p.iota.health[0] * act(x[8])
            + p.iota.health[1] * act(x[7])
            + p.iota.health[2] * inh(s.p_s))
            / 3.0
            - x[3]);

    // Risk perception: fear-gated with cooperation and info-seeking
    // inhibitors, five drivers split across two brackets over 5.
    f[4] = p.eta_r
        * act(x[0])
        * inh(x[5])
        * inh(x[1])
        * ((p.iota.risk[0] * inh(x[7]) + p.iota.risk[1] * act(s.p_s) + p.iota.risk[2] * act(x[9]))
            / 5.0
            + (p.iota.risk[3] * inh(x[8]) + p.iota.risk[4] * inh(s.c_plus)) / 5.0
            - x[4]);

    // Cooperation: fear and flexibility gates, four drivers over 4.
    f[5] = p.eta_c
        * act(x[0])
        * act(x[2])
        * ((p.iota.coop[0] * inh(x[7])
            + p.iota.coop[1] * act(s.p_s)
            + p.iota.coop[2] * inh(x[3])
            + p.iota.coop[3] * act(x[1]))
            / 4.0
            - x[5]);

    // Learning: flexibility gate, three drivers over 3.
    f[6] = p.eta_l
        * act(x[2])
        * ((p.iota.learn[0] * act(x[5])
            + p.iota.learn[1] * act(x[1])
            + p.iota.learn[2] * inh(x[9]))
            / 3.0
            - x[6]);

    // Physically driven states track their exogenous baselines.
    f[7] = p.gamma8 * (s.d8 - x[7]);
    f[8] = p.gamma9 * (s.d9 - x[8]);
    f[9] = p.gamma10 * (s.d10 - x[9]);

    f
}

// ---------------------------------------------------------------------------
// Random model generators
// ---------------------------------------------------------------------------

pub fn random_state<R: Rng>(rng: &mut R) -> StateVector {
    let mut x = [0.0; N_STATES];
    for v in &mut x {
        *v = rng.random_range(0.0..=1.0);
    }
    StateVector(x)
}

pub fn random_snapshot<R: Rng>(rng: &mut R) -> SignalSnapshot {
    SignalSnapshot {
        p_s: rng.random_range(0.0..=1.0),
        c_plus: rng.random_range(0.0..=1.0),
        d8: rng.random_range(0.0..=1.0),
        d9: rng.random_range(0.0..=1.0),
        d10: rng.random_range(0.0..=1.0),
    }
}

fn random_weights<R: Rng, const N: usize>(rng: &mut R) -> [f64; N] {
    let mut w = [0.0; N];
    let mut sum = 0.0;
    for v in &mut w {
        *v = rng.random_range(0.05..1.0);
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// A random valid parameter set spanning the admissible ranges.
pub fn random_params<R: Rng>(rng: &mut R) -> CpsParams {
    CpsParams {
        kappa: rng.random_range(0.5..12.0),
        zeta: rng.random_range(0.1..0.9),
        alpha: [
            rng.random_range(0.05..1.2),
            rng.random_range(0.05..1.2),
            rng.random_range(0.05..1.2),
        ],
        eta_amp: [
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..=1.0),
        ],
        eta_p: rng.random_range(0.1..1.2),
        eta_r: rng.random_range(0.1..1.2),
        eta_c: rng.random_range(0.1..1.2),
        eta_l: rng.random_range(0.1..1.2),
        iota: IotaWeights {
            fear: random_weights(rng),
            info: random_weights(rng),
            flex: [1.0],
            health: random_weights(rng),
            risk: random_weights(rng),
            coop: random_weights(rng),
            learn: random_weights(rng),
        },
        gamma8: rng.random_range(0.2..3.0),
        gamma9: rng.random_range(0.2..3.0),
        gamma10: rng.random_range(0.2..3.0),
        beta1: rng.random_range(0.05..1.0),
        beta8: rng.random_range(0.05..1.0),
        beta9: rng.random_range(0.05..1.0),
        beta10: rng.random_range(0.05..1.0),
    }
}

// ---------------------------------------------------------------------------
// Metrics helpers
// ---------------------------------------------------------------------------

/// Pooled RMSE across all states and steps of two equally long trajectories.
pub fn rmse_states(a: &[StateVector], b: &[StateVector]) -> f64 {
    assert_eq!(a.len(), b.len(), "trajectories must align");
    let mut sum = 0.0;
    for (xa, xb) in a.iter().zip(b) {
        for i in 0..N_STATES {
            let r = xa[i] - xb[i];
            sum += r * r;
        }
    }
    (sum / (a.len() as f64 * N_STATES as f64)).sqrt()
}

pub fn mean_fear(states: &[StateVector]) -> f64 {
    let slice = if states.len() > 1 { &states[1..] } else { states };
    slice.iter().map(|x| x[0]).sum::<f64>() / slice.len() as f64
}

/// Squared-control effort with the trapezoid-free convention used in the
/// reports: `sum_t sum_i u_i(t)^2 * dt` over applied controls.
pub fn effort(controls: &[[f64; 3]], dt: f64) -> f64 {
    controls
        .iter()
        .map(|u| u.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        * dt
}

// ---------------------------------------------------------------------------
// Shared trained reference run
// ---------------------------------------------------------------------------

/// Everything the slower acceptance checks need from one training pass on
/// the bundled Harvey scenario: the trace, the exploration-free closed-loop
/// replay of the final weights, and the matching open-loop baseline.
pub struct HarveyRun {
    pub scenario: Scenario,
    pub params: CpsParams,
    pub specs: [PlayerSpec; 3],
    pub basis: Basis,
    pub hyper: HyperParams,
    pub trace: TrainingTrace,
    pub open: Rollout,
    pub closed: Rollout,
}

static HARVEY_RUN: OnceLock<HarveyRun> = OnceLock::new();

pub fn harvey_run() -> &'static HarveyRun {
    HARVEY_RUN.get_or_init(|| {
        let scenario = builtin_scenario("harvey_synth").expect("bundled scenario loads");
        let params = CpsParams::reference();
        let specs = default_specs(&params);
        let basis = Basis::quadratic(N_STATES);
        let hyper = HyperParams::default();
        let learner =
            LearnerState::new(&basis, &hyper, scenario.seed).expect("admissible learner");
        let trace = run_game_loop(&scenario, &params, &specs, &basis, learner)
            .expect("training run completes");
        let open = open_loop(&scenario, &params, &specs).expect("open-loop rollout");
        let closed = fixed_policy_rollout(&scenario, &params, &specs, &basis, &trace.learner.w_a)
            .expect("closed-loop rollout");
        HarveyRun { scenario, params, specs, basis, hyper, trace, open, closed }
    })
}

/// A smooth length-`n + 1` signal ramp between anchor values.
pub fn ramp(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| from + (to - from) * k as f64 / n as f64).collect()
}

/// Signals that drift gently inside the unit box; used by fixtures that
/// need exogenous drivers with some variation but no boundary contact.
pub fn gentle_signals(n: usize) -> ExogenousSignals {
    ExogenousSignals {
        p_s: ramp(0.8, 0.3, n),
        c_plus: ramp(0.2, 0.7, n),
        d8: ramp(0.45, 0.7, n),
        d9: ramp(0.5, 0.75, n),
        d10: ramp(0.7, 0.35, n),
    }
}
