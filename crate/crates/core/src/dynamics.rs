//! Open-loop CPS drift, control-affine channels, and the projected Euler
//! integrator.
//!
//! The drift couples three layers: social states x1..x3 relax toward
//! logistic-transformed driver targets through a risk-amplification map,
//! x4..x7 follow gated relaxation, and x8..x10 track exogenous baselines.
//! Controls enter additively on x1, x8, x9, x10 only.

use crate::scenario::{CpsParams, SignalSnapshot, StateVector, N_STATES};

/// Indices of the directly controlled states (x1, x8, x9, x10).
pub const CONTROLLED: [usize; 4] = [0, 7, 8, 9];

/// Threshold beyond which a clamp on a nominally forward-invariant state
/// (x2..x7) is reported as a warning rather than float noise.
pub const DEFENSIVE_CLAMP_TOL: f64 = 1e-9;

/// Logistic activation with steepness `kappa` and midpoint `zeta`.
pub fn logistic(z: f64, kappa: f64, zeta: f64) -> f64 {
    1.0 / (1.0 + (-kappa * (z - zeta)).exp())
}

/// Complement `1 - logistic`.
pub fn logistic_c(z: f64, kappa: f64, zeta: f64) -> f64 {
    1.0 - logistic(z, kappa, zeta)
}

/// Risk-amplification map blending the target with state-target reinforcement.
///
/// `eta` weights the influence of risk perception `x5`; `eta = 0` returns the
/// plain target.
pub fn amplification(theta_hat: f64, theta: f64, x5: f64, eta: f64) -> f64 {
    eta * (x5 * (1.0 - (1.0 - theta) * (1.0 - theta_hat)) + (1.0 - x5) * theta_hat * theta)
        + (1.0 - eta) * theta_hat
}

/// Fear target: convex combination of seven logistic-transformed drivers.
pub fn fear_target(x: &StateVector, s: &SignalSnapshot, p: &CpsParams) -> f64 {
    let (k, z) = (p.kappa, p.zeta);
    let i = &p.iota.fear;
    i[0] * logistic_c(x[5], k, z)
        + i[1] * logistic_c(x[3], k, z)
        + i[2] * logistic_c(x[7], k, z)
        + i[3] * logistic(s.p_s, k, z)
        + i[4] * logistic_c(x[2], k, z)
        + i[5] * logistic_c(x[6], k, z)
        + i[6] * logistic_c(s.c_plus, k, z)
}

/// Information-seeking target (two drivers: risk perception and fake news).
pub fn info_target(x: &StateVector, p: &CpsParams) -> f64 {
    let (k, z) = (p.kappa, p.zeta);
    p.iota.info[0] * logistic(x[4], k, z) + p.iota.info[1] * logistic(x[9], k, z)
}

/// Flexibility target (single driver: learning).
pub fn flex_target(x: &StateVector, p: &CpsParams) -> f64 {
    p.iota.flex[0] * logistic(x[6], p.kappa, p.zeta)
}

/// Drift evaluation: derivatives plus the social-layer targets for
/// diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct DriftEvaluation {
    pub xdot: [f64; N_STATES],
    /// Targets (x̂1, x̂2, x̂3) before amplification.
    pub targets: [f64; 3],
}

/// Uncontrolled drift `f(x, d)` at a frozen signal snapshot.
pub fn drift(x: &StateVector, s: &SignalSnapshot, p: &CpsParams) -> DriftEvaluation {
    let (k, z) = (p.kappa, p.zeta);
    let psi = |v: f64| logistic(v, k, z);
    let psi_c = |v: f64| logistic_c(v, k, z);

    let x1_hat = fear_target(x, s, p);
    let x2_hat = info_target(x, p);
    let x3_hat = flex_target(x, p);

    let mut xdot = [0.0; N_STATES];

    // Social layer: diffusion toward amplified targets.
    xdot[0] = p.alpha[0] * (amplification(x1_hat, x[0], x[4], p.eta_amp[0]) - x[0]);
    xdot[1] = p.alpha[1] * (amplification(x2_hat, x[1], x[4], p.eta_amp[1]) - x[1]);
    xdot[2] = p.alpha[2] * (amplification(x3_hat, x[2], x[4], p.eta_amp[2]) - x[2]);

    // Physical health: gated by calm (low fear).
    let io = &p.iota.health;
    xdot[3] = p.eta_p
        * psi_c(x[0])
        * ((io[0] * psi(x[8]) + io[1] * psi(x[7]) + io[2] * psi_c(s.p_s)) / 3.0 - x[3]);

    // Risk perception: triple gate, five-term bracket.
    let io = &p.iota.risk;
    xdot[4] = p.eta_r
        * psi(x[0])
        * psi_c(x[5])
        * psi_c(x[1])
        * ((io[0] * psi_c(x[7]) + io[1] * psi(s.p_s) + io[2] * psi(x[9])) / 5.0
            + (io[3] * psi_c(x[8]) + io[4] * psi_c(s.c_plus)) / 5.0
            - x[4]);

    // Cooperation: double gate, four-term bracket.
    let io = &p.iota.coop;
    xdot[5] = p.eta_c
        * psi(x[0])
        * psi(x[2])
        * ((io[0] * psi_c(x[7]) + io[1] * psi(s.p_s) + io[2] * psi_c(x[3]) + io[3] * psi(x[1]))
            / 4.0
            - x[5]);

    // Learning: single gate, three-term bracket.
    let io = &p.iota.learn;
    xdot[6] = p.eta_l
        * psi(x[2])
        * ((io[0] * psi(x[5]) + io[1] * psi(x[1]) + io[2] * psi_c(x[9])) / 3.0 - x[6]);

    // Physically driven states relax toward exogenous baselines.
    xdot[7] = p.gamma8 * (s.d8 - x[7]);
    xdot[8] = p.gamma9 * (s.d9 - x[8]);
    xdot[9] = p.gamma10 * (s.d10 - x[9]);

    DriftEvaluation {
        xdot,
        targets: [x1_hat, x2_hat, x3_hat],
    }
}

/// Control input vectors: `g1 = -beta1 e1 - beta10 e10`, `g2 = beta8 e8`,
/// `g3 = beta9 e9`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputVectors {
    pub g: [[f64; N_STATES]; 3],
}

impl InputVectors {
    pub fn from_params(p: &CpsParams) -> Self {
        let mut g = [[0.0; N_STATES]; 3];
        g[0][0] = -p.beta1;
        g[0][9] = -p.beta10;
        g[1][7] = p.beta8;
        g[2][8] = p.beta9;
        InputVectors { g }
    }

    pub fn g(&self, player: usize) -> &[f64; N_STATES] {
        &self.g[player]
    }
}

/// One projected Euler step and its clamp bookkeeping.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome {
    pub state: StateVector,
    /// Per-component flag: the Euler update left `[0, 1]` and was clamped.
    pub clamped: [bool; N_STATES],
    /// A nominally forward-invariant state (x2..x7) overshot the box by more
    /// than [`DEFENSIVE_CLAMP_TOL`].
    pub invariance_warning: bool,
}

/// Euler step of the controlled system with componentwise projection.
pub fn step_detailed(
    x: &StateVector,
    u: [f64; 3],
    s: &SignalSnapshot,
    p: &CpsParams,
    dt: f64,
) -> StepOutcome {
    let f = drift(x, s, p).xdot;
    let g = InputVectors::from_params(p);
    let mut next = [0.0; N_STATES];
    for i in 0..N_STATES {
        let mut v = f[i];
        for j in 0..3 {
            v += g.g[j][i] * u[j];
        }
        next[i] = x[i] + dt * v;
    }
    let mut clamped = [false; N_STATES];
    let mut invariance_warning = false;
    for (i, v) in next.iter_mut().enumerate() {
        if *v < 0.0 || *v > 1.0 {
            clamped[i] = true;
            if !CONTROLLED.contains(&i) {
                let overshoot = if *v < 0.0 { -*v } else { *v - 1.0 };
                if overshoot > DEFENSIVE_CLAMP_TOL {
                    invariance_warning = true;
                }
            }
            *v = v.clamp(0.0, 1.0);
        }
    }
    StepOutcome {
        state: StateVector(next),
        clamped,
        invariance_warning,
    }
}

/// Euler step returning just the projected state.
pub fn controlled_step(
    x: &StateVector,
    u: [f64; 3],
    s: &SignalSnapshot,
    p: &CpsParams,
    dt: f64,
) -> StateVector {
    step_detailed(x, u, s, p, dt).state
}
