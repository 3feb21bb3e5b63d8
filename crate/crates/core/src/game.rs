//! Player costs, Hamiltonians, and the saturated Nash feedback policy.

use serde::{Deserialize, Serialize};

use crate::dynamics::InputVectors;
use crate::error::{CpsgError, Result};
use crate::scenario::{CpsParams, StateVector, N_STATES};

pub const N_PLAYERS: usize = 3;

/// One quadratic penalty term: `weight * (x_state)^2` in level form or
/// `weight * (1 - x_state)^2` in deficit form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTerm {
    /// 0-based state index.
    pub state: usize,
    pub weight: f64,
    /// Penalize `(1 - x)` instead of `x`.
    pub deficit: bool,
}

/// Cost and control structure of one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    /// Player id, 1-based as in the narrative (1 communication, 2 power,
    /// 3 EMS).
    pub id: usize,
    pub penalties: Vec<PenaltyTerm>,
    /// Effort-penalty row `R_i` (own entry must be positive).
    pub r: [f64; N_PLAYERS],
    /// Control bound; applied controls live in `[0, u_max]`.
    pub u_max: f64,
    /// Input vector `g_i`.
    pub g: [f64; N_STATES],
}

impl PlayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.id == 0 || self.id > N_PLAYERS {
            return Err(CpsgError::Config(format!(
                "player id {} out of range 1..=3",
                self.id
            )));
        }
        let own = self.r[self.id - 1];
        if !(own > 0.0) {
            return Err(CpsgError::InvalidParam {
                name: format!("R_{0}{0}", self.id),
                value: own,
                constraint: "> 0".into(),
            });
        }
        for (j, v) in self.r.iter().enumerate() {
            if *v < 0.0 {
                return Err(CpsgError::InvalidParam {
                    name: format!("R_{}{}", self.id, j + 1),
                    value: *v,
                    constraint: ">= 0".into(),
                });
            }
        }
        if !(self.u_max > 0.0) {
            return Err(CpsgError::InvalidParam {
                name: format!("u_max[{}]", self.id),
                value: self.u_max,
                constraint: "> 0".into(),
            });
        }
        for t in &self.penalties {
            if t.state >= N_STATES {
                return Err(CpsgError::Config(format!(
                    "penalty state index {} out of range",
                    t.state
                )));
            }
            if t.weight < 0.0 {
                return Err(CpsgError::InvalidParam {
                    name: format!("q_{},{}", self.id, t.state + 1),
                    value: t.weight,
                    constraint: ">= 0".into(),
                });
            }
        }
        Ok(())
    }

    pub fn r_own(&self) -> f64 {
        self.r[self.id - 1]
    }

    /// Copy of this spec with `g` refreshed from `inputs` (used when control
    /// gains are perturbed).
    pub fn with_inputs(&self, inputs: &InputVectors) -> PlayerSpec {
        let mut s = self.clone();
        s.g = inputs.g[self.id - 1];
        s
    }
}

/// The published three-player cost design: all players penalize fear;
/// player 1 additionally penalizes fake news, player 2 the power deficit,
/// player 3 the health and EMS deficits. `R = I`, `u_max = 1`.
pub fn default_specs(params: &CpsParams) -> [PlayerSpec; N_PLAYERS] {
    let g = InputVectors::from_params(params);
    let eye = |i: usize| {
        let mut r = [0.0; N_PLAYERS];
        r[i] = 1.0;
        r
    };
    [
        PlayerSpec {
            id: 1,
            penalties: vec![
                PenaltyTerm { state: 0, weight: 1.0, deficit: false },
                PenaltyTerm { state: 9, weight: 0.5, deficit: false },
            ],
            r: eye(0),
            u_max: 1.0,
            g: g.g[0],
        },
        PlayerSpec {
            id: 2,
            penalties: vec![
                PenaltyTerm { state: 0, weight: 0.5, deficit: false },
                PenaltyTerm { state: 7, weight: 1.0, deficit: true },
            ],
            r: eye(1),
            u_max: 1.0,
            g: g.g[1],
        },
        PlayerSpec {
            id: 3,
            penalties: vec![
                PenaltyTerm { state: 0, weight: 0.5, deficit: false },
                PenaltyTerm { state: 3, weight: 0.5, deficit: true },
                PenaltyTerm { state: 8, weight: 1.0, deficit: true },
            ],
            r: eye(2),
            u_max: 1.0,
            g: g.g[2],
        },
    ]
}

/// State penalty `Q_i(x)`.
pub fn state_penalty(spec: &PlayerSpec, x: &StateVector) -> f64 {
    spec.penalties
        .iter()
        .map(|t| {
            let v = if t.deficit { 1.0 - x[t.state] } else { x[t.state] };
            t.weight * v * v
        })
        .sum()
}

/// Instantaneous cost `Q_i(x) + sum_j R_ij u_j^2`.
pub fn running_cost(spec: &PlayerSpec, x: &StateVector, u: [f64; N_PLAYERS]) -> f64 {
    let effort: f64 = (0..N_PLAYERS).map(|j| spec.r[j] * u[j] * u[j]).sum();
    state_penalty(spec, x) + effort
}

/// Player Hamiltonian `Q_i + sum R_ij u_j^2 + gradV . (f + sum g_j u_j)`.
pub fn hamiltonian(
    spec: &PlayerSpec,
    x: &StateVector,
    grad_v: &[f64; N_STATES],
    u: [f64; N_PLAYERS],
    drift_val: &[f64; N_STATES],
    inputs: &InputVectors,
) -> f64 {
    let mut flow = 0.0;
    for i in 0..N_STATES {
        let mut v = drift_val[i];
        for j in 0..N_PLAYERS {
            v += inputs.g[j][i] * u[j];
        }
        flow += grad_v[i] * v;
    }
    running_cost(spec, x, u) + flow
}

/// A computed control before and after saturation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub raw: f64,
    pub applied: f64,
}

impl ControlSample {
    pub fn saturated_low(&self) -> bool {
        self.raw < 0.0
    }

    pub fn saturated_high(&self, u_max: f64) -> bool {
        self.raw > u_max
    }
}

/// Saturate to `[0, u_max]`, canonicalizing `-0.0` to `0.0`.
pub fn saturate(raw: f64, u_max: f64) -> ControlSample {
    let mut applied = raw.clamp(0.0, u_max);
    if applied == 0.0 {
        applied = 0.0;
    }
    ControlSample { raw, applied }
}

/// Nash feedback policy `u_i = clamp(-(1/2R_ii) g_i . gradV, 0, u_max)`.
pub fn nash_policy(spec: &PlayerSpec, grad_v: &[f64; N_STATES]) -> ControlSample {
    let mut inner = 0.0;
    for i in 0..N_STATES {
        inner += spec.g[i] * grad_v[i];
    }
    saturate(-inner / (2.0 * spec.r_own()), spec.u_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics;
    use crate::scenario::{CpsParams, SignalSnapshot};
    use approx::assert_relative_eq;

    fn specs() -> [PlayerSpec; 3] {
        default_specs(&CpsParams::reference())
    }

    #[test]
    fn default_specs_validate() {
        for s in specs() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn state_penalty_reference_points() {
        let [p1, p2, p3] = specs();
        let mut x = StateVector([0.0; N_STATES]);
        assert_eq!(state_penalty(&p1, &x), 0.0);
        x.0[7] = 1.0;
        assert_eq!(state_penalty(&p2, &x), 0.0);
        // Published weights at the half point: 0.5*0.25 + 0.5*0.25 + 1*0.25.
        let half = StateVector([0.5; N_STATES]);
        assert_relative_eq!(state_penalty(&p3, &half), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn running_cost_structure() {
        let [p1, _, _] = specs();
        let x = StateVector([0.5; N_STATES]);
        let q = state_penalty(&p1, &x);
        assert_eq!(running_cost(&p1, &x, [0.0; 3]), q);
        // Cross-efforts are free at the default R = I.
        assert_eq!(running_cost(&p1, &x, [0.0, 0.9, 0.7]), q);
        let c1 = running_cost(&p1, &x, [0.3, 0.0, 0.0]);
        let c2 = running_cost(&p1, &x, [0.6, 0.0, 0.0]);
        assert_relative_eq!(c2 - q, 4.0 * (c1 - q), epsilon = 1e-14);
    }

    #[test]
    fn nash_policy_hand_value() {
        // Player 1 with gradV = e1 + e10: u_raw = -(1/2)(-0.5 - 0.3) = 0.4.
        let [p1, _, _] = specs();
        let mut grad = [0.0; N_STATES];
        grad[0] = 1.0;
        grad[9] = 1.0;
        let u = nash_policy(&p1, &grad);
        assert_relative_eq!(u.raw, 0.4, epsilon = 1e-15);
        assert_eq!(u.applied, u.raw);
    }

    #[test]
    fn nash_policy_zero_gradient() {
        let [p1, _, _] = specs();
        let u = nash_policy(&p1, &[0.0; N_STATES]);
        assert_eq!(u.applied, 0.0);
        assert!(u.applied.is_sign_positive(), "-0.0 must be canonicalized");
    }

    #[test]
    fn nash_policy_saturates() {
        let [_, p2, _] = specs();
        let mut grad = [0.0; N_STATES];
        grad[7] = -1000.0;
        let u = nash_policy(&p2, &grad);
        assert!(u.raw > p2.u_max);
        assert_eq!(u.applied, p2.u_max);
        grad[7] = 1000.0;
        let u = nash_policy(&p2, &grad);
        assert!(u.raw < 0.0);
        assert_eq!(u.applied, 0.0);
    }

    #[test]
    fn argmin_invariance_under_joint_scaling() {
        let [p1, _, _] = specs();
        let mut scaled = p1.clone();
        scaled.r[0] *= 7.5;
        let mut grad = [0.0; N_STATES];
        grad[0] = 0.4;
        grad[9] = -0.2;
        let mut grad_scaled = grad;
        for v in &mut grad_scaled {
            *v *= 7.5;
        }
        let a = nash_policy(&p1, &grad);
        let b = nash_policy(&scaled, &grad_scaled);
        assert_relative_eq!(a.raw, b.raw, epsilon = 1e-12);
    }

    #[test]
    fn hamiltonian_zero_costate_is_running_cost() {
        let [p1, _, _] = specs();
        let params = CpsParams::reference();
        let s = SignalSnapshot { p_s: 0.5, c_plus: 0.5, d8: 0.5, d9: 0.5, d10: 0.5 };
        let x = StateVector([0.4; N_STATES]);
        let f = dynamics::drift(&x, &s, &params).xdot;
        let inputs = dynamics::InputVectors::from_params(&params);
        let u = [0.2, 0.1, 0.3];
        let h = hamiltonian(&p1, &x, &[0.0; N_STATES], u, &f, &inputs);
        assert_relative_eq!(h, running_cost(&p1, &x, u), epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_picks_drift_component() {
        let [p1, _, _] = specs();
        let params = CpsParams::reference();
        let s = SignalSnapshot { p_s: 0.5, c_plus: 0.5, d8: 0.5, d9: 0.5, d10: 0.5 };
        let x = StateVector([0.4; N_STATES]);
        let f = dynamics::drift(&x, &s, &params).xdot;
        let inputs = dynamics::InputVectors::from_params(&params);
        let mut e1 = [0.0; N_STATES];
        e1[0] = 1.0;
        let h = hamiltonian(&p1, &x, &e1, [0.0; 3], &f, &inputs);
        assert_relative_eq!(h, state_penalty(&p1, &x) + f[0], epsilon = 1e-15);
    }

    #[test]
    fn saturation_monotonicity() {
        let [p1, _, _] = specs();
        let mut last = -1.0;
        // Sweep the costate so -g1 . gradV increases monotonically
        // (g1's fear component is negative, so raise gradV[0] directly).
        for k in -20..=20 {
            let mut grad = [0.0; N_STATES];
            grad[0] = (k as f64) / 5.0;
            let u = nash_policy(&p1, &grad);
            assert!(u.applied >= last);
            assert!((0.0..=p1.u_max).contains(&u.applied));
            last = u.applied;
        }
    }
}
