//! Scenario data model: states, exogenous signals, model parameters, and
//! the piecewise-stationary windowing used by every consumer of a scenario.
//!
//! State component order (0-based index / conventional name):
//! `0` fear, `1` information seeking, `2` flexibility, `3` physical health,
//! `4` risk perception, `5` cooperation, `6` learning, `7` power
//! availability, `8` EMS deployment, `9` fake-news intensity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CpsgError, Result};

/// Number of state components.
pub const N_STATES: usize = 10;

/// Ten-dimensional community state, every component in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub [f64; N_STATES]);

impl StateVector {
    pub fn zeros() -> Self {
        StateVector([0.0; N_STATES])
    }

    pub fn as_array(&self) -> &[f64; N_STATES] {
        &self.0
    }

    /// True when every component lies in `[0, 1]`.
    pub fn in_box(&self) -> bool {
        self.0.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Index of the first component outside `[0, 1]`, if any.
    pub fn out_of_box(&self) -> Option<(usize, f64)> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
            .map(|(i, v)| (i, *v))
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Exogenous driver series sampled once per step.
///
/// `p_s` is disaster severity, `c_plus` news positivity, `d8`/`d9`/`d10`
/// the baselines for power, EMS, and fake-news intensity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSignals {
    #[serde(rename = "P_S")]
    pub p_s: Vec<f64>,
    #[serde(rename = "C_plus")]
    pub c_plus: Vec<f64>,
    pub d8: Vec<f64>,
    pub d9: Vec<f64>,
    pub d10: Vec<f64>,
}

impl ExogenousSignals {
    pub fn series(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("P_S", &self.p_s),
            ("C_plus", &self.c_plus),
            ("d8", &self.d8),
            ("d9", &self.d9),
            ("d10", &self.d10),
        ]
    }

    pub fn len(&self) -> usize {
        self.p_s
            .len()
            .min(self.c_plus.len())
            .min(self.d8.len())
            .min(self.d9.len())
            .min(self.d10.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raw (unfrozen) sample at step `t`.
    pub fn sample(&self, t: usize) -> Result<SignalSnapshot> {
        let len = self.len();
        if t >= len {
            return Err(CpsgError::InvalidField {
                field: "signals".into(),
                message: format!("sample index {t} out of range (length {len})"),
            });
        }
        Ok(SignalSnapshot {
            p_s: self.p_s[t],
            c_plus: self.c_plus[t],
            d8: self.d8[t],
            d9: self.d9[t],
            d10: self.d10[t],
        })
    }
}

/// One frozen sample of the exogenous drivers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSnapshot {
    pub p_s: f64,
    pub c_plus: f64,
    pub d8: f64,
    pub d9: f64,
    pub d10: f64,
}

/// Convex target weights, grouped per driven state.
///
/// Group sizes 7 + 2 + 1 + 3 + 5 + 4 + 3 = 25; each group sums to one.
/// `flex` is the degenerate single-weight group of the flexibility target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IotaWeights {
    pub fear: [f64; 7],
    pub info: [f64; 2],
    pub flex: [f64; 1],
    pub health: [f64; 3],
    pub risk: [f64; 5],
    pub coop: [f64; 4],
    pub learn: [f64; 3],
}

impl IotaWeights {
    pub fn groups(&self) -> [(&'static str, &[f64]); 7] {
        [
            ("iota.fear", &self.fear),
            ("iota.info", &self.info),
            ("iota.flex", &self.flex),
            ("iota.health", &self.health),
            ("iota.risk", &self.risk),
            ("iota.coop", &self.coop),
            ("iota.learn", &self.learn),
        ]
    }

    /// Uniform weights inside every group.
    pub fn uniform() -> Self {
        IotaWeights {
            fear: [1.0 / 7.0; 7],
            info: [0.5; 2],
            flex: [1.0],
            health: [1.0 / 3.0; 3],
            risk: [0.2; 5],
            coop: [0.25; 4],
            learn: [1.0 / 3.0; 3],
        }
    }
}

/// Full parameter set of the CPS dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpsParams {
    /// Logistic steepness (> 0).
    pub kappa: f64,
    /// Logistic midpoint, in (0, 1).
    pub zeta: f64,
    /// Diffusion rates for the social states x1..x3.
    pub alpha: [f64; 3],
    /// Risk-amplification mixing weights for x1..x3, each in [0, 1].
    pub eta_amp: [f64; 3],
    /// Gated relaxation rates for x4 (health), x5 (risk), x6 (cooperation),
    /// x7 (learning).
    pub eta_p: f64,
    pub eta_r: f64,
    pub eta_c: f64,
    pub eta_l: f64,
    pub iota: IotaWeights,
    /// Relaxation response rates of the physically driven states.
    pub gamma8: f64,
    pub gamma9: f64,
    pub gamma10: f64,
    /// Control-effectiveness gains.
    pub beta1: f64,
    pub beta8: f64,
    pub beta9: f64,
    pub beta10: f64,
}

impl CpsParams {
    /// Reference parameter set used for the bundled synthetic scenarios.
    ///
    /// Control gains follow the published design values (beta1 = beta8 =
    /// beta9 = 0.5, beta10 = 0.3). The gamma response rates are set to 0.6
    /// rather than the published 5.0: with the explicit Euler integrator and
    /// the step size dt = 1 used throughout, gamma*dt > 2 is an unstable
    /// discretization (the relaxation map has multiplier |1 - gamma*dt| > 1
    /// and clamp-limited period-two orbits), so the bundled data generator
    /// uses a monotone step-stable rate (gamma*dt < 1) instead.
    pub fn reference() -> Self {
        CpsParams {
            // A soft logistic (kappa = 2) keeps the driver transforms in
            // their graded range instead of saturating them to 0/1, so the
            // fear target moves smoothly with the exogenous severity arc.
            kappa: 2.0,
            zeta: 0.5,
            // Slow fear diffusion with strong risk amplification: the fear
            // equilibrium sits near the hurricane-peak level and shifts by
            // roughly beta1/(alpha1 (1 - dGamma/dtheta)) per unit of u1, so
            // counter-messaging has real leverage on the population.
            alpha: [0.10, 0.8, 0.7],
            eta_amp: [0.85, 0.5, 0.4],
            eta_p: 0.9,
            eta_r: 0.4,
            eta_c: 0.8,
            eta_l: 0.7,
            iota: IotaWeights {
                fear: [0.08, 0.06, 0.16, 0.34, 0.04, 0.04, 0.28],
                info: [0.75, 0.25],
                flex: [1.0],
                health: [0.40, 0.35, 0.25],
                risk: [0.25, 0.20, 0.20, 0.20, 0.15],
                coop: [0.30, 0.25, 0.25, 0.20],
                learn: [0.40, 0.35, 0.25],
            },
            // Tracking rates stay below 1/dt for the unit-step scenarios so
            // the explicit Euler step remains monotone; power restoration is
            // the fastest channel.
            gamma8: 0.9,
            gamma9: 0.6,
            gamma10: 0.6,
            beta1: 0.5,
            beta8: 0.5,
            beta9: 0.5,
            beta10: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 9] = [
            ("kappa", self.kappa),
            ("alpha[0]", self.alpha[0]),
            ("alpha[1]", self.alpha[1]),
            ("alpha[2]", self.alpha[2]),
            ("eta_p", self.eta_p),
            ("eta_r", self.eta_r),
            ("eta_c", self.eta_c),
            ("eta_l", self.eta_l),
            ("gamma8", self.gamma8),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CpsgError::InvalidParam {
                    name: name.into(),
                    value: v,
                    constraint: "> 0".into(),
                });
            }
        }
        for (name, v) in [("gamma9", self.gamma9), ("gamma10", self.gamma10)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CpsgError::InvalidParam {
                    name: name.into(),
                    value: v,
                    constraint: "> 0".into(),
                });
            }
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(CpsgError::InvalidParam {
                name: "zeta".into(),
                value: self.zeta,
                constraint: "in (0, 1)".into(),
            });
        }
        for (i, v) in self.eta_amp.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(CpsgError::InvalidParam {
                    name: format!("eta_amp[{i}]"),
                    value: *v,
                    constraint: "in [0, 1]".into(),
                });
            }
        }
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta8", self.beta8),
            ("beta9", self.beta9),
            ("beta10", self.beta10),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CpsgError::InvalidParam {
                    name: name.into(),
                    value: v,
                    constraint: ">= 0".into(),
                });
            }
        }
        for (name, group) in self.iota.groups() {
            let mut sum = 0.0;
            for (i, w) in group.iter().enumerate() {
                if !(*w >= 0.0 && w.is_finite()) {
                    return Err(CpsgError::InvalidParam {
                        name: format!("{name}[{i}]"),
                        value: *w,
                        constraint: ">= 0".into(),
                    });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CpsgError::InvalidParam {
                    name: name.into(),
                    value: sum,
                    constraint: "group sum = 1".into(),
                });
            }
        }
        Ok(())
    }
}

/// A reproducible simulation scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Integration / sampling step.
    pub dt: f64,
    /// Number of integration steps (trajectories have `horizon + 1` states).
    pub horizon: usize,
    /// Piecewise-stationary window length in steps.
    pub window_len: usize,
    pub seed: u64,
    pub x0: StateVector,
    pub signals: ExogenousSignals,
    /// Optional observed trajectory (`horizon + 1` states) for calibration
    /// and RMSE reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Vec<StateVector>>,
}

/// Index of the stationarity window containing step `t`.
pub fn window_index(t: usize, window_len: usize) -> usize {
    debug_assert!(window_len >= 1);
    t / window_len
}

/// Snapshot frozen at the first step of the window containing `t`.
pub fn frozen_signals(
    signals: &ExogenousSignals,
    t: usize,
    window_len: usize,
) -> Result<SignalSnapshot> {
    if window_len == 0 {
        return Err(CpsgError::InvalidField {
            field: "window_len".into(),
            message: "must be >= 1".into(),
        });
    }
    signals.sample(window_index(t, window_len) * window_len)
}

impl Scenario {
    pub fn window_of(&self, t: usize) -> usize {
        window_index(t, self.window_len)
    }

    pub fn snapshot(&self, t: usize) -> Result<SignalSnapshot> {
        frozen_signals(&self.signals, t, self.window_len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CpsgError::InvalidField {
                field: "dt".into(),
                message: format!("{} is not a positive finite step", self.dt),
            });
        }
        if self.horizon == 0 {
            return Err(CpsgError::InvalidField {
                field: "horizon".into(),
                message: "must be >= 1".into(),
            });
        }
        if self.window_len == 0 {
            return Err(CpsgError::InvalidField {
                field: "window_len".into(),
                message: "must be >= 1".into(),
            });
        }
        for (i, v) in self.x0.0.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(CpsgError::OutOfRange {
                    field: "x0".into(),
                    index: i,
                    value: *v,
                });
            }
        }
        for (name, series) in self.signals.series() {
            if series.len() < self.horizon {
                return Err(CpsgError::SignalTooShort {
                    name: name.into(),
                    got: series.len(),
                    horizon: self.horizon,
                    need: self.horizon,
                });
            }
            for (i, v) in series.iter().enumerate() {
                if !(0.0..=1.0).contains(v) {
                    return Err(CpsgError::OutOfRange {
                        field: format!("signals.{name}"),
                        index: i,
                        value: *v,
                    });
                }
            }
        }
        if let Some(obs) = &self.observed {
            if obs.len() != self.horizon + 1 {
                return Err(CpsgError::InvalidField {
                    field: "observed".into(),
                    message: format!(
                        "has {} states but horizon {} requires {}",
                        obs.len(),
                        self.horizon,
                        self.horizon + 1
                    ),
                });
            }
            for (k, x) in obs.iter().enumerate() {
                if let Some((i, v)) = x.out_of_box() {
                    return Err(CpsgError::OutOfRange {
                        field: format!("observed[{k}]"),
                        index: i,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Load and validate a scenario from a JSON file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CpsgError::read(path, e))?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| CpsgError::json(path, e))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Serialize a scenario to pretty JSON (stable field order).
pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    let text = serde_json::to_string_pretty(scenario).map_err(|e| {
        CpsgError::Other(format!("scenario serialization failed: {e}"))
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CpsgError::write(path, e))
}

/// Load and validate a parameter file (JSON mirroring [`CpsParams`]).
pub fn load_params(path: &Path) -> Result<CpsParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CpsgError::read(path, e))?;
    let params: CpsParams =
        serde_json::from_str(&text).map_err(|e| CpsgError::json(path, e))?;
    params.validate()?;
    Ok(params)
}

pub fn save_params(path: &Path, params: &CpsParams) -> Result<()> {
    let text = serde_json::to_string_pretty(params).map_err(|e| {
        CpsgError::Other(format!("parameter serialization failed: {e}"))
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CpsgError::write(path, e))
}

/// Scenarios bundled with the crate.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let text = match name {
        "harvey_synth" => include_str!("../scenarios/harvey_synth.json"),
        "irma_synth" => include_str!("../scenarios/irma_synth.json"),
        other => {
            return Err(CpsgError::InvalidField {
                field: "scenario".into(),
                message: format!(
                    "unknown builtin '{other}' (available: harvey_synth, irma_synth)"
                ),
            })
        }
    };
    let scenario: Scenario = serde_json::from_str(text)
        .map_err(|e| CpsgError::Other(format!("builtin scenario {name} is invalid: {e}")))?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scenario() -> Scenario {
        Scenario {
            name: "tiny".into(),
            dt: 1.0,
            horizon: 4,
            window_len: 2,
            seed: 7,
            x0: StateVector([0.5; N_STATES]),
            signals: ExogenousSignals {
                p_s: vec![0.1, 0.2, 0.3, 0.4, 0.5],
                c_plus: vec![0.5; 5],
                d8: vec![0.9; 5],
                d9: vec![0.8; 5],
                d10: vec![0.3; 5],
            },
            observed: None,
        }
    }

    #[test]
    fn window_indexing() {
        assert_eq!(window_index(0, 6), 0);
        assert_eq!(window_index(5, 6), 0);
        assert_eq!(window_index(6, 6), 1);
        assert_eq!(window_index(17, 6), 2);
        assert_eq!(window_index(3, 1), 3);
    }

    #[test]
    fn frozen_signals_anchor_to_window_start() {
        let s = tiny_scenario();
        // Window length 2: steps 0,1 frozen at sample 0; steps 2,3 at sample 2.
        assert_eq!(s.snapshot(0).unwrap().p_s, 0.1);
        assert_eq!(s.snapshot(1).unwrap().p_s, 0.1);
        assert_eq!(s.snapshot(2).unwrap().p_s, 0.3);
        assert_eq!(s.snapshot(3).unwrap().p_s, 0.3);
    }

    #[test]
    fn frozen_signals_out_of_range() {
        let s = tiny_scenario();
        let err = frozen_signals(&s.signals, 10, 2).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn validate_rejects_out_of_box_x0() {
        let mut s = tiny_scenario();
        s.x0.0[3] = 1.5;
        let err = s.validate().unwrap_err();
        assert_eq!(err.to_string(), "x0[3] = 1.5: outside [0, 1]");
    }

    #[test]
    fn validate_rejects_bad_signal_sample() {
        let mut s = tiny_scenario();
        s.signals.d9[2] = -0.25;
        let err = s.validate().unwrap_err();
        assert_eq!(err.to_string(), "signals.d9[2] = -0.25: outside [0, 1]");
    }

    #[test]
    fn validate_rejects_short_signal() {
        let mut s = tiny_scenario();
        s.signals.d10.truncate(2);
        let err = s.validate().unwrap_err();
        assert!(matches!(err, CpsgError::SignalTooShort { ref name, got: 2, .. } if name == "d10"));
    }

    #[test]
    fn validate_rejects_observed_length_mismatch() {
        let mut s = tiny_scenario();
        s.observed = Some(vec![StateVector([0.5; N_STATES]); 3]);
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("observed"));
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn reference_params_are_valid() {
        CpsParams::reference().validate().unwrap();
    }

    #[test]
    fn iota_group_sum_enforced() {
        let mut p = CpsParams::reference();
        p.iota.risk[0] += 0.05;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("iota.risk"));
    }

    #[test]
    fn scenario_roundtrip_via_file() {
        let dir = std::env::temp_dir().join("cpsg_scenario_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.json");
        let mut s = tiny_scenario();
        s.observed = Some(vec![StateVector([0.25; N_STATES]); 5]);
        save_scenario(&path, &s).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(s, back);
    }
}
