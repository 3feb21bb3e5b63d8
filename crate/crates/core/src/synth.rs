//! Generators for the bundled synthetic scenarios.
//!
//! The observed hurricane series behind the published experiments are not
//! public, so the crate ships two synthetic stand-ins with the same shape:
//! a 17-step Harvey-style event (landfall near t=0, infrastructure trough
//! mid-horizon, recovery tail) and a 12-step Irma-style event with higher
//! initial fear and a sharp late power drop. Observed blocks are open-loop
//! simulations of the reference model, so calibration on them is
//! self-consistent by construction.

use crate::dynamics::controlled_step;
use crate::scenario::{
    CpsParams, ExogenousSignals, Scenario, StateVector,
};

/// Piecewise-linear series through `(step, value)` knots, sampled at
/// 0..len-1 and rounded to 4 decimals for tidy files.
fn series(knots: &[(usize, f64)], len: usize) -> Vec<f64> {
    assert!(!knots.is_empty());
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let v = if t <= knots[0].0 {
            knots[0].1
        } else if t >= knots[knots.len() - 1].0 {
            knots[knots.len() - 1].1
        } else {
            let idx = knots.iter().position(|(k, _)| *k > t).unwrap();
            let (t0, v0) = knots[idx - 1];
            let (t1, v1) = knots[idx];
            let frac = (t - t0) as f64 / (t1 - t0) as f64;
            v0 + frac * (v1 - v0)
        };
        out.push((v * 1e4).round() / 1e4);
    }
    out
}

/// Open-loop simulation used to fill the `observed` block.
fn observe(scenario: &Scenario, params: &CpsParams) -> Vec<StateVector> {
    let mut x = scenario.x0;
    let mut out = Vec::with_capacity(scenario.horizon + 1);
    out.push(x);
    for k in 0..scenario.horizon {
        let snap = scenario.snapshot(k).expect("generator covers the horizon");
        x = controlled_step(&x, [0.0; 3], &snap, params, scenario.dt);
        out.push(x);
    }
    out
}

/// 17-step Harvey-style synthetic scenario (seed 42, window length 6).
pub fn harvey_synth() -> Scenario {
    let horizon = 17;
    let len = horizon + 1;
    let signals = ExogenousSignals {
        // Severity peaks at landfall and decays through recovery.
        p_s: series(&[(0, 0.9), (3, 0.7), (8, 0.45), (13, 0.25), (17, 0.15)], len),
        // News positivity climbs as the event winds down.
        c_plus: series(&[(0, 0.15), (4, 0.35), (10, 0.6), (17, 0.78)], len),
        // Grid holds at a degraded level while crews triage, then recovers
        // late in the horizon.
        d8: series(&[(0, 0.55), (9, 0.60), (13, 0.71), (17, 0.81)], len),
        // EMS strain follows the same arc, shallower and later.
        d9: series(&[(0, 0.5), (10, 0.55), (14, 0.65), (17, 0.72)], len),
        // Misinformation stays elevated past the peak and fades.
        d10: series(&[(0, 0.8), (6, 0.7), (14, 0.45), (17, 0.35)], len),
    };
    let mut scenario = Scenario {
        name: "harvey_synth".into(),
        dt: 1.0,
        horizon,
        window_len: 6,
        seed: 42,
        x0: StateVector([0.62, 0.85, 0.30, 0.35, 0.90, 0.30, 0.25, 0.40, 0.55, 0.80]),
        signals,
        observed: None,
    };
    scenario.observed = Some(observe(&scenario, &CpsParams::reference()));
    scenario
}

/// 12-step Irma-style synthetic scenario: higher initial fear, sharp late
/// power drop (seed 42, window length 6).
pub fn irma_synth() -> Scenario {
    let horizon = 12;
    let len = horizon + 1;
    let signals = ExogenousSignals {
        p_s: series(&[(0, 0.95), (3, 0.8), (7, 0.45), (12, 0.2)], len),
        c_plus: series(&[(0, 0.15), (5, 0.35), (12, 0.65)], len),
        // Second strike on the grid at steps 10-11.
        d8: series(
            &[(0, 0.5), (8, 0.6), (10, 0.35), (11, 0.35), (12, 0.55)],
            len,
        ),
        d9: series(&[(0, 0.5), (6, 0.6), (12, 0.7)], len),
        d10: series(&[(0, 0.75), (5, 0.65), (12, 0.4)], len),
    };
    let mut scenario = Scenario {
        name: "irma_synth".into(),
        dt: 1.0,
        horizon,
        window_len: 6,
        seed: 42,
        x0: StateVector([0.90, 0.80, 0.30, 0.30, 0.90, 0.30, 0.25, 0.45, 0.50, 0.75]),
        signals,
        observed: None,
    };
    scenario.observed = Some(observe(&scenario, &CpsParams::reference()));
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    #[test]
    fn generated_scenarios_validate() {
        harvey_synth().validate().unwrap();
        irma_synth().validate().unwrap();
    }

    #[test]
    fn harvey_shape_pins() {
        let s = harvey_synth();
        assert_eq!(s.horizon, 17);
        assert_eq!(s.dt, 1.0);
        assert_eq!(s.seed, 42);
        assert_eq!(s.window_len, 6);
        assert_eq!(s.x0[0], 0.62);
        assert_eq!(s.observed.as_ref().unwrap().len(), 18);
    }

    #[test]
    fn irma_shape_pins() {
        let s = irma_synth();
        assert_eq!(s.horizon, 12);
        assert_eq!(s.x0[0], 0.90);
    }

    #[test]
    fn bundled_files_match_generators() {
        // The committed JSON files are generated by examples/gen_scenarios;
        // regenerate them if this drifts.
        assert_eq!(builtin_scenario("harvey_synth").unwrap(), harvey_synth());
        assert_eq!(builtin_scenario("irma_synth").unwrap(), irma_synth());
        let bundled: CpsParams =
            serde_json::from_str(include_str!("../scenarios/params_reference.json")).unwrap();
        assert_eq!(bundled, CpsParams::reference());
    }

    #[test]
    fn observed_block_is_open_loop_consistent() {
        let s = harvey_synth();
        let params = CpsParams::reference();
        let obs = s.observed.as_ref().unwrap();
        let mut x = s.x0;
        for k in 0..s.horizon {
            let snap = s.snapshot(k).unwrap();
            x = controlled_step(&x, [0.0; 3], &snap, &params, s.dt);
            assert_eq!(x.0, obs[k + 1].0);
        }
    }
}
