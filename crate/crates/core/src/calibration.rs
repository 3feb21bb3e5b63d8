//! Refit of the 37 free CPS parameters from an observed trajectory:
//! Tikhonov-regularized least squares on forward-difference state
//! derivatives of the seven social components.
//!
//! The parameter vector lives in an unconstrained space (softplus for
//! positive rates, sigmoid for bounded weights, per-group softmax for the
//! convex target weights); the response rates `gamma` and control gains
//! `beta` are fixed design values, not fitted.

use serde::{Deserialize, Serialize};

use crate::dynamics::drift;
use crate::error::{CpsgError, Result};
use crate::scenario::{
    frozen_signals, CpsParams, ExogenousSignals, IotaWeights, StateVector,
};

pub const THETA_DIM: usize = 37;

/// Social components entering the loss (x1..x7, 0-based 0..=6).
pub const FITTED_COMPONENTS: usize = 7;

const RATE_FLOOR: f64 = 1e-12;
const ZETA_MARGIN: f64 = 1e-9;

fn softplus(z: f64) -> f64 {
    let v = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    v.max(RATE_FLOOR)
}

fn inv_softplus(v: f64) -> f64 {
    // ln(e^v - 1), stable for the moderate values used at init.
    (v.exp() - 1.0).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Unconstrained 37-parameter vector.
///
/// Layout: `[kappa, zeta, alpha1..3, eta_P, eta_R, eta_C, eta_L,
/// eta_amp1..3, 25 group logits (fear 7, info 2, flex 1, health 3, risk 5,
/// coop 4, learn 3)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

/// Fixed (non-fitted) design values injected into the transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub gamma: f64,
    pub beta1: f64,
    pub beta8: f64,
    pub beta9: f64,
    pub beta10: f64,
}

impl Default for FixedParams {
    /// Published values: response rates fixed at 5.0, design control gains.
    fn default() -> Self {
        FixedParams {
            gamma: 5.0,
            beta1: 0.5,
            beta8: 0.5,
            beta9: 0.5,
            beta10: 0.3,
        }
    }
}

impl ParamVector {
    /// Documented initialization: uniform group weights (logits 0), rates 1,
    /// kappa 10, zeta 0.5, amplification weights 0.5.
    pub fn init() -> Self {
        let mut theta = vec![0.0; THETA_DIM];
        theta[0] = inv_softplus(10.0);
        theta[1] = 0.0;
        let rate_raw = inv_softplus(1.0);
        for slot in theta.iter_mut().take(9).skip(2) {
            *slot = rate_raw;
        }
        // eta_amp raws stay 0 (-> 0.5), logits stay 0 (-> uniform groups).
        ParamVector(theta)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Map to a valid `CpsParams`, injecting the fixed design values.
    pub fn to_params(&self, fixed: &FixedParams) -> CpsParams {
        let t = &self.0;
        let mut iota = IotaWeights {
            fear: [0.0; 7],
            info: [0.0; 2],
            flex: [0.0; 1],
            health: [0.0; 3],
            risk: [0.0; 5],
            coop: [0.0; 4],
            learn: [0.0; 3],
        };
        softmax_into(&t[12..19], &mut iota.fear);
        softmax_into(&t[19..21], &mut iota.info);
        softmax_into(&t[21..22], &mut iota.flex);
        softmax_into(&t[22..25], &mut iota.health);
        softmax_into(&t[25..30], &mut iota.risk);
        softmax_into(&t[30..34], &mut iota.coop);
        softmax_into(&t[34..37], &mut iota.learn);
        CpsParams {
            kappa: softplus(t[0]),
            zeta: sigmoid(t[1]).clamp(ZETA_MARGIN, 1.0 - ZETA_MARGIN),
            alpha: [softplus(t[2]), softplus(t[3]), softplus(t[4])],
            eta_amp: [sigmoid(t[9]), sigmoid(t[10]), sigmoid(t[11])],
            eta_p: softplus(t[5]),
            eta_r: softplus(t[6]),
            eta_c: softplus(t[7]),
            eta_l: softplus(t[8]),
            iota,
            gamma8: fixed.gamma,
            gamma9: fixed.gamma,
            gamma10: fixed.gamma,
            beta1: fixed.beta1,
            beta8: fixed.beta8,
            beta9: fixed.beta9,
            beta10: fixed.beta10,
        }
    }
}

/// Forward differences `(x[k+1] - x[k]) / dt`.
pub fn finite_diff_derivatives(observed: &[StateVector], dt: f64) -> Result<Vec<[f64; 10]>> {
    if observed.len() < 2 {
        return Err(CpsgError::InvalidField {
            field: "observed".into(),
            message: format!("need at least 2 states for derivatives, got {}", observed.len()),
        });
    }
    let mut out = Vec::with_capacity(observed.len() - 1);
    for k in 0..observed.len() - 1 {
        let mut d = [0.0; 10];
        for i in 0..10 {
            d[i] = (observed[k + 1][i] - observed[k][i]) / dt;
        }
        out.push(d);
    }
    Ok(out)
}

/// Squared-residual part of the loss (components x1..x7 only).
fn residual_sum(
    params: &CpsParams,
    observed: &[StateVector],
    derivs: &[[f64; 10]],
    signals: &ExogenousSignals,
    window_len: usize,
    n_terms: &mut usize,
) -> Result<f64> {
    let mut sum = 0.0;
    *n_terms = 0;
    for (k, d) in derivs.iter().enumerate() {
        let snap = frozen_signals(signals, k, window_len)?;
        let f = drift(&observed[k], &snap, params).xdot;
        for i in 0..FITTED_COMPONENTS {
            let r = f[i] - d[i];
            sum += r * r;
            *n_terms += 1;
        }
    }
    Ok(sum)
}

/// Tikhonov loss: derivative residual over x1..x7 plus `lambda * ||theta||^2`.
pub fn calibration_loss(
    theta: &ParamVector,
    observed: &[StateVector],
    signals: &ExogenousSignals,
    window_len: usize,
    dt: f64,
    lambda: f64,
    fixed: &FixedParams,
) -> Result<f64> {
    let derivs = finite_diff_derivatives(observed, dt)?;
    let params = theta.to_params(fixed);
    let mut n = 0;
    let residual = residual_sum(&params, observed, &derivs, signals, window_len, &mut n)?;
    Ok(residual + lambda * theta.norm_sq())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitOptions {
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub fixed: FixedParams,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lambda: 0.01,
            max_iters: 500,
            tol: 1e-10,
            fixed: FixedParams::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub final_loss: f64,
    pub residual: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_data: bool,
    /// Loss after every accepted iteration (index 0 = initial loss).
    pub loss_curve: Vec<f64>,
    /// RMSE of fitted drift vs forward differences, overall (x1..x7).
    pub derivative_rmse: f64,
    /// Per-component derivative RMSE for x1..x7.
    pub derivative_rmse_per_state: [f64; FITTED_COMPONENTS],
    pub warnings: Vec<String>,
}

/// Deterministic first-order descent with Armijo backtracking on the
/// calibration loss. Gradients are central finite differences in the
/// unconstrained space (37 coordinates; the data sets are tiny).
pub fn fit(
    observed: &[StateVector],
    signals: &ExogenousSignals,
    window_len: usize,
    dt: f64,
    opts: &FitOptions,
) -> Result<(CpsParams, ParamVector, FitReport)> {
    if opts.lambda < 0.0 {
        return Err(CpsgError::Config(format!("lambda {} must be >= 0", opts.lambda)));
    }
    let derivs = finite_diff_derivatives(observed, dt)?;
    let mut warnings = Vec::new();

    let max_deriv = derivs
        .iter()
        .flat_map(|d| d[..FITTED_COMPONENTS].iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let degenerate_data = max_deriv < 1e-14;
    if degenerate_data {
        warnings.push(
            "observed trajectory is constant on x1..x7: zero-information data, fit is degenerate"
                .into(),
        );
    }

    let loss_of = |theta: &ParamVector| -> Result<f64> {
        let params = theta.to_params(&opts.fixed);
        let mut n = 0;
        let residual = residual_sum(&params, observed, &derivs, signals, window_len, &mut n)?;
        Ok(residual + opts.lambda * theta.norm_sq())
    };

    let mut theta = ParamVector::init();
    let mut loss = loss_of(&theta)?;
    if !loss.is_finite() {
        return Err(CpsgError::Other(
            "calibration loss non-finite at initialization".into(),
        ));
    }
    let mut loss_curve = vec![loss];
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let grad_h = 1e-6;
    let armijo = 1e-4;
    let mut stall = 0;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        // Central-difference gradient in the unconstrained space.
        let mut grad = vec![0.0; THETA_DIM];
        for j in 0..THETA_DIM {
            let mut plus = theta.clone();
            plus.0[j] += grad_h;
            let mut minus = theta.clone();
            minus.0[j] -= grad_h;
            grad[j] = (loss_of(&plus)? - loss_of(&minus)?) / (2.0 * grad_h);
        }
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !grad_sq.is_finite() {
            return Err(CpsgError::Other(format!(
                "calibration gradient non-finite at iteration {iter}"
            )));
        }
        if grad_sq.sqrt() < 1e-12 {
            converged = true;
            break;
        }

        // Backtracking line search along -grad.
        let mut accepted = false;
        let mut trial_step = (step * 2.0).min(1e3);
        for _ in 0..60 {
            let mut cand = theta.clone();
            for (c, g) in cand.0.iter_mut().zip(&grad) {
                *c -= trial_step * g;
            }
            let cand_loss = loss_of(&cand)?;
            if !cand_loss.is_finite() {
                return Err(CpsgError::Other(format!(
                    "calibration loss non-finite at iteration {iter}"
                )));
            }
            if cand_loss <= loss - armijo * trial_step * grad_sq {
                let drop = loss - cand_loss;
                theta = cand;
                loss = cand_loss;
                step = trial_step;
                accepted = true;
                if drop <= opts.tol * loss.max(1.0) {
                    stall += 1;
                } else {
                    stall = 0;
                }
                break;
            }
            trial_step *= 0.5;
        }
        loss_curve.push(loss);
        if !accepted {
            // No admissible step: treat as converged at a flat point.
            converged = true;
            break;
        }
        if stall >= 3 {
            converged = true;
            break;
        }
    }

    if !converged {
        warnings.push(format!(
            "calibration stopped at max_iters = {} without meeting tol; returning best-so-far",
            opts.max_iters
        ));
    }

    let params = theta.to_params(&opts.fixed);
    let (derivative_rmse, derivative_rmse_per_state) =
        derivative_rmse(&params, observed, signals, window_len, dt)?;
    let mut n = 0;
    let residual = residual_sum(&params, observed, &derivs, signals, window_len, &mut n)?;
    let report = FitReport {
        final_loss: loss,
        residual,
        lambda: opts.lambda,
        iterations,
        converged,
        degenerate_data,
        loss_curve,
        derivative_rmse,
        derivative_rmse_per_state,
        warnings,
    };
    Ok((params, theta, report))
}

/// RMSE of model drift vs forward-difference derivatives on the visited
/// states (overall and per component, x1..x7).
pub fn derivative_rmse(
    params: &CpsParams,
    observed: &[StateVector],
    signals: &ExogenousSignals,
    window_len: usize,
    dt: f64,
) -> Result<(f64, [f64; FITTED_COMPONENTS])> {
    let derivs = finite_diff_derivatives(observed, dt)?;
    let mut per = [0.0; FITTED_COMPONENTS];
    let mut total = 0.0;
    for (k, d) in derivs.iter().enumerate() {
        let snap = frozen_signals(signals, k, window_len)?;
        let f = drift(&observed[k], &snap, params).xdot;
        for i in 0..FITTED_COMPONENTS {
            let r = f[i] - d[i];
            per[i] += r * r;
            total += r * r;
        }
    }
    let t = derivs.len() as f64;
    for v in &mut per {
        *v = (*v / t).sqrt();
    }
    Ok(((total / (t * FITTED_COMPONENTS as f64)).sqrt(), per))
}

/// Open-loop RMSE vs the scenario's observed block, over all ten components
/// and all simulated steps (the shared initial state is excluded).
pub fn openloop_rmse(params: &CpsParams, scenario: &crate::scenario::Scenario) -> Result<f64> {
    let observed = scenario.observed.as_ref().ok_or_else(|| CpsgError::InvalidField {
        field: "observed".into(),
        message: "scenario has no observed trajectory".into(),
    })?;
    let mut x = scenario.x0;
    let mut sum = 0.0;
    let mut n = 0usize;
    for k in 0..scenario.horizon {
        let snap = scenario.snapshot(k)?;
        x = crate::dynamics::controlled_step(&x, [0.0; 3], &snap, params, scenario.dt);
        for i in 0..10 {
            let r = x[i] - observed[k + 1][i];
            sum += r * r;
            n += 1;
        }
    }
    Ok((sum / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::N_STATES;
    use approx::assert_relative_eq;

    #[test]
    fn init_maps_to_documented_start() {
        let p = ParamVector::init().to_params(&FixedParams::default());
        assert_relative_eq!(p.kappa, 10.0, epsilon = 1e-9);
        assert_relative_eq!(p.zeta, 0.5, epsilon = 1e-12);
        for a in p.alpha {
            assert_relative_eq!(a, 1.0, epsilon = 1e-9);
        }
        for e in [p.eta_p, p.eta_r, p.eta_c, p.eta_l] {
            assert_relative_eq!(e, 1.0, epsilon = 1e-9);
        }
        for e in p.eta_amp {
            assert_relative_eq!(e, 0.5, epsilon = 1e-12);
        }
        assert_relative_eq!(p.iota.fear[0], 1.0 / 7.0, epsilon = 1e-12);
        assert_eq!(p.iota.flex[0], 1.0);
        assert_eq!(p.gamma8, 5.0);
        assert_eq!(p.beta10, 0.3);
    }

    #[test]
    fn transform_always_valid() {
        // Extreme raw values must still produce a valid parameter set.
        let mut worst = ParamVector(vec![0.0; THETA_DIM]);
        for (j, v) in worst.0.iter_mut().enumerate() {
            *v = if j % 2 == 0 { -300.0 } else { 300.0 };
        }
        worst.to_params(&FixedParams::default()).validate().unwrap();
        let mut wild = ParamVector(vec![0.0; THETA_DIM]);
        for (j, v) in wild.0.iter_mut().enumerate() {
            *v = ((j as f64) * 1.7).sin() * 50.0;
        }
        wild.to_params(&FixedParams::default()).validate().unwrap();
    }

    #[test]
    fn forward_differences() {
        let mut traj = Vec::new();
        for k in 0..5 {
            let mut x = [0.0; N_STATES];
            x[0] = 0.1 * k as f64;
            traj.push(StateVector(x));
        }
        let d = finite_diff_derivatives(&traj, 1.0).unwrap();
        assert_eq!(d.len(), 4);
        for row in &d {
            assert_relative_eq!(row[0], 0.1, epsilon = 1e-12);
            assert_eq!(row[3], 0.0);
        }
        let constant = vec![StateVector([0.4; N_STATES]); 6];
        let d = finite_diff_derivatives(&constant, 0.5).unwrap();
        assert!(d.iter().all(|r| r.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn derivative_length_error() {
        let err = finite_diff_derivatives(&[StateVector([0.0; N_STATES])], 1.0).unwrap_err();
        assert!(err.to_string().contains("at least 2"));
    }

    #[test]
    fn regularizer_adds_lambda_norm() {
        let s = crate::synth::harvey_synth();
        let obs = s.observed.clone().unwrap();
        let theta = ParamVector::init();
        let fixed = FixedParams::default();
        let l0 = calibration_loss(&theta, &obs, &s.signals, s.window_len, s.dt, 0.0, &fixed).unwrap();
        let l1 = calibration_loss(&theta, &obs, &s.signals, s.window_len, s.dt, 0.01, &fixed).unwrap();
        assert_relative_eq!(l1 - l0, 0.01 * theta.norm_sq(), epsilon = 1e-9);
    }
}
