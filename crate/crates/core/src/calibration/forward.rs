//! Discrete monthly forward model of the archive-flow block.
//!
//! `K` advances with the exact solution of `dK/dt = A - delta_K K` under a
//! month-long constant inflow `A`; quality and model skill take one explicit
//! Euler step per month with `q` clipped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::CalibrationError;
use crate::model::{feedback_gain, logistic, scaling_target};
use crate::series::MonthlySeries;

use super::{CalibConfig, CalibFixedBlock};

/// Box for `(alpha_H, alpha_A, delta_K)`.
pub const FLOW_BOUNDS: [(f64, f64); 3] = [(1e-8, 10.0), (1e-8, 5.0), (1e-6, 0.2)];
pub const FLOW_NAMES: [&str; 3] = ["alpha_H", "alpha_A", "delta_K"];

/// The estimated triplet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    #[serde(rename = "alpha_H")]
    pub alpha_h: f64,
    #[serde(rename = "alpha_A")]
    pub alpha_a: f64,
    #[serde(rename = "delta_K")]
    pub delta_k: f64,
}

impl FlowParams {
    pub fn new(alpha_h: f64, alpha_a: f64, delta_k: f64) -> Result<Self, CalibrationError> {
        let p = Self { alpha_h, alpha_a, delta_k };
        for ((name, v), (lo, hi)) in FLOW_NAMES.iter().zip(p.to_array()).zip(FLOW_BOUNDS) {
            if !(lo..=hi).contains(&v) {
                return Err(CalibrationError::OutOfBounds { name, value: v, lo, hi });
            }
        }
        Ok(p)
    }

    /// Skips the box check; for probing the forward model at or beyond the
    /// calibration bounds.
    pub fn unchecked(alpha_h: f64, alpha_a: f64, delta_k: f64) -> Self {
        Self { alpha_h, alpha_a, delta_k }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha_h, self.alpha_a, self.delta_k]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        Self { alpha_h: x[0], alpha_a: x[1], delta_k: x[2] }
    }
}

/// Exact one-month update of `dK/dt = A - delta_K K` with constant `A`.
pub fn step_k_exact(k: f64, inflow: f64, delta_k: f64) -> f64 {
    if delta_k > 0.0 {
        // (1 - e^{-d}) / d without cancellation for small d.
        let phi = -(-delta_k).exp_m1() / delta_k;
        k * (-delta_k).exp() + inflow * phi
    } else {
        k + inflow
    }
}

/// Explicit Euler month of the quality and model-skill equations, with the
/// gate replaced by 1 when disabled. Returns `(q_next, theta_next)`.
#[allow(clippy::too_many_arguments)]
pub fn advance_aux(
    q: f64,
    theta: f64,
    h: f64,
    queries: f64,
    k: f64,
    fixed: &CalibFixedBlock,
    flow: &FlowParams,
    gate_enabled: bool,
) -> Result<(f64, f64), CalibrationError> {
    if !(k > 0.0) {
        return Err(CalibrationError::ArchiveNotPositive(k));
    }
    let a = accuracy(fixed, theta, q);
    let g = admitted(fixed, a, gate_enabled);
    let human = flow.alpha_h * h;
    let ai = flow.alpha_a * queries * g;
    let dq = (human / k) * (fixed.q_h - q) + (ai / k) * (a - q) - fixed.delta_q * q;
    let dtheta = fixed.eta_sup * (scaling_target(k, q, fixed.theta_max, fixed.k_max) - theta)
        + fixed.eta_rlhf * feedback_gain(theta, queries, fixed.theta_max, fixed.q_half);
    Ok(((q + dq).clamp(0.0, 1.0), theta + dtheta))
}

#[inline]
fn accuracy(fixed: &CalibFixedBlock, theta: f64, q: f64) -> f64 {
    logistic(theta - fixed.theta_mid) * q
}

#[inline]
fn admitted(fixed: &CalibFixedBlock, a: f64, gate_enabled: bool) -> f64 {
    if gate_enabled {
        logistic(fixed.kappa_gate * (a - fixed.a_0))
    } else {
        1.0
    }
}

/// Month-by-month output of [`simulate_flows`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPrediction {
    /// Predicted `K_{t+1} - K_t`.
    pub flows: Vec<f64>,
    /// Predicted stock at the end of each month, `K_{t+1}`.
    pub levels: Vec<f64>,
    /// Gated AI inflow `alpha_A Q_t g(a_t)` per month.
    pub ai_inflow: Vec<f64>,
    pub quality: Vec<f64>,
    pub model_skill: Vec<f64>,
}

/// Demand series after applying the configured lag. Month 0 reuses its own
/// value when lagged.
pub fn effective_demand(data: &MonthlySeries, lag_months: u8) -> Vec<f64> {
    match lag_months {
        0 => data.q_millions.clone(),
        _ => (0..data.len()).map(|t| data.q_millions[t.saturating_sub(lag_months as usize)]).collect(),
    }
}

pub fn simulate_flows(
    data: &MonthlySeries,
    flow: &FlowParams,
    fixed: &CalibFixedBlock,
    config: &CalibConfig,
) -> Result<FlowPrediction, CalibrationError> {
    if data.is_empty() {
        return Err(CalibrationError::TooFewResiduals { have: 0, need: 1 });
    }
    let fixed = fixed.effective(config);
    let demand = effective_demand(data, config.demand_lag_months);
    let n = data.len();
    let mut out = FlowPrediction {
        flows: Vec::with_capacity(n),
        levels: Vec::with_capacity(n),
        ai_inflow: Vec::with_capacity(n),
        quality: Vec::with_capacity(n),
        model_skill: Vec::with_capacity(n),
    };
    let (mut k, mut q, mut theta) = (fixed.k0, fixed.q0, fixed.theta0);
    if !(k > 0.0) {
        return Err(CalibrationError::ArchiveNotPositive(k));
    }
    for t in 0..n {
        let (h, queries) = (data.h[t], demand[t]);
        let a = accuracy(&fixed, theta, q);
        let ai = flow.alpha_a * queries * admitted(&fixed, a, config.gate_enabled);
        let inflow = flow.alpha_h * h + ai;
        let k_next = step_k_exact(k, inflow, flow.delta_k);
        out.flows.push(k_next - k);
        out.levels.push(k_next);
        out.ai_inflow.push(ai);
        out.quality.push(q);
        out.model_skill.push(theta);
        (q, theta) = advance_aux(q, theta, h, queries, k, &fixed, flow, config.gate_enabled)?;
        k = k_next;
    }
    Ok(out)
}
