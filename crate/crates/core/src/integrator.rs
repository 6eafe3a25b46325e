//! Adaptive Dormand–Prince 5(4) integration onto a uniform monthly grid.
//!
//! Steps are capped so that every integer time `0..=t_end` is hit exactly;
//! no dense output is used. Local error is controlled with the usual mixed
//! tolerance `atol + rtol * |y|` under an RMS norm.

use serde::{Deserialize, Serialize};

use crate::error::{IntegratorError, ModelError};
use crate::model::{vector_field, ModelParams, State, MIN_ARCHIVE, STATE_NAMES};

/// Slack allowed on the faces of the physical domain before a state is
/// treated as having left it. States inside the band are projected back.
pub const DOMAIN_BAND: f64 = 1e-9;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
/// Fifth-order weights; also the last row of the tableau (FSAL).
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Difference between fifth- and embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// A first-order system `dy/dt = f(t, y)` of fixed dimension.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N], ModelError>;
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], ModelError>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N], ModelError> {
        self(t, y)
    }
}

/// The five-state vector field as an [`OdeSystem`].
#[derive(Debug, Clone, Copy)]
pub struct FieldSystem<'a>(pub &'a ModelParams);

impl OdeSystem<5> for FieldSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 5]) -> Result<[f64; 5], ModelError> {
        vector_field(&State::from_array(*y), self.0).map(|d| d.to_array())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Final time in months; output is produced at every integer month.
    pub t_end: u32,
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in months; `None` means the whole span.
    pub max_step: Option<f64>,
    /// Smallest admissible step as a fraction of the span.
    pub min_step_factor: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn new(t_end: u32) -> Self {
        Self { t_end, rtol: 1e-6, atol: 1e-9, max_step: None, min_step_factor: 1e-12, max_steps: 10_000_000 }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn grid_points(&self) -> usize {
        self.t_end as usize + 1
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |m: &str| Err(IntegratorError::InvalidConfig(m.to_string()));
        if self.t_end < 1 {
            return bad("t_end must be at least 1 month (grid of at least 2 points)");
        }
        if !(self.rtol > 0.0 && self.rtol.is_finite()) || !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad("rtol and atol must be positive and finite");
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("max_step must be positive");
            }
        }
        if !(self.min_step_factor > 0.0 && self.min_step_factor < 1.0) {
            return bad("min_step_factor must lie in (0, 1)");
        }
        Ok(())
    }

    fn initial_step(&self) -> f64 {
        let span = self.t_end as f64;
        (1.0f64).min(span / 100.0).min(self.max_step.unwrap_or(span))
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::new(1000)
    }
}

/// Step counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// One Dormand–Prince advance.
#[derive(Debug, Clone, Copy)]
pub struct DopriStep<const N: usize> {
    pub y_next: [f64; N],
    /// Per-component local error estimate (fifth minus fourth order).
    pub error: [f64; N],
    /// Derivative at the new point, reusable as the next first stage.
    pub k_last: [f64; N],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Advances `y` by `h` using the derivative `k1 = f(t, y)` already in hand.
pub fn dopri_step<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    h: f64,
    k1: &[f64; N],
) -> Result<DopriStep<N>, ModelError> {
    let k2 = sys.rhs(t + C[1] * h, &axpy(y, h, &[(A2[0], k1)]))?;
    let k3 = sys.rhs(t + C[2] * h, &axpy(y, h, &[(A3[0], k1), (A3[1], &k2)]))?;
    let k4 = sys.rhs(t + C[3] * h, &axpy(y, h, &[(A4[0], k1), (A4[1], &k2), (A4[2], &k3)]))?;
    let k5 = sys.rhs(t + C[4] * h, &axpy(y, h, &[(A5[0], k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]))?;
    let k6 =
        sys.rhs(t + C[5] * h, &axpy(y, h, &[(A6[0], k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]))?;
    let y_next = axpy(y, h, &[(B[0], k1), (B[1], &k2), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)]);
    let k7 = sys.rhs(t + C[6] * h, &y_next)?;
    let mut error = [0.0; N];
    for i in 0..N {
        error[i] = h
            * (E[0] * k1[i] + E[1] * k2[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i]);
    }
    Ok(DopriStep { y_next, error, k_last: k7 })
}

/// Single step of the model from `y` at time `t`. Exposed for testing the
/// stepper in isolation.
pub fn step_once(y: &State, t: f64, h: f64, params: &ModelParams) -> Result<(State, [f64; 5]), IntegratorError> {
    if !(h > 0.0) {
        return Err(IntegratorError::InvalidConfig(format!("step size {h} must be positive")));
    }
    let sys = FieldSystem(params);
    let y0 = y.to_array();
    let k1 = sys.rhs(t, &y0).map_err(|source| IntegratorError::Model { t, source })?;
    let step = dopri_step(&sys, t, &y0, h, &k1).map_err(|source| IntegratorError::Model { t, source })?;
    Ok((State::from_array(step.y_next), step.error))
}

fn error_norm<const N: usize>(y: &[f64; N], y_next: &[f64; N], err: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let scale = cfg.atol + cfg.rtol * y[i].abs().max(y_next[i].abs());
        let r = err[i] / scale;
        sum += r * r;
    }
    let norm = (sum / N as f64).sqrt();
    if norm.is_nan() {
        f64::INFINITY
    } else {
        norm
    }
}

/// Grid output of [`integrate_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: StepStats,
}

/// Integrates a generic system over `[0, t_end]`, recording the state at
/// every integer time. `project` runs after each accepted step and may nudge
/// the state back onto its admissible set or reject it.
pub fn integrate_system<S, P, const N: usize>(
    sys: &S,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    mut project: P,
) -> Result<GridSolution<N>, IntegratorError>
where
    S: OdeSystem<N>,
    P: FnMut(f64, &mut [f64; N]) -> Result<(), IntegratorError>,
{
    cfg.validate()?;
    let span = cfg.t_end as f64;
    let h_min = cfg.min_step_factor * span;
    let h_max = cfg.max_step.unwrap_or(span);

    let mut stats = StepStats::default();
    let mut times = Vec::with_capacity(cfg.grid_points());
    let mut states = Vec::with_capacity(cfg.grid_points());

    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y).map_err(|source| IntegratorError::Model { t, source })?;
    stats.rhs_evals += 1;
    times.push(0.0);
    states.push(y);

    let mut h = cfg.initial_step();
    let mut next_grid: u32 = 1;
    let mut rejected_last = false;
    let mut last_model_error: Option<ModelError> = None;

    while next_grid <= cfg.t_end {
        if h < h_min {
            return Err(match last_model_error {
                Some(source) => IntegratorError::DomainExit { t, source },
                None => IntegratorError::StepUnderflow { t, h },
            });
        }
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(IntegratorError::TooManySteps { t, max_steps: cfg.max_steps });
        }

        let target = next_grid as f64;
        let remaining = target - t;
        let capped = h >= remaining;
        let h_step = if capped { remaining } else { h };

        let step = match dopri_step(sys, t, &y, h_step, &k1) {
            Ok(step) => {
                stats.rhs_evals += 6;
                step
            }
            Err(e) => {
                // A stage left the field's domain; retry with a smaller step.
                stats.rhs_evals += 6;
                stats.rejected += 1;
                last_model_error = Some(e);
                rejected_last = true;
                h = h_step * MIN_FACTOR;
                continue;
            }
        };

        let err = error_norm(&y, &step.y_next, &step.error, cfg);
        if err <= 1.0 {
            stats.accepted += 1;
            last_model_error = None;
            t = if capped { target } else { t + h_step };
            let mut y_new = step.y_next;
            project(t, &mut y_new)?;
            if y_new == step.y_next {
                k1 = step.k_last;
            } else {
                k1 = sys.rhs(t, &y_new).map_err(|source| IntegratorError::Model { t, source })?;
                stats.rhs_evals += 1;
            }
            y = y_new;
            if capped {
                times.push(target);
                states.push(y);
                next_grid += 1;
            }

            let mut factor =
                if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
            if rejected_last {
                factor = factor.min(1.0);
            }
            let mut h_new = h_step * factor;
            if capped && !rejected_last {
                // Landing on a grid point shortened the step; keep the
                // controller's previous proposal when it was larger.
                h_new = h_new.max(h);
            }
            h = h_new.min(h_max);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            rejected_last = true;
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h = h_step * factor;
        }
    }

    Ok(GridSolution { times, states, stats })
}

/// Model states on the integer grid `0..=t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub params: ModelParams,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }
}

/// Projects a state within [`DOMAIN_BAND`] of a face back onto the domain;
/// anything further out is a domain exit.
fn project_domain(params: &ModelParams, t: f64, y: &mut [f64; 5]) -> Result<(), IntegratorError> {
    let upper = [f64::INFINITY, 1.0, params.theta_max, f64::INFINITY, f64::INFINITY];
    for i in 0..5 {
        let v = y[i];
        let exit = || IntegratorError::DomainExit {
            t,
            source: ModelError::OutOfDomain { variable: STATE_NAMES[i], value: v },
        };
        if !v.is_finite() {
            return Err(exit());
        }
        if v < 0.0 {
            if v < -DOMAIN_BAND {
                return Err(exit());
            }
            y[i] = 0.0;
        } else if v > upper[i] {
            if v > upper[i] + DOMAIN_BAND {
                return Err(exit());
            }
            y[i] = upper[i];
        }
    }
    if y[0] < MIN_ARCHIVE {
        return Err(IntegratorError::DomainExit { t, source: ModelError::ArchiveNotPositive(y[0]) });
    }
    Ok(())
}

/// Integrates the model from `y0` on the grid `0, 1, ..., t_end`.
pub fn integrate(y0: &State, params: &ModelParams, config: &IntegratorConfig) -> Result<Trajectory, IntegratorError> {
    y0.check_domain(params, 0.0).map_err(|source| IntegratorError::DomainExit { t: 0.0, source })?;
    if !(y0.archive >= MIN_ARCHIVE) {
        return Err(IntegratorError::DomainExit { t: 0.0, source: ModelError::ArchiveNotPositive(y0.archive) });
    }
    let sys = FieldSystem(params);
    let sol = integrate_system(&sys, y0.to_array(), config, |t, y| project_domain(params, t, y))?;
    Ok(Trajectory {
        times: sol.times,
        states: sol.states.into_iter().map(State::from_array).collect(),
        params: *params,
        stats: sol.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_preset;

    fn decay(_t: f64, y: &[f64; 1]) -> Result<[f64; 1], ModelError> {
        Ok([-y[0]])
    }

    #[test]
    fn analytic_decay() {
        let cfg = IntegratorConfig::new(1);
        let sol = integrate_system(&decay, [1.0], &cfg, |_, _| Ok(())).unwrap();
        assert_eq!(sol.times, vec![0.0, 1.0]);
        let err = (sol.states[1][0] - (-1.0f64).exp()).abs();
        assert!(err <= 10.0 * (cfg.atol + cfg.rtol), "err = {err}");
    }

    #[test]
    fn zero_rhs_step_is_exact() {
        let zero = |_t: f64, _y: &[f64; 3]| -> Result<[f64; 3], ModelError> { Ok([0.0; 3]) };
        let y = [1.0, -2.0, 3.5];
        let step = dopri_step(&zero, 0.0, &y, 0.7, &[0.0; 3]).unwrap();
        assert_eq!(step.y_next, y);
        assert_eq!(step.error, [0.0; 3]);
    }

    #[test]
    fn first_order_consistency() {
        let p = load_preset("healthy_growth").unwrap();
        let f = vector_field(&p.y0, &p.params).unwrap().to_array();
        let y0 = p.y0.to_array();
        for h in [1e-3, 1e-4, 1e-5] {
            let (y1, _) = step_once(&p.y0, 0.0, h, &p.params).unwrap();
            let y1 = y1.to_array();
            for i in 0..5 {
                if f[i].abs() < 1e-12 {
                    continue;
                }
                let ratio = (y1[i] - y0[i]) / (h * f[i]);
                assert!((ratio - 1.0).abs() < 50.0 * h, "component {i}: ratio {ratio} at h {h}");
            }
        }
    }

    #[test]
    fn grid_is_exact_integers() {
        let p = load_preset("healthy_growth").unwrap();
        let traj = integrate(&p.y0, &p.params, &IntegratorConfig::new(50)).unwrap();
        assert_eq!(traj.len(), 51);
        for (i, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, i as f64);
        }
        assert_eq!(traj.states[0], p.y0);
    }

    #[test]
    fn rejects_bad_config() {
        let p = load_preset("healthy_growth").unwrap();
        let mut cfg = IntegratorConfig::new(10);
        cfg.rtol = 0.0;
        assert!(matches!(integrate(&p.y0, &p.params, &cfg), Err(IntegratorError::InvalidConfig(_))));
        assert!(matches!(
            integrate(&p.y0, &p.params, &IntegratorConfig::new(0)),
            Err(IntegratorError::InvalidConfig(_))
        ));
    }

    #[test]
    fn rejects_initial_state_outside_domain() {
        let p = load_preset("healthy_growth").unwrap();
        let mut y0 = p.y0;
        y0.quality = 1.5;
        assert!(matches!(
            integrate(&y0, &p.params, &IntegratorConfig::new(10)),
            Err(IntegratorError::DomainExit { .. })
        ));
        y0.quality = 0.5;
        y0.archive = 0.0;
        assert!(integrate(&y0, &p.params, &IntegratorConfig::new(10)).is_err());
    }

    #[test]
    fn step_budget_is_enforced() {
        let p = load_preset("healthy_growth").unwrap();
        let mut cfg = IntegratorConfig::new(100);
        cfg.max_steps = 5;
        assert!(matches!(integrate(&p.y0, &p.params, &cfg), Err(IntegratorError::TooManySteps { .. })));
    }

    #[test]
    fn stiff_problem_reports_underflow_time() {
        // Finite-time blow-up: y' = y^2 from y(0) = 1 explodes at t = 1.
        let blowup = |_t: f64, y: &[f64; 1]| -> Result<[f64; 1], ModelError> { Ok([y[0] * y[0]]) };
        let cfg = IntegratorConfig::new(2);
        let err = integrate_system(&blowup, [1.0], &cfg, |_, _| Ok(())).unwrap_err();
        let t = err.failure_time().unwrap();
        assert!(t > 0.9 && t < 1.01, "{err}");
    }
}
