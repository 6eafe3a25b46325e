//! Archive-flow calibration against monthly Wikipedia series.
//!
//! Estimates `(alpha_H, alpha_A, delta_K)` by multi-start Nelder-Mead on a
//! MAD-scaled soft-l1 objective, with the auxiliary dynamics held at a fixed
//! block. See [`forward`] for the discrete model.

pub mod forward;
pub mod loss;
pub mod optimizer;
mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CalibrationError, SeriesError};
use crate::series::{EraData, EraWindow, KmaxMultiplier, MonthlySeries};

pub use forward::{
    advance_aux, effective_demand, simulate_flows, step_k_exact, FlowParams, FlowPrediction, FLOW_BOUNDS, FLOW_NAMES,
};
pub use loss::{mad_scale, rmse, soft_l1_objective, soft_l1_scaled};
pub use optimizer::{nelder_mead, BoxMap, NelderMeadOptions, NelderMeadResult};
pub use report::{render_fit_table, render_variant_matrix};

/// Shortest series accepted by [`fit`].
pub const MIN_MONTHS: usize = 12;

/// Auxiliary dynamics held fixed during estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibFixedBlock {
    pub q_h: f64,
    pub delta_q: f64,
    pub theta_max: f64,
    pub theta_mid: f64,
    pub eta_sup: f64,
    #[serde(rename = "eta_RLHF")]
    pub eta_rlhf: f64,
    #[serde(rename = "Q_half")]
    pub q_half: f64,
    pub a_0: f64,
    pub kappa_gate: f64,
    pub q0: f64,
    pub theta0: f64,
    /// Scaling-law reference stock; [`CalibFixedBlock::effective`] rederives
    /// it from `history_total` and the configured multiplier.
    #[serde(rename = "K_max")]
    pub k_max: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub history_total: f64,
}

impl CalibFixedBlock {
    pub fn for_era(k0: f64, history_total: f64) -> Self {
        Self {
            q_h: 0.85,
            delta_q: 5e-4,
            theta_max: 1.0,
            theta_mid: 0.0,
            eta_sup: 0.02,
            eta_rlhf: 0.05,
            q_half: 5000.0,
            a_0: 0.60,
            kappa_gate: 10.0,
            q0: 0.85,
            theta0: 0.3,
            k_max: KmaxMultiplier::Baseline.value() * history_total,
            k0,
            history_total,
        }
    }

    pub fn from_era(era: &EraData) -> Self {
        Self::for_era(era.k0, era.history_total)
    }

    /// Copy with the variant overrides of `config` applied.
    pub fn effective(&self, config: &CalibConfig) -> Self {
        let mut out = *self;
        out.k_max = config.kmax_multiplier.value() * self.history_total;
        if let Some(q_half) = config.q_half_override {
            out.q_half = q_half;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    /// Monthly increments `K_{t+1} - K_t`.
    #[default]
    Flow,
    /// Cumulative stock from `K0`.
    Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibConfig {
    pub fit_target: FitTarget,
    pub gate_enabled: bool,
    pub demand_lag_months: u8,
    pub kmax_multiplier: KmaxMultiplier,
    #[serde(rename = "Q_half_override")]
    pub q_half_override: Option<f64>,
    #[serde(rename = "joint_delta_K")]
    pub joint_delta_k: bool,
    pub restarts: usize,
    pub rng_seed: u64,
    pub max_iterations: usize,
    pub diameter_tol: f64,
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            fit_target: FitTarget::Flow,
            gate_enabled: true,
            demand_lag_months: 0,
            kmax_multiplier: KmaxMultiplier::Baseline,
            q_half_override: None,
            joint_delta_k: false,
            restarts: 16,
            rng_seed: 20251130,
            max_iterations: 2000,
            diameter_tol: 1e-10,
        }
    }
}

impl CalibConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.restarts == 0 {
            return Err(CalibrationError::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.demand_lag_months > 1 {
            return Err(CalibrationError::InvalidConfig(format!(
                "demand_lag_months must be 0 or 1, got {}",
                self.demand_lag_months
            )));
        }
        if let Some(q) = self.q_half_override {
            if !(q > 0.0 && q.is_finite()) {
                return Err(CalibrationError::InvalidConfig(format!("Q_half_override must be positive, got {q}")));
            }
        }
        if self.max_iterations == 0 || !(self.diameter_tol > 0.0) {
            return Err(CalibrationError::InvalidConfig(
                "optimizer needs max_iterations >= 1 and diameter_tol > 0".into(),
            ));
        }
        Ok(())
    }

    fn optimizer_options(&self) -> NelderMeadOptions {
        NelderMeadOptions { max_iterations: self.max_iterations, diameter_tol: self.diameter_tol, ..Default::default() }
    }
}

/// One local optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRow {
    pub index: usize,
    pub seed_point: Vec<f64>,
    pub converged_point: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: String,
    pub era: EraWindow,
    pub flow_params: FlowParams,
    pub loss: f64,
    /// Root-mean-square flow residual, pages per month.
    pub rmse_flow: f64,
    /// Root-mean-square level residual, pages.
    pub rmse_level: f64,
    /// Rows in restart order, points as `(alpha_H, alpha_A, delta_K)`.
    pub restart_table: Vec<RestartRow>,
    pub config: CalibConfig,
}

/// Residuals and losses of one parameter set on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub loss: f64,
    pub rmse_flow: f64,
    pub rmse_level: f64,
    pub flow_residuals: Vec<f64>,
    pub level_residuals: Vec<f64>,
}

fn masked(values: &[f64], mask: &[bool]) -> Vec<f64> {
    values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect()
}

/// Residual scale used by [`fit`]: the MAD scale of the observed target over
/// observed months, i.e. of the residuals of the zero-inflow reference. It is
/// frozen for the whole fit; a scale recomputed from the current residuals
/// would make the soft-l1 loss invariant to their overall size.
pub fn target_scale(data: &MonthlySeries, fixed: &CalibFixedBlock, target: FitTarget) -> f64 {
    let obs = match target {
        FitTarget::Flow => masked(&data.delta_k, &data.observed),
        FitTarget::Level => masked(&data.cumulative_levels(fixed.k0), &data.observed),
    };
    mad_scale(&obs)
}

/// Loss under `config.fit_target` with residual scale `scale`, plus both RMSEs,
/// over observed months.
pub fn evaluate(
    data: &MonthlySeries,
    flow: &FlowParams,
    fixed: &CalibFixedBlock,
    config: &CalibConfig,
    scale: f64,
) -> Result<FitDiagnostics, CalibrationError> {
    let pred = simulate_flows(data, flow, fixed, config)?;
    let flow_r = masked(&loss::residuals(&pred.flows, &data.delta_k)?, &data.observed);
    let level_r = masked(&loss::residuals(&pred.levels, &data.cumulative_levels(fixed.k0))?, &data.observed);
    let r = match config.fit_target {
        FitTarget::Flow => &flow_r,
        FitTarget::Level => &level_r,
    };
    if r.len() < loss::MIN_RESIDUALS {
        return Err(CalibrationError::TooFewResiduals { have: r.len(), need: loss::MIN_RESIDUALS });
    }
    let loss = soft_l1_scaled(r, scale);
    Ok(FitDiagnostics {
        loss,
        rmse_flow: rmse(&flow_r),
        rmse_level: rmse(&level_r),
        flow_residuals: flow_r,
        level_residuals: level_r,
    })
}

fn objective(
    data: &MonthlySeries,
    flow: &FlowParams,
    fixed: &CalibFixedBlock,
    config: &CalibConfig,
    scale: f64,
) -> f64 {
    evaluate(data, flow, fixed, config, scale).map(|d| d.loss).unwrap_or(f64::INFINITY)
}

/// Seed points drawn log-uniformly inside `bounds`, one row per restart.
pub fn seed_points(bounds: &[(f64, f64)], restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    let u: f64 = rng.random();
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
                })
                .collect()
        })
        .collect()
}

/// Runs every restart in parallel and returns rows in restart order plus the
/// index of the best row (lowest loss, ties to the lower index).
fn multi_start<F>(
    f: F,
    bounds: &[(f64, f64)],
    config: &CalibConfig,
) -> Result<(Vec<RestartRow>, usize), CalibrationError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let map = BoxMap::new(bounds);
    let opts = config.optimizer_options();
    let seeds = seed_points(bounds, config.restarts, config.rng_seed);
    let rows: Vec<RestartRow> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(index, seed_point)| {
            let r = nelder_mead(&f, &seed_point, &map, &opts);
            RestartRow {
                index,
                seed_point,
                converged_point: r.x,
                loss: r.f,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        })
        .collect();

    let best = rows
        .iter()
        .filter(|r| r.converged && r.loss.is_finite())
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.index.cmp(&b.index)))
        .map(|r| r.index);
    match best {
        Some(i) => Ok((rows, i)),
        None => {
            let status = rows
                .iter()
                .map(|r| {
                    format!("#{} loss={:.6e} iterations={} converged={}", r.index, r.loss, r.iterations, r.converged)
                })
                .collect::<Vec<_>>()
                .join("; ");
            Err(CalibrationError::AllRestartsFailed { restarts: rows.len(), status })
        }
    }
}

fn check_length(data: &MonthlySeries) -> Result<(), CalibrationError> {
    data.validate()?;
    let have = data.observed.iter().filter(|&&o| o).count();
    if have < MIN_MONTHS {
        return Err(SeriesError::Insufficient { have, need: MIN_MONTHS }.into());
    }
    Ok(())
}

fn window_of(data: &MonthlySeries) -> Result<EraWindow, CalibrationError> {
    Ok(EraWindow::new(data.months[0], data.months[data.len() - 1], "custom")?)
}

/// Multi-start estimate of the flow triplet on one series.
pub fn fit(data: &MonthlySeries, fixed: &CalibFixedBlock, config: &CalibConfig) -> Result<FitResult, CalibrationError> {
    check_length(data)?;
    if !(fixed.k0 > 0.0) {
        return Err(CalibrationError::ArchiveNotPositive(fixed.k0));
    }
    let scale = target_scale(data, fixed, config.fit_target);
    let (rows, best) = multi_start(
        |x: &[f64]| objective(data, &FlowParams::from_array([x[0], x[1], x[2]]), fixed, config, scale),
        &FLOW_BOUNDS,
        config,
    )?;
    let p = &rows[best].converged_point;
    let flow_params = FlowParams::new(p[0], p[1], p[2])?;
    let diag = evaluate(data, &flow_params, fixed, config, scale)?;
    Ok(FitResult {
        variant: "baseline".into(),
        era: window_of(data)?,
        flow_params,
        loss: rows[best].loss,
        rmse_flow: diag.rmse_flow,
        rmse_level: diag.rmse_level,
        restart_table: rows,
        config: *config,
    })
}

/// [`fit`] on an assembled era, labelled with the era window.
pub fn fit_era(era: &EraData, config: &CalibConfig) -> Result<FitResult, CalibrationError> {
    let mut r = fit(&era.series, &CalibFixedBlock::from_era(era), config)?;
    r.era = era.window.clone();
    Ok(r)
}

/// Outcome of the shared-`delta_K` fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFitResult {
    pub pre: FitResult,
    pub post: FitResult,
    #[serde(rename = "delta_K")]
    pub delta_k: f64,
    /// Sum of the two eras' losses.
    pub loss: f64,
    /// Points as `(alpha_H pre, alpha_A pre, alpha_H post, alpha_A post, delta_K)`.
    pub restart_table: Vec<RestartRow>,
}

const JOINT_BOUNDS: [(f64, f64); 5] = [FLOW_BOUNDS[0], FLOW_BOUNDS[1], FLOW_BOUNDS[0], FLOW_BOUNDS[1], FLOW_BOUNDS[2]];

/// Fits both eras at once with one `delta_K`.
pub fn fit_joint_delta(
    pre: (&MonthlySeries, &CalibFixedBlock),
    post: (&MonthlySeries, &CalibFixedBlock),
    config: &CalibConfig,
) -> Result<JointFitResult, CalibrationError> {
    let ((d_pre, f_pre), (d_post, f_post)) = (pre, post);
    check_length(d_pre)?;
    check_length(d_post)?;
    let s_pre = target_scale(d_pre, f_pre, config.fit_target);
    let s_post = target_scale(d_post, f_post, config.fit_target);
    let split = |x: &[f64]| (FlowParams::from_array([x[0], x[1], x[4]]), FlowParams::from_array([x[2], x[3], x[4]]));
    let (rows, best) = multi_start(
        |x: &[f64]| {
            let (a, b) = split(x);
            objective(d_pre, &a, f_pre, config, s_pre) + objective(d_post, &b, f_post, config, s_post)
        },
        &JOINT_BOUNDS,
        config,
    )?;
    let (a, b) = split(&rows[best].converged_point);
    let mut cfg = *config;
    cfg.joint_delta_k = true;
    let era_result = |data: &MonthlySeries,
                      fixed: &CalibFixedBlock,
                      flow: FlowParams,
                      scale: f64|
     -> Result<FitResult, CalibrationError> {
        let flow = FlowParams::new(flow.alpha_h, flow.alpha_a, flow.delta_k)?;
        let diag = evaluate(data, &flow, fixed, &cfg, scale)?;
        Ok(FitResult {
            variant: "joint_delta_K".into(),
            era: window_of(data)?,
            flow_params: flow,
            loss: diag.loss,
            rmse_flow: diag.rmse_flow,
            rmse_level: diag.rmse_level,
            restart_table: Vec::new(),
            config: cfg,
        })
    };
    Ok(JointFitResult {
        pre: era_result(d_pre, f_pre, a, s_pre)?,
        post: era_result(d_post, f_post, b, s_post)?,
        delta_k: a.delta_k,
        loss: rows[best].loss,
        restart_table: rows,
    })
}

/// Robustness variants, each a single change from the baseline config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    LevelTarget,
    GateOff,
    DemandLag,
    KmaxWide,
    QHalf2500,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Baseline,
        Variant::LevelTarget,
        Variant::GateOff,
        Variant::DemandLag,
        Variant::KmaxWide,
        Variant::QHalf2500,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::LevelTarget => "level_target",
            Variant::GateOff => "gate_off",
            Variant::DemandLag => "demand_lag_1",
            Variant::KmaxWide => "kmax_x1.50",
            Variant::QHalf2500 => "q_half_2500",
        }
    }

    pub fn apply(self, base: &CalibConfig) -> CalibConfig {
        let mut c = *base;
        match self {
            Variant::Baseline => {}
            Variant::LevelTarget => c.fit_target = FitTarget::Level,
            Variant::GateOff => c.gate_enabled = false,
            Variant::DemandLag => c.demand_lag_months = 1,
            Variant::KmaxWide => c.kmax_multiplier = KmaxMultiplier::Wide,
            Variant::QHalf2500 => c.q_half_override = Some(2500.0),
        }
        c
    }
}

/// A matrix cell: the fit, or why it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCell {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl VariantCell {
    fn from_result(r: Result<FitResult, CalibrationError>) -> Self {
        match r {
            Ok(r) => Self { result: Some(r), error: None },
            Err(e) => Self { result: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: String,
    pub pre: VariantCell,
    pub post: VariantCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMatrix {
    pub rows: Vec<VariantRow>,
    pub joint: Option<JointFitResult>,
    pub joint_error: Option<String>,
}

impl VariantMatrix {
    pub fn row(&self, variant: Variant) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.variant == variant.name())
    }
}

/// Runs every [`Variant`] on both eras plus the joint-`delta_K` fit. Failed
/// cells are recorded rather than aborting the matrix.
pub fn run_variant_matrix(
    pre: &EraData,
    post: &EraData,
    base: &CalibConfig,
) -> Result<VariantMatrix, CalibrationError> {
    base.validate()?;
    let cell = |era: &EraData, v: Variant| {
        VariantCell::from_result(fit_era(era, &v.apply(base)).map(|mut r| {
            r.variant = v.name().into();
            r
        }))
    };
    let rows: Vec<VariantRow> = Variant::ALL
        .par_iter()
        .map(|&v| {
            let (pre_cell, post_cell) = rayon::join(|| cell(pre, v), || cell(post, v));
            VariantRow { variant: v.name().into(), pre: pre_cell, post: post_cell }
        })
        .collect();
    let (fp, fq) = (CalibFixedBlock::from_era(pre), CalibFixedBlock::from_era(post));
    let (joint, joint_error) = match fit_joint_delta((&pre.series, &fp), (&post.series, &fq), base) {
        Ok(mut j) => {
            j.pre.era = pre.window.clone();
            j.post.era = post.window.clone();
            (Some(j), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(VariantMatrix { rows, joint, joint_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::YearMonth;

    fn synthetic(n: usize) -> (MonthlySeries, CalibFixedBlock) {
        let fixed = CalibFixedBlock::for_era(1.0e5, 4.0e5);
        let h: Vec<f64> = (0..n).map(|t| 3000.0 + 800.0 * (t as f64 * 0.9).sin()).collect();
        let q: Vec<f64> = (0..n).map(|t| 2000.0 + 60.0 * t as f64 + 500.0 * (t as f64 * 0.5).cos()).collect();
        let shell = MonthlySeries::from_start(YearMonth::ym(2020, 3), vec![0.0; n], h, q).unwrap();
        let truth = FlowParams::new(0.7, 0.3, 0.004).unwrap();
        let pred = simulate_flows(&shell, &truth, &fixed, &CalibConfig::default()).unwrap();
        let mut data = shell;
        data.delta_k = pred.flows;
        (data, fixed)
    }

    #[test]
    fn fixed_block_defaults() {
        let f = CalibFixedBlock::for_era(6.0e6, 7.0e6);
        assert_eq!((f.q_h, f.delta_q, f.theta_max, f.theta_mid), (0.85, 5e-4, 1.0, 0.0));
        assert_eq!((f.eta_sup, f.eta_rlhf, f.q_half, f.a_0, f.kappa_gate), (0.02, 0.05, 5000.0, 0.60, 10.0));
        assert_eq!((f.q0, f.theta0, f.k0), (0.85, 0.3, 6.0e6));
        assert_eq!(f.k_max, 1.25 * 7.0e6);
        let wide =
            CalibConfig { kmax_multiplier: KmaxMultiplier::Wide, q_half_override: Some(2500.0), ..Default::default() };
        let e = f.effective(&wide);
        assert_eq!((e.k_max, e.q_half), (1.5 * 7.0e6, 2500.0));
    }

    #[test]
    fn config_validation() {
        assert!(CalibConfig::default().validate().is_ok());
        assert!(CalibConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(CalibConfig { demand_lag_months: 2, ..Default::default() }.validate().is_err());
        assert!(CalibConfig { q_half_override: Some(-1.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn seeds_are_log_uniform_and_reproducible() {
        let a = seed_points(&FLOW_BOUNDS, 400, 7);
        assert_eq!(a, seed_points(&FLOW_BOUNDS, 400, 7));
        assert_ne!(a, seed_points(&FLOW_BOUNDS, 400, 8));
        for p in &a {
            for (v, (lo, hi)) in p.iter().zip(FLOW_BOUNDS) {
                assert!((lo..=hi).contains(v));
            }
        }
        // log10 of alpha_H spans [-8, 1]; a log-uniform draw puts ~2/9 of
        // points below 1e-6.
        let small = a.iter().filter(|p| p[0] < 1e-6).count() as f64 / a.len() as f64;
        assert!((small - 2.0 / 9.0).abs() < 0.08, "{small}");
    }

    #[test]
    fn noiseless_recovery() {
        let (data, fixed) = synthetic(33);
        let r = fit(&data, &fixed, &CalibConfig { restarts: 4, ..Default::default() }).unwrap();
        let got = r.flow_params.to_array();
        for (g, t) in got.iter().zip([0.7, 0.3, 0.004]) {
            assert!((g / t - 1.0).abs() < 1e-3, "{got:?}");
        }
        let best = r.restart_table.iter().filter(|x| x.converged).map(|x| x.loss).fold(f64::INFINITY, f64::min);
        assert_eq!(r.loss, best);
    }

    #[test]
    fn short_series_rejected() {
        let (data, fixed) = synthetic(11);
        let err = fit(&data, &fixed, &CalibConfig::default()).unwrap_err();
        assert!(matches!(err, CalibrationError::Series(SeriesError::Insufficient { have: 11, need: 12 })));
    }

    #[test]
    fn non_convergence_on_all_restarts_is_an_error() {
        let (data, fixed) = synthetic(20);
        let cfg = CalibConfig { restarts: 2, max_iterations: 3, ..Default::default() };
        match fit(&data, &fixed, &cfg).unwrap_err() {
            CalibrationError::AllRestartsFailed { restarts, status } => {
                assert_eq!(restarts, 2);
                assert!(status.contains("#0") && status.contains("#1"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn variants_change_one_field() {
        let base = CalibConfig::default();
        assert_eq!(Variant::Baseline.apply(&base), base);
        assert_eq!(Variant::LevelTarget.apply(&base).fit_target, FitTarget::Level);
        assert!(!Variant::GateOff.apply(&base).gate_enabled);
        assert_eq!(Variant::DemandLag.apply(&base).demand_lag_months, 1);
        assert_eq!(Variant::KmaxWide.apply(&base).kmax_multiplier, KmaxMultiplier::Wide);
        assert_eq!(Variant::QHalf2500.apply(&base).q_half_override, Some(2500.0));
    }
}
