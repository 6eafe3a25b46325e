//! Five-state vector field and its auxiliary response functions.
//!
//! State variables are archive size `K`, archive quality `q`, model skill
//! `theta`, aggregate human skill `H` and query volume `Q`. Every function in
//! this module is pure; [`vector_field`] is assembled from the exported
//! auxiliary functions so that recomposing it by hand gives the same bits.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Exponent arguments are clamped to this magnitude before `exp`.
pub const EXP_CLAMP: f64 = 700.0;

/// Archive sizes below this floor are outside the domain of the vector field.
pub const MIN_ARCHIVE: f64 = 1e-12;

#[inline]
pub(crate) fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// `1 / (1 + e^{-x})` with the exponent clamped.
#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + clamped_exp(-x))
}

/// Scaling-law target `theta_max * ln(1+K)/ln(1+K_max) * q`.
#[inline]
pub fn scaling_target(k: f64, q: f64, theta_max: f64, k_max: f64) -> f64 {
    theta_max * (k.ln_1p() / k_max.ln_1p()) * q
}

/// Feedback pull toward the frontier, `Q/(Q+Q_half) * (theta_max - theta)`.
#[inline]
pub fn feedback_gain(theta: f64, queries: f64, theta_max: f64, q_half: f64) -> f64 {
    queries / (queries + q_half) * (theta_max - theta)
}

/// Admissible range of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Any finite value.
    Finite,
    /// `>= 0`.
    NonNegative,
    /// `> 0`.
    Positive,
    /// `[0, 1]`.
    Unit,
}

impl Bound {
    fn admits(self, v: f64) -> bool {
        v.is_finite()
            && match self {
                Bound::Finite => true,
                Bound::NonNegative => v >= 0.0,
                Bound::Positive => v > 0.0,
                Bound::Unit => (0.0..=1.0).contains(&v),
            }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Bound::Finite => "finite",
            Bound::NonNegative => ">= 0",
            Bound::Positive => "> 0",
            Bound::Unit => "in [0, 1]",
        }
    }
}

macro_rules! param_values {
    ($( $(#[$doc:meta])* $field:ident => $name:literal, $bound:expr; )*) => {
        /// Raw, unvalidated parameter record. Field names serialize to the
        /// symbol names used in scenario files and the HTTP API.
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ParamValues {
            $( $(#[$doc])* #[serde(rename = $name)] pub $field: f64, )*
        }

        impl ParamValues {
            /// Serialized field names, in declaration order.
            pub const FIELD_NAMES: &'static [&'static str] = &[$($name),*];

            /// Bound for the named field.
            pub fn bound_of(name: &str) -> Option<Bound> {
                match name {
                    $( $name => Some($bound), )*
                    _ => None,
                }
            }

            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $( $name => Some(self.$field), )*
                    _ => None,
                }
            }

            /// Sets a field by its serialized name. Bounds are not checked
            /// here; they are checked when the record is validated.
            pub fn set(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
                match name {
                    $( $name => { self.$field = value; Ok(()) } )*
                    _ => Err(ModelError::UnknownParameter(name.to_string())),
                }
            }

            /// `(name, value)` pairs in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, f64)> {
                vec![$( ($name, self.$field) ),*]
            }

            fn validate(&self) -> Result<(), ModelError> {
                $(
                    if !$bound.admits(self.$field) {
                        return Err(ModelError::InvalidParameter {
                            field: $name,
                            value: self.$field,
                            bound: $bound.describe(),
                        });
                    }
                )*
                Ok(())
            }
        }
    };
}

param_values! {
    /// Archive items per unit human skill per month.
    alpha_h => "alpha_H", Bound::NonNegative;
    /// Archive items per admitted AI answer per month.
    alpha_a => "alpha_A", Bound::NonNegative;
    /// Archive obsolescence rate.
    delta_k => "delta_K", Bound::NonNegative;
    /// Quality of human contributions.
    q_h => "q_H", Bound::Unit;
    /// Spontaneous quality drift.
    delta_q => "delta_q", Bound::NonNegative;
    eta_sup => "eta_sup", Bound::NonNegative;
    eta_rlhf => "eta_RLHF", Bound::NonNegative;
    theta_max => "theta_max", Bound::Positive;
    theta_mid => "theta_mid", Bound::Finite;
    /// Reference corpus size of the scaling law.
    k_max => "K_max", Bound::Positive;
    q_half => "Q_half", Bound::Positive;
    beta_k => "beta_K", Bound::NonNegative;
    beta_a => "beta_A", Bound::NonNegative;
    gamma_h => "gamma_H", Bound::NonNegative;
    h_inf => "H_inf", Bound::Positive;
    /// Hill exponent of the human ceiling.
    hill_beta => "hill_beta", Bound::Positive;
    k_half => "K_half", Bound::Positive;
    q_sat => "Q_sat", Bound::Positive;
    xi_0 => "xi_0", Bound::NonNegative;
    kappa_h => "kappa_H", Bound::NonNegative;
    t_difficulty => "T_difficulty", Bound::NonNegative;
    rho_q => "rho_Q", Bound::NonNegative;
    a_0 => "a_0", Bound::Unit;
    kappa_gate => "kappa_gate", Bound::NonNegative;
}

/// A parameter record that passed validation. Construction is the only place
/// bounds are checked; evaluation never re-validates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ModelParams(ParamValues);

impl ModelParams {
    pub fn new(values: ParamValues) -> Result<Self, ModelError> {
        values.validate()?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &ParamValues {
        &self.0
    }

    /// Applies `edit` to a copy of the values and re-validates.
    pub fn with(&self, edit: impl FnOnce(&mut ParamValues)) -> Result<Self, ModelError> {
        let mut values = self.0;
        edit(&mut values);
        Self::new(values)
    }

    /// Copy with one field replaced by name.
    pub fn with_field(&self, name: &str, value: f64) -> Result<Self, ModelError> {
        let mut values = self.0;
        values.set(name, value)?;
        Self::new(values)
    }

    /// LLM skill curve `sigma(theta)`.
    #[inline]
    pub fn sigma(&self, theta: f64) -> f64 {
        logistic(theta - self.theta_mid)
    }

    /// Answer accuracy `a = sigma(theta) * q`.
    #[inline]
    pub fn answer_accuracy(&self, theta: f64, q: f64) -> f64 {
        self.sigma(theta) * q
    }

    /// Admitted share of AI output at accuracy `a`.
    #[inline]
    pub fn gate(&self, a: f64) -> f64 {
        logistic(self.kappa_gate * (a - self.a_0))
    }

    #[inline]
    pub fn theta_star(&self, k: f64, q: f64) -> f64 {
        scaling_target(k, q, self.theta_max, self.k_max)
    }

    #[inline]
    pub fn rlhf_gain(&self, theta: f64, queries: f64) -> f64 {
        feedback_gain(theta, queries, self.theta_max, self.q_half)
    }

    /// Hill-form human skill ceiling. `(qK)^beta` is taken as 0 at `qK <= 0`.
    #[inline]
    pub fn human_ceiling(&self, k: f64, q: f64) -> f64 {
        let x = q * k;
        if x <= 0.0 {
            return 0.0;
        }
        // Same as x^b / (K_half^b + x^b), but each operation is monotone in x
        // so the result is too, down to the last bit.
        self.h_inf / (1.0 + (self.k_half / x).powf(self.hill_beta))
    }

    #[inline]
    pub fn tutor_saturation(&self, queries: f64) -> f64 {
        queries / (queries + self.q_sat)
    }

    #[inline]
    pub fn baseline_query_rate(&self, h: f64) -> f64 {
        self.xi_0 * (1.0 + self.t_difficulty) * clamped_exp(-self.kappa_h * h)
    }
}

impl Deref for ModelParams {
    type Target = ParamValues;

    fn deref(&self) -> &ParamValues {
        &self.0
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let values = ParamValues::deserialize(de)?;
        ModelParams::new(values).map_err(serde::de::Error::custom)
    }
}

/// Point in the five-dimensional state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "K")]
    pub archive: f64,
    #[serde(rename = "q")]
    pub quality: f64,
    #[serde(rename = "theta")]
    pub model_skill: f64,
    #[serde(rename = "H")]
    pub human_skill: f64,
    #[serde(rename = "Q")]
    pub queries: f64,
}

/// Names of the state components, in array order.
pub const STATE_NAMES: [&str; 5] = ["K", "q", "theta", "H", "Q"];

impl State {
    pub const fn new(archive: f64, quality: f64, model_skill: f64, human_skill: f64, queries: f64) -> Self {
        Self { archive, quality, model_skill, human_skill, queries }
    }

    /// Initial state shared by every built-in scenario.
    pub const REFERENCE: State = State::new(100.0, 0.5, 0.3, 10.0, 50.0);

    pub fn to_array(self) -> [f64; 5] {
        [self.archive, self.quality, self.model_skill, self.human_skill, self.queries]
    }

    pub fn from_array(y: [f64; 5]) -> Self {
        Self::new(y[0], y[1], y[2], y[3], y[4])
    }

    /// Checks membership in the physical domain, allowing `band` of slack on
    /// every face.
    pub fn check_domain(&self, params: &ModelParams, band: f64) -> Result<(), ModelError> {
        let y = self.to_array();
        let upper = [f64::INFINITY, 1.0, params.theta_max, f64::INFINITY, f64::INFINITY];
        for i in 0..5 {
            let v = y[i];
            if !v.is_finite() || v < -band || v > upper[i] + band {
                return Err(ModelError::OutOfDomain { variable: STATE_NAMES[i], value: v });
            }
        }
        Ok(())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[K={}, q={}, theta={}, H={}, Q={}]",
            self.archive, self.quality, self.model_skill, self.human_skill, self.queries
        )
    }
}

/// Time derivative of a [`State`], per month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    #[serde(rename = "dK")]
    pub archive: f64,
    #[serde(rename = "dq")]
    pub quality: f64,
    #[serde(rename = "dtheta")]
    pub model_skill: f64,
    #[serde(rename = "dH")]
    pub human_skill: f64,
    #[serde(rename = "dQ")]
    pub queries: f64,
}

impl Derivative {
    pub fn to_array(self) -> [f64; 5] {
        [self.archive, self.quality, self.model_skill, self.human_skill, self.queries]
    }
}

/// Right-hand side of the five coupled equations.
pub fn vector_field(state: &State, params: &ModelParams) -> Result<Derivative, ModelError> {
    let State { archive: k, quality: q, model_skill: theta, human_skill: h, queries } = *state;
    if !(k >= MIN_ARCHIVE) {
        return Err(ModelError::ArchiveNotPositive(k));
    }

    let a = params.answer_accuracy(theta, q);
    let human_inflow = params.alpha_h * h;
    let ai_inflow = params.alpha_a * queries * params.gate(a);

    let d = Derivative {
        archive: human_inflow + ai_inflow - params.delta_k * k,
        quality: (human_inflow / k) * (params.q_h - q) + (ai_inflow / k) * (a - q) - params.delta_q * q,
        model_skill: params.eta_sup * (params.theta_star(k, q) - theta)
            + params.eta_rlhf * params.rlhf_gain(theta, queries),
        human_skill: params.beta_k * (params.human_ceiling(k, q) - h)
            + params.beta_a * a * params.tutor_saturation(queries)
            - params.gamma_h * h,
        queries: params.baseline_query_rate(h) - params.rho_q * queries,
    };

    for (name, v) in ["dK", "dq", "dtheta", "dH", "dQ"].into_iter().zip(d.to_array()) {
        if !v.is_finite() {
            return Err(ModelError::NonFinite { component: name, value: v });
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_preset;

    fn healthy() -> ModelParams {
        load_preset("healthy_growth").unwrap().params
    }

    #[test]
    fn sigma_midpoint_and_saturation() {
        let p = healthy();
        assert_eq!(p.sigma(p.theta_mid), 0.5);
        assert!((p.sigma(p.theta_mid + 50.0) - 1.0).abs() <= 1e-15);
        // 1/(1+e^{-1})
        assert!((p.sigma(p.theta_mid + 1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn accuracy_examples() {
        let p = healthy();
        assert_eq!(p.answer_accuracy(3.0, 0.0), 0.0);
        assert_eq!(p.answer_accuracy(p.theta_mid, 1.0), 0.5);
        // sigma(0.3) * 0.5 with theta_mid = 0
        assert!((p.answer_accuracy(0.3, 0.5) - 0.287_221_258_405_829_5).abs() < 1e-15);
    }

    #[test]
    fn gate_examples() {
        let p = healthy();
        assert_eq!(p.gate(p.a_0), 0.5);
        let flat = p.with(|v| v.kappa_gate = 0.0).unwrap();
        for a in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(flat.gate(a), 0.5);
        }
        let sharp = p
            .with(|v| {
                v.a_0 = 0.5;
                v.kappa_gate = 10.0;
            })
            .unwrap();
        // 1/(1+e^{-4})
        assert!((sharp.gate(0.9) - 0.982_013_790_037_908_5).abs() < 1e-15);
    }

    #[test]
    fn theta_star_examples() {
        let p = healthy().with(|v| v.theta_max = 1.0).unwrap();
        assert_eq!(p.theta_star(0.0, 0.7), 0.0);
        assert_eq!(p.theta_star(p.k_max, 1.0), p.theta_max);
        assert_eq!(p.theta_star(p.k_max, 0.5), 0.5);
    }

    #[test]
    fn rlhf_gain_examples() {
        let p = healthy();
        assert_eq!(p.rlhf_gain(0.2, 0.0), 0.0);
        assert_eq!(p.rlhf_gain(p.theta_max, 1234.0), 0.0);
        assert_eq!(p.rlhf_gain(0.2, p.q_half), (p.theta_max - 0.2) / 2.0);
    }

    #[test]
    fn human_ceiling_examples() {
        let p = healthy();
        assert_eq!(p.human_ceiling(0.0, 0.5), 0.0);
        assert_eq!(p.human_ceiling(100.0, 0.0), 0.0);
        assert!((p.human_ceiling(p.k_half, 1.0) - p.h_inf / 2.0).abs() < 1e-12);
        let mm = p.with(|v| v.hill_beta = 1.0).unwrap();
        assert!((mm.human_ceiling(3.0 * mm.k_half, 1.0) - 0.75 * mm.h_inf).abs() < 1e-12);
    }

    #[test]
    fn tutor_and_query_rate_examples() {
        let p = healthy();
        assert_eq!(p.tutor_saturation(0.0), 0.0);
        assert_eq!(p.tutor_saturation(p.q_sat), 0.5);
        assert_eq!(p.tutor_saturation(3.0 * p.q_sat), 0.75);
        assert_eq!(p.baseline_query_rate(0.0), 22.0);
        let flat = p.with(|v| v.kappa_h = 0.0).unwrap();
        assert_eq!(flat.baseline_query_rate(0.0), flat.baseline_query_rate(80.0));
    }

    #[test]
    fn extreme_exponents_stay_finite() {
        let p = load_preset("oscillations").unwrap().params;
        assert!(clamped_exp(1e6).is_finite());
        assert!(p.baseline_query_rate(-500.0).is_finite());
        assert!(p.baseline_query_rate(1e6) < 1e-290);
        assert!(p.with(|v| v.kappa_gate = 1e9).unwrap().gate(0.0).is_finite());
    }

    #[test]
    fn zero_archive_is_a_domain_error() {
        let p = healthy();
        let s = State::new(0.0, 0.5, 0.3, 10.0, 50.0);
        assert!(matches!(vector_field(&s, &p), Err(ModelError::ArchiveNotPositive(_))));
        let s = State::new(1e-13, 0.5, 0.3, 10.0, 50.0);
        assert!(vector_field(&s, &p).is_err());
    }

    #[test]
    fn no_llm_preset_has_no_ai_terms() {
        let p = load_preset("no_llms").unwrap().params;
        let s = State::new(250.0, 0.4, 0.2, 12.0, 0.0);
        let d = vector_field(&s, &p).unwrap();
        assert_eq!(d.archive, p.alpha_h * s.human_skill - p.delta_k * s.archive);
        assert_eq!(d.queries, -p.rho_q * s.queries);
        assert_eq!(d.model_skill, 0.0);
    }

    #[test]
    fn human_skill_balance_point() {
        let p = healthy();
        let (k, q, theta) = (400.0, 0.6, 0.4);
        let queries = 120.0;
        let a = p.answer_accuracy(theta, q);
        let tutoring = p.beta_a * a * p.tutor_saturation(queries);
        // Solve beta_K (Hmax - H) + tutoring - gamma_H H = 0 for H.
        let h = (p.beta_k * p.human_ceiling(k, q) + tutoring) / (p.beta_k + p.gamma_h);
        let d = vector_field(&State::new(k, q, theta, h, queries), &p).unwrap();
        assert!(d.human_skill.abs() < 1e-14);
    }

    #[test]
    fn validation_names_the_field() {
        let mut v = *healthy().values();
        v.q_h = 1.2;
        let err = ModelParams::new(v).unwrap_err();
        assert!(err.to_string().contains("q_H"), "{err}");
        v.q_h = 0.9;
        v.k_half = 0.0;
        assert!(ModelParams::new(v).unwrap_err().to_string().contains("K_half"));
        v.k_half = 300.0;
        v.delta_k = f64::NAN;
        assert!(ModelParams::new(v).unwrap_err().to_string().contains("delta_K"));
    }

    #[test]
    fn set_by_name_rejects_unknown() {
        let mut v = *healthy().values();
        assert!(v.set("alpha_H", 0.1).is_ok());
        assert_eq!(v.alpha_h, 0.1);
        assert!(matches!(v.set("alpha_h", 0.1), Err(ModelError::UnknownParameter(_))));
        assert_eq!(ParamValues::FIELD_NAMES.len(), 24);
    }
}
