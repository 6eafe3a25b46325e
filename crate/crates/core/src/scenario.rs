//! Built-in scenario presets, user scenario files and simulation runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IntegratorError, ScenarioError};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::model::{ModelParams, ParamValues, State};
use crate::regime::{classify_regime, RegimeLabel};
use crate::trajectory::{normalize, NormalizedTrajectory};

/// Default horizon for regime runs, in months.
pub const DEFAULT_T_END: u32 = 1000;

/// A named, fully specified simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPreset {
    pub name: String,
    pub label: String,
    pub params: ModelParams,
    pub y0: State,
    pub config: IntegratorConfig,
}

/// Parameters shared by the nine regime presets, with the regime levers of
/// the healthy-growth baseline.
const REGIME_BASE: ParamValues = ParamValues {
    alpha_h: 0.5,
    alpha_a: 0.05,
    delta_k: 0.01,
    q_h: 0.95,
    delta_q: 0.001,
    eta_sup: 0.05,
    eta_rlhf: 0.03,
    theta_max: 1.0,
    theta_mid: 0.0,
    k_max: 1e4,
    q_half: 5000.0,
    beta_k: 0.05,
    beta_a: 0.03,
    gamma_h: 0.05,
    h_inf: 100.0,
    hill_beta: 0.9,
    k_half: 300.0,
    q_sat: 500.0,
    xi_0: 2.0,
    kappa_h: 0.05,
    t_difficulty: 10.0,
    rho_q: 0.01,
    a_0: 0.5,
    kappa_gate: 10.0,
};

struct Regime {
    name: &'static str,
    label: &'static str,
    alpha_h: f64,
    alpha_a: f64,
    beta_k: f64,
    beta_a: f64,
    eta_sup: f64,
    eta_rlhf: f64,
    a_0: f64,
}

#[rustfmt::skip]
const REGIMES: [Regime; 9] = [
    Regime { name: "no_llms", label: "(a) No LLMs", alpha_h: 0.5, alpha_a: 0.0, beta_k: 0.05, beta_a: 0.0, eta_sup: 0.0, eta_rlhf: 0.0, a_0: 0.0 },
    Regime { name: "healthy_growth", label: "(b) Healthy growth", alpha_h: 0.5, alpha_a: 0.05, beta_k: 0.05, beta_a: 0.03, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.5 },
    Regime { name: "tighter_gate", label: "(c) Healthy growth & tighter gate", alpha_h: 0.5, alpha_a: 0.05, beta_k: 0.05, beta_a: 0.03, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.8 },
    Regime { name: "inverted_flow", label: "(d) Inverted flow", alpha_h: 0.05, alpha_a: 0.5, beta_k: 0.05, beta_a: 0.03, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.5 },
    Regime { name: "inverted_learning", label: "(e) Inverted learning", alpha_h: 0.5, alpha_a: 0.05, beta_k: 0.03, beta_a: 0.05, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.5 },
    Regime { name: "inverted_flow_learning", label: "(f) Inverted flow & inverted learning", alpha_h: 0.05, alpha_a: 0.5, beta_k: 0.03, beta_a: 0.05, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.5 },
    Regime { name: "gate_tightening", label: "(g) Gate tightening stops collapse", alpha_h: 0.25, alpha_a: 0.3, beta_k: 0.03, beta_a: 0.05, eta_sup: 0.05, eta_rlhf: 0.03, a_0: 0.8 },
    Regime { name: "model_recovery", label: "(h) Model recovery due to RLHF", alpha_h: 0.05, alpha_a: 0.5, beta_k: 0.03, beta_a: 0.05, eta_sup: 0.05, eta_rlhf: 0.5, a_0: 0.5 },
    Regime { name: "oscillations", label: "(i) Oscillations", alpha_h: 0.05, alpha_a: 0.5, beta_k: 0.05, beta_a: 0.3, eta_sup: 0.05, eta_rlhf: 0.5, a_0: 0.5 },
];

const MEDICAL: ParamValues = ParamValues {
    alpha_h: 0.32,
    alpha_a: 0.05,
    delta_k: 0.010,
    q_h: 0.99,
    delta_q: 0.0005,
    eta_sup: 0.10,
    eta_rlhf: 0.30,
    theta_max: 1.0,
    theta_mid: 0.0,
    k_max: 1e5,
    q_half: 8000.0,
    beta_k: 0.20,
    beta_a: 0.05,
    gamma_h: 0.02,
    h_inf: 100.0,
    hill_beta: 0.9,
    k_half: 300.0,
    q_sat: 1000.0,
    xi_0: 2.0,
    kappa_h: 0.05,
    t_difficulty: 10.0,
    rho_q: 0.02,
    a_0: 0.90,
    kappa_gate: 20.0,
};

const OPEN_SOURCE: ParamValues = ParamValues {
    alpha_h: 5.0,
    alpha_a: 4.26,
    delta_k: 0.023,
    q_h: 0.90,
    delta_q: 0.002,
    eta_sup: 0.12,
    eta_rlhf: 0.25,
    theta_max: 1.0,
    theta_mid: 0.0,
    k_max: 5e5,
    q_half: 5000.0,
    beta_k: 0.30,
    beta_a: 0.10,
    gamma_h: 0.03,
    h_inf: 100.0,
    hill_beta: 0.9,
    k_half: 300.0,
    q_sat: 500.0,
    xi_0: 2.0,
    kappa_h: 0.05,
    t_difficulty: 10.0,
    rho_q: 0.02,
    a_0: 0.60,
    kappa_gate: 8.0,
};

/// Names of the built-in presets: nine regimes then two case studies.
pub const PRESET_NAMES: [&str; 11] = [
    "no_llms",
    "healthy_growth",
    "tighter_gate",
    "inverted_flow",
    "inverted_learning",
    "inverted_flow_learning",
    "gate_tightening",
    "model_recovery",
    "oscillations",
    "medical",
    "open_source",
];

fn regime_values(r: &Regime) -> ParamValues {
    let mut v = ParamValues {
        alpha_h: r.alpha_h,
        alpha_a: r.alpha_a,
        beta_k: r.beta_k,
        beta_a: r.beta_a,
        eta_sup: r.eta_sup,
        eta_rlhf: r.eta_rlhf,
        a_0: r.a_0,
        ..REGIME_BASE
    };
    match r.name {
        "no_llms" => v.xi_0 = 0.0,
        "oscillations" => {
            v.q_half = 100.0;
            v.hill_beta = 4.0;
            v.k_half = 200.0;
            v.kappa_h = 0.9;
            v.t_difficulty = 10000.0;
            v.kappa_gate = 1.0;
        }
        _ => {}
    }
    v
}

fn builtin(name: &str) -> Option<(&'static str, &'static str, ParamValues)> {
    if let Some(r) = REGIMES.iter().find(|r| r.name == name) {
        return Some((r.name, r.label, regime_values(r)));
    }
    match name {
        "medical" => Some(("medical", "Medical research (PubMed)", MEDICAL)),
        "open_source" => Some(("open_source", "Open-source software (GitHub & Copilot)", OPEN_SOURCE)),
        _ => None,
    }
}

/// All eleven built-in presets, in [`PRESET_NAMES`] order.
pub fn builtin_presets() -> Vec<ScenarioPreset> {
    PRESET_NAMES.iter().map(|n| builtin_preset(n).expect("built-in preset")).collect()
}

/// A built-in preset by name; never touches the filesystem.
pub fn builtin_preset(name: &str) -> Result<ScenarioPreset, ScenarioError> {
    let (name, label, values) = builtin(name)
        .ok_or_else(|| ScenarioError::UnknownPreset { name: name.to_string(), valid: PRESET_NAMES.to_vec() })?;
    Ok(ScenarioPreset {
        name: name.to_string(),
        label: label.to_string(),
        params: ModelParams::new(values)?,
        y0: State::REFERENCE,
        config: IntegratorConfig::new(DEFAULT_T_END),
    })
}

/// Loads a built-in preset by name, or a scenario file when `name` points to
/// an existing file.
pub fn load_preset(name: &str) -> Result<ScenarioPreset, ScenarioError> {
    if builtin(name).is_some() {
        return builtin_preset(name);
    }
    let path = Path::new(name);
    if path.is_file() {
        return load_scenario_file(path);
    }
    Err(ScenarioError::UnknownPreset { name: name.to_string(), valid: PRESET_NAMES.to_vec() })
}

/// Flat scenario document: every model parameter plus optional initial state
/// and horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "K0", default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(rename = "H0", default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[serde(rename = "Q0", default, skip_serializing_if = "Option::is_none")]
    pub q_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<u32>,
}

impl ScenarioFile {
    pub fn from_preset(p: &ScenarioPreset) -> Self {
        Self {
            params: p.params.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            k0: Some(p.y0.archive),
            q0: Some(p.y0.quality),
            theta0: Some(p.y0.model_skill),
            h0: Some(p.y0.human_skill),
            q_0: Some(p.y0.queries),
            t_end: Some(p.config.t_end),
        }
    }

    fn into_preset(self, name: String) -> Result<ScenarioPreset, String> {
        // serde(flatten) swallows unknown keys into the map; reject them here.
        let mut values = REGIME_BASE;
        for (key, value) in &self.params {
            values.set(key, *value).map_err(|e| e.to_string())?;
        }
        let missing: Vec<_> = ParamValues::FIELD_NAMES.iter().filter(|f| !self.params.contains_key(**f)).collect();
        if !missing.is_empty() {
            return Err(format!(
                "missing parameter(s): {}",
                missing.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
            ));
        }
        let params = ModelParams::new(values).map_err(|e| e.to_string())?;
        let r = State::REFERENCE;
        let y0 = State::new(
            self.k0.unwrap_or(r.archive),
            self.q0.unwrap_or(r.quality),
            self.theta0.unwrap_or(r.model_skill),
            self.h0.unwrap_or(r.human_skill),
            self.q_0.unwrap_or(r.queries),
        );
        check_initial_state(&y0, &params).map_err(|e| e.to_string())?;
        let config = IntegratorConfig::new(self.t_end.unwrap_or(DEFAULT_T_END));
        config.validate().map_err(|e| e.to_string())?;
        Ok(ScenarioPreset { label: name.clone(), name, params, y0, config })
    }
}

/// Validates an initial state, naming the offending key (`K0`, `q0`, ...).
pub fn check_initial_state(y0: &State, params: &ModelParams) -> Result<(), ScenarioError> {
    let bad = |key, value, bound| ScenarioError::InitialState { key, value, bound };
    if !(y0.archive > 0.0 && y0.archive.is_finite()) {
        return Err(bad("K0", y0.archive, "> 0"));
    }
    if !(0.0..=1.0).contains(&y0.quality) {
        return Err(bad("q0", y0.quality, "in [0, 1]"));
    }
    if !(0.0..=params.theta_max).contains(&y0.model_skill) {
        return Err(bad("theta0", y0.model_skill, "in [0, theta_max]"));
    }
    if !(y0.human_skill >= 0.0 && y0.human_skill.is_finite()) {
        return Err(bad("H0", y0.human_skill, ">= 0"));
    }
    if !(y0.queries >= 0.0 && y0.queries.is_finite()) {
        return Err(bad("Q0", y0.queries, ">= 0"));
    }
    Ok(())
}

/// Reads a TOML scenario file.
pub fn load_scenario_file(path: &Path) -> Result<ScenarioPreset, ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let config_err = |message: String| ScenarioError::Config { path: path.to_path_buf(), message };
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| config_err(e.message().to_string()))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();
    file.into_preset(name).map_err(config_err)
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutput {
    pub trajectory: Trajectory,
    pub normalized: NormalizedTrajectory,
    /// `None` when the grid is too short to classify.
    pub regime: Option<RegimeLabel>,
}

/// Integrates, normalizes and classifies. The CLI and the HTTP service both
/// go through this function.
pub fn run_simulation(
    params: &ModelParams,
    y0: &State,
    config: &IntegratorConfig,
) -> Result<SimulationOutput, IntegratorError> {
    let trajectory = integrate(y0, params, config)?;
    let normalized = normalize(&trajectory);
    let regime = classify_regime(&normalized).ok();
    Ok(SimulationOutput { trajectory, normalized, regime })
}

impl ScenarioPreset {
    pub fn run(&self) -> Result<SimulationOutput, IntegratorError> {
        run_simulation(&self.params, &self.y0, &self.config)
    }
}
