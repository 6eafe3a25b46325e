//! Simulation request and response documents. The CLI `simulate` command and
//! the HTTP service both resolve requests and render responses here, so the
//! two produce the same bytes for the same inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{IntegratorError, ModelError, ScenarioError};
use crate::integrator::IntegratorConfig;
use crate::model::{ModelParams, State};
use crate::regime::RegimeLabel;
use crate::scenario::{check_initial_state, run_simulation, ScenarioPreset, SimulationOutput};
use crate::trajectory::NormalizedTrajectory;

pub const T_END_MIN: u32 = 10;
pub const T_END_MAX: u32 = 20_000;
/// Base preset when a request names none.
pub const DEFAULT_PRESET: &str = "healthy_growth";
/// Keys accepted in `y0`.
pub const Y0_KEYS: [&str; 5] = ["K0", "q0", "theta0", "H0", "Q0"];

/// A base preset plus overrides. Values stay as `f64` so that a bad `t_end`
/// gets a field-level message rather than a parse failure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub y0: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

/// Validation failure tied to one request field, e.g. `params.a_0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub detail: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.detail)
    }
}

impl std::error::Error for FieldError {}

fn field_err(field: impl Into<String>, detail: impl Into<String>) -> FieldError {
    FieldError { field: field.into(), detail: detail.into() }
}

fn number_map(field: &str, value: serde_json::Value) -> Result<BTreeMap<String, f64>, FieldError> {
    let serde_json::Value::Object(map) = value else {
        return Err(field_err(field, "expected an object of numbers"));
    };
    map.into_iter()
        .map(|(k, v)| match v.as_f64() {
            Some(x) => Ok((k, x)),
            None => Err(field_err(format!("{field}.{k}"), "expected a number")),
        })
        .collect()
}

impl SimulateRequest {
    /// Parses a JSON request body. Unlike plain deserialization, errors name
    /// the offending field.
    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| field_err("body", e.to_string()))?;
        let serde_json::Value::Object(map) = doc else {
            return Err(field_err("body", "expected a JSON object"));
        };
        let mut req = SimulateRequest::default();
        for (key, value) in map {
            match key.as_str() {
                "preset" => match value {
                    serde_json::Value::String(s) => req.preset = Some(s),
                    serde_json::Value::Null => {}
                    _ => return Err(field_err("preset", "expected a string")),
                },
                "params" => req.params = number_map("params", value)?,
                "y0" => req.y0 = number_map("y0", value)?,
                "t_end" => match value {
                    serde_json::Value::Number(n) => req.t_end = n.as_f64(),
                    serde_json::Value::Null => {}
                    _ => return Err(field_err("t_end", "expected a number")),
                },
                _ => return Err(field_err(key, "unknown field; expected preset, params, y0 or t_end")),
            }
        }
        Ok(req)
    }

    /// Merges the overrides into the named preset from `presets` and
    /// validates the result.
    pub fn resolve(&self, presets: &[ScenarioPreset]) -> Result<ScenarioPreset, FieldError> {
        let name = self.preset.as_deref().unwrap_or(DEFAULT_PRESET);
        let base = presets.iter().find(|p| p.name == name).ok_or_else(|| {
            let valid: Vec<&str> = presets.iter().map(|p| p.name.as_str()).collect();
            field_err("preset", format!("unknown preset '{name}'; valid presets: {}", valid.join(", ")))
        })?;

        let mut values = *base.params.values();
        for (key, &v) in &self.params {
            values.set(key, v).map_err(|e| field_err(format!("params.{key}"), e.to_string()))?;
        }
        let params = ModelParams::new(values).map_err(|e| match e {
            ModelError::InvalidParameter { field, .. } => field_err(format!("params.{field}"), e.to_string()),
            e => field_err("params", e.to_string()),
        })?;

        let mut y = base.y0.to_array();
        for (key, &v) in &self.y0 {
            let i = Y0_KEYS.iter().position(|k| k == key).ok_or_else(|| {
                field_err(
                    format!("y0.{key}"),
                    format!("unknown initial-state key; expected one of {}", Y0_KEYS.join(", ")),
                )
            })?;
            y[i] = v;
        }
        let y0 = State::from_array(y);
        check_initial_state(&y0, &params).map_err(|e| match e {
            ScenarioError::InitialState { key, .. } => field_err(format!("y0.{key}"), e.to_string()),
            e => field_err("y0", e.to_string()),
        })?;

        let t_end = match self.t_end {
            None => base.config.t_end,
            Some(t) if t.fract() == 0.0 && (T_END_MIN as f64..=T_END_MAX as f64).contains(&t) => t as u32,
            Some(t) => {
                return Err(field_err("t_end", format!("t_end = {t} must be an integer in [{T_END_MIN}, {T_END_MAX}]")))
            }
        };
        let config = IntegratorConfig { t_end, ..base.config };
        Ok(ScenarioPreset { name: base.name.clone(), label: base.label.clone(), params, y0, config })
    }
}

/// What a simulation returns: the normalized arrays, the regime and every
/// effective input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub preset: String,
    pub params: ModelParams,
    pub y0: State,
    pub t_end: u32,
    pub trajectory: NormalizedTrajectory,
    pub regime: Option<RegimeLabel>,
}

impl SimulateResponse {
    /// Compact JSON; floats round-trip exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

impl SimulateResponse {
    pub fn from_output(run: &ScenarioPreset, out: &SimulationOutput) -> Self {
        Self {
            preset: run.name.clone(),
            params: run.params,
            y0: run.y0,
            t_end: run.config.t_end,
            trajectory: out.normalized.clone(),
            regime: out.regime.clone(),
        }
    }
}

pub fn simulate(run: &ScenarioPreset) -> Result<SimulateResponse, IntegratorError> {
    let out = run_simulation(&run.params, &run.y0, &run.config)?;
    Ok(SimulateResponse::from_output(run, &out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_presets;

    fn req(json: &str) -> SimulateRequest {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn empty_request_is_the_default_preset() {
        let r = req("{}").resolve(&builtin_presets()).unwrap();
        assert_eq!(r.name, DEFAULT_PRESET);
        assert_eq!(r.config.t_end, 1000);
    }

    #[test]
    fn gate_override_reproduces_tighter_gate() {
        let presets = builtin_presets();
        let b = req(r#"{"preset":"healthy_growth","params":{"a_0":0.8}}"#).resolve(&presets).unwrap();
        let c = req(r#"{"preset":"tighter_gate"}"#).resolve(&presets).unwrap();
        assert_eq!(b.params, c.params);
        assert_eq!(simulate(&b).unwrap().trajectory, simulate(&c).unwrap().trajectory);
    }

    #[test]
    fn field_level_errors() {
        let presets = builtin_presets();
        let cases = [
            (r#"{"y0":{"q0":1.5}}"#, "y0.q0", "[0, 1]"),
            (r#"{"params":{"a_0":1.5}}"#, "params.a_0", "a_0"),
            (r#"{"params":{"alpha":1}}"#, "params.alpha", "alpha"),
            (r#"{"y0":{"q":0.5}}"#, "y0.q", "q0"),
            (r#"{"preset":"nope"}"#, "preset", "open_source"),
            (r#"{"t_end":9}"#, "t_end", "[10, 20000]"),
            (r#"{"t_end":20001}"#, "t_end", "[10, 20000]"),
            (r#"{"t_end":100.5}"#, "t_end", "integer"),
        ];
        for (json, field, needle) in cases {
            let e = req(json).resolve(&presets).unwrap_err();
            assert_eq!(e.field, field, "{json}");
            assert!(e.detail.contains(needle), "{json}: {}", e.detail);
        }
    }

    #[test]
    fn unknown_top_level_keys_rejected() {
        assert!(serde_json::from_str::<SimulateRequest>(r#"{"tend":5}"#).is_err());
        assert_eq!(SimulateRequest::from_json(r#"{"tend":5}"#).unwrap_err().field, "tend");
    }

    #[test]
    fn body_errors_name_the_field() {
        for (json, field) in [
            ("[1]", "body"),
            ("{", "body"),
            (r#"{"preset":3}"#, "preset"),
            (r#"{"params":{"a_0":"high"}}"#, "params.a_0"),
            (r#"{"y0":[1]}"#, "y0"),
            (r#"{"t_end":"long"}"#, "t_end"),
        ] {
            assert_eq!(SimulateRequest::from_json(json).unwrap_err().field, field, "{json}");
        }
        let r = SimulateRequest::from_json(
            r#"{"preset":"inverted_flow","params":{"a_0":0.8},"y0":{"q0":0.4},"t_end":1e3}"#,
        )
        .unwrap();
        assert_eq!(r, req(r#"{"preset":"inverted_flow","params":{"a_0":0.8},"y0":{"q0":0.4},"t_end":1000}"#));
    }

    #[test]
    fn response_round_trips_exactly() {
        let run = req(r#"{"preset":"oscillations","t_end":200}"#).resolve(&builtin_presets()).unwrap();
        let resp = simulate(&run).unwrap();
        let back: SimulateResponse = serde_json::from_str(&resp.to_json()).unwrap();
        assert_eq!(back, resp);
        assert_eq!(back.trajectory.len(), 201);
    }
}
