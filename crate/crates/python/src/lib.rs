//! Python bindings. Documents cross the boundary as the same JSON the CLI
//! and the HTTP service produce, decoded into plain dicts and lists.

use std::collections::BTreeMap;

use kdyn_core::api::{simulate as run_request, SimulateRequest};
use kdyn_core::calibration::step_k_exact as exact_step;
use kdyn_core::{builtin_preset, builtin_presets, ModelParams, State, PRESET_NAMES};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(kdyn, IntegrationError, PyRuntimeError, "The integrator could not reach the requested horizon.");

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn request(
    preset: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    y0: Option<BTreeMap<String, f64>>,
    t_end: Option<f64>,
) -> PyResult<String> {
    let req = SimulateRequest { preset, params: params.unwrap_or_default(), y0: y0.unwrap_or_default(), t_end };
    let run = req.resolve(&builtin_presets()).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let resp = run_request(&run).map_err(|e| IntegrationError::new_err(e.to_string()))?;
    Ok(resp.to_json())
}

/// Names of the built-in presets.
#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

/// One built-in preset as a dict: name, label, params, y0, config.
#[pyfunction]
fn preset<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    let p = builtin_preset(name).map_err(|e| PyValueError::new_err(e.to_string()))?;
    loads(py, &serde_json::to_string(&p).expect("preset serializes"))
}

/// Runs a preset with optional overrides. `params` uses the parameter names
/// (`alpha_H`, `a_0`, ...); `y0` uses `K0`, `q0`, `theta0`, `H0`, `Q0`.
#[pyfunction]
#[pyo3(signature = (preset=None, params=None, y0=None, t_end=None))]
fn simulate<'py>(
    py: Python<'py>,
    preset: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    y0: Option<BTreeMap<String, f64>>,
    t_end: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let text = py.detach(|| request(preset, params, y0, t_end))?;
    loads(py, &text)
}

/// Same as `simulate` but returns the response document as a JSON string.
#[pyfunction]
#[pyo3(signature = (preset=None, params=None, y0=None, t_end=None))]
fn simulate_json(
    py: Python<'_>,
    preset: Option<String>,
    params: Option<BTreeMap<String, f64>>,
    y0: Option<BTreeMap<String, f64>>,
    t_end: Option<f64>,
) -> PyResult<String> {
    py.detach(|| request(preset, params, y0, t_end))
}

/// Time derivative at `state` = (K, q, theta, H, Q) under a preset's
/// parameters with optional overrides.
#[pyfunction]
#[pyo3(signature = (state, preset="healthy_growth", params=None))]
fn vector_field(state: [f64; 5], preset: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<[f64; 5]> {
    let base = builtin_preset(preset).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let mut values = *base.params.values();
    for (k, v) in params.unwrap_or_default() {
        values.set(&k, v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    }
    let p = ModelParams::new(values).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let d = kdyn_core::vector_field(&State::from_array(state), &p).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(d.to_array())
}

/// Archive after one month with constant inflow and depreciation.
#[pyfunction]
fn step_k_exact(k: f64, inflow: f64, delta_k: f64) -> f64 {
    exact_step(k, inflow, delta_k)
}

#[pymodule]
fn kdyn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IntegrationError", m.py().get_type::<IntegrationError>())?;
    m.add("PRESET_NAMES", PRESET_NAMES.to_vec())?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_json, m)?)?;
    m.add_function(wrap_pyfunction!(vector_field, m)?)?;
    m.add_function(wrap_pyfunction!(step_k_exact, m)?)?;
    Ok(())
}
