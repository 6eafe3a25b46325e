//! Five-state model of an archive of human knowledge, a model trained on it,
//! human skill and query demand.
//!
//! The state `(K, q, theta, H, Q)` evolves under [`model::vector_field`];
//! [`integrator::integrate`] solves it on an integer month grid with an
//! adaptive Dormand-Prince 5(4) pair; [`scenario`] provides named presets and
//! [`regime`] labels the resulting trajectories. [`calibration`] fits the
//! archive-flow block to monthly Wikipedia statistics.

pub mod api;
pub mod calibration;
pub mod error;
pub mod integrator;
pub mod model;
pub mod regime;
pub mod scenario;
pub mod series;
pub mod trajectory;

pub use api::{simulate, FieldError, SimulateRequest, SimulateResponse};
pub use error::{CalibrationError, IntegratorError, ModelError, ScenarioError, SeriesError};
pub use integrator::{integrate, IntegratorConfig, Trajectory};
pub use model::{vector_field, Derivative, ModelParams, ParamValues, State};
pub use regime::{classify_regime, Regime, RegimeLabel};
pub use scenario::{
    builtin_preset, builtin_presets, load_preset, run_simulation, ScenarioPreset, SimulationOutput, PRESET_NAMES,
};
