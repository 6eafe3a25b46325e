use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {field} = {value} must be {bound}")]
    InvalidParameter { field: &'static str, value: f64, bound: &'static str },
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("archive size K = {0} is not strictly positive")]
    ArchiveNotPositive(f64),
    #[error("derivative component {component} is not finite ({value})")]
    NonFinite { component: &'static str, value: f64 },
    #[error("state variable {variable} = {value} is outside the physical domain")]
    OutOfDomain { variable: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step size underflow at t = {t} (h = {h:e}); problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("trajectory left the domain at t = {t}: {source}")]
    DomainExit {
        t: f64,
        #[source]
        source: ModelError,
    },
    #[error("vector field failed at t = {t}: {source}")]
    Model {
        t: f64,
        #[source]
        source: ModelError,
    },
}

impl IntegratorError {
    /// Time at which integration failed, when known.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            IntegratorError::InvalidConfig(_) => None,
            IntegratorError::StepUnderflow { t, .. }
            | IntegratorError::TooManySteps { t, .. }
            | IntegratorError::DomainExit { t, .. }
            | IntegratorError::Model { t, .. } => Some(*t),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown preset '{name}'; valid presets: {}", valid.join(", "))]
    UnknownPreset { name: String, valid: Vec<&'static str> },
    #[error("invalid scenario file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trajectory too short for classification: {len} points, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("{key} = {value} must be {bound}")]
    InitialState { key: &'static str, value: f64, bound: &'static str },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("malformed year-month '{0}'")]
    BadMonth(String),
    #[error("era window {start}..{end} ends before it starts")]
    EmptyWindow { start: String, end: String },
    #[error("series columns have unequal lengths")]
    LengthMismatch,
    #[error("months are not contiguous after {0}")]
    NotContiguous(String),
    #[error("negative or non-finite value {value} in {column} at {month}")]
    BadValue { column: &'static str, month: String, value: f64 },
    #[error("insufficient data: {have} months, need at least {need}")]
    Insufficient { have: usize, need: usize },
    #[error("history does not cover {0}")]
    MissingHistory(String),
    #[error("K_max multiplier {0} is not one of 1.25, 1.50")]
    BadMultiplier(f64),
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("archive stock K = {0} is not strictly positive")]
    ArchiveNotPositive(f64),
    #[error("length mismatch: {predicted} predicted vs {observed} observed")]
    LengthMismatch { predicted: usize, observed: usize },
    #[error("need at least {need} residuals, got {have}")]
    TooFewResiduals { have: usize, need: usize },
    #[error("flow parameter {name} = {value} outside [{lo}, {hi}]")]
    OutOfBounds { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
    #[error("none of {restarts} restarts converged: {status}")]
    AllRestartsFailed { restarts: usize, status: String },
}
