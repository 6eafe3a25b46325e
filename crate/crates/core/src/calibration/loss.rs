//! MAD-scaled soft-l1 objective.

use crate::error::CalibrationError;

/// Consistency constant turning a MAD into a normal-theory standard deviation.
pub const MAD_TO_SIGMA: f64 = 1.4826;
/// Lower limit on the residual scale.
pub const SCALE_FLOOR: f64 = 1e-9;
pub const MIN_RESIDUALS: usize = 3;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `1.4826 * median(|r - median(r)|)`, floored.
pub fn mad_scale(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return SCALE_FLOOR;
    }
    let mut buf = residuals.to_vec();
    let m = median(&mut buf);
    for (b, r) in buf.iter_mut().zip(residuals) {
        *b = (r - m).abs();
    }
    (MAD_TO_SIGMA * median(&mut buf)).max(SCALE_FLOOR)
}

/// `sum 2(sqrt(1 + (r/s)^2) - 1)` for a given scale.
pub fn soft_l1_scaled(residuals: &[f64], scale: f64) -> f64 {
    residuals
        .iter()
        .map(|r| {
            let z = (r / scale).powi(2);
            2.0 * ((1.0 + z).sqrt() - 1.0)
        })
        .sum()
}

pub fn residuals(predicted: &[f64], observed: &[f64]) -> Result<Vec<f64>, CalibrationError> {
    if predicted.len() != observed.len() {
        return Err(CalibrationError::LengthMismatch { predicted: predicted.len(), observed: observed.len() });
    }
    Ok(predicted.iter().zip(observed).map(|(p, o)| p - o).collect())
}

pub fn soft_l1_residuals(r: &[f64]) -> Result<f64, CalibrationError> {
    if r.len() < MIN_RESIDUALS {
        return Err(CalibrationError::TooFewResiduals { have: r.len(), need: MIN_RESIDUALS });
    }
    Ok(soft_l1_scaled(r, mad_scale(r)))
}

pub fn soft_l1_objective(predicted: &[f64], observed: &[f64]) -> Result<f64, CalibrationError> {
    soft_l1_residuals(&residuals(predicted, observed)?)
}

pub fn rmse(r: &[f64]) -> f64 {
    if r.is_empty() {
        return f64::NAN;
    }
    (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
}
