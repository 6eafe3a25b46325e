//! Qualitative regime labels for normalized trajectories.
//!
//! Rules, applied in order:
//! 1. `oscillatory`: at least [`MIN_PEAKS`] interior local maxima of `q` with
//!    prominence above [`PEAK_PROMINENCE`] in the final 80% of the grid;
//! 2. `decline`: least-squares slopes of `q`, `theta` and `H_norm` over the
//!    final 20% all below `-SLOPE_TOL`;
//! 3. `growth`: all three slopes above `SLOPE_TOL`, or all three final values
//!    more than 5% above their initial values with no slope below
//!    `-SLOPE_TOL`;
//! 4. `stagnation`: all three slopes within `SLOPE_TOL` of zero;
//! 5. `mixed` otherwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::trajectory::NormalizedTrajectory;

pub const MIN_POINTS: usize = 50;
pub const SLOPE_TOL: f64 = 1e-5;
pub const PEAK_PROMINENCE: f64 = 0.01;
pub const MIN_PEAKS: usize = 2;
const GROWTH_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Growth,
    Stagnation,
    Decline,
    Oscillatory,
    Mixed,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Growth => "growth",
            Regime::Stagnation => "stagnation",
            Regime::Decline => "decline",
            Regime::Oscillatory => "oscillatory",
            Regime::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Values per normalized series, in the order `K_norm, q, theta, H_norm, Q_norm`.
pub type Series5 = [f64; 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub initial: Series5,
    #[serde(rename = "final")]
    pub terminal: Series5,
    /// Least-squares slope per month over the final 20% of the grid.
    pub terminal_slopes: Series5,
    /// Prominent interior maxima of `q` in the final 80% of the grid.
    pub q_peaks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub label: Regime,
    pub diagnostics: RegimeDiagnostics,
}

fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        num += (ti - tm) * (yi - ym);
        den += (ti - tm) * (ti - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Indices of interior local maxima; flat tops report their middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < x.len() && x[j + 1] < x[i] {
                peaks.push((i + j) / 2);
                i = j + 1;
                continue;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Topographic prominence of the peak at `i`: height above the higher of the
/// two minima reached before meeting a strictly higher sample.
fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left_min = h;
    for &v in x[..i].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Number of interior maxima of `x` whose prominence exceeds `min_prominence`.
pub fn count_prominent_peaks(x: &[f64], min_prominence: f64) -> usize {
    local_maxima(x).into_iter().filter(|&i| prominence(x, i) > min_prominence).count()
}

pub fn classify_regime(traj: &NormalizedTrajectory) -> Result<RegimeLabel, ScenarioError> {
    let n = traj.len();
    if n < MIN_POINTS {
        return Err(ScenarioError::TooShort { len: n, min: MIN_POINTS });
    }
    let series: [&[f64]; 5] = [&traj.k_norm, &traj.q, &traj.theta, &traj.h_norm, &traj.q_norm];
    if series.iter().any(|s| s.len() != n) {
        return Err(ScenarioError::InvalidTrajectory("columns differ in length".into()));
    }

    let tail_start = n - (n as f64 * 0.2).ceil() as usize;
    let window_start = (n as f64 * 0.2).floor() as usize;
    let t_tail = &traj.times[tail_start..];

    let initial = series.map(|s| s[0]);
    let terminal = series.map(|s| s[n - 1]);
    let terminal_slopes = series.map(|s| ls_slope(t_tail, &s[tail_start..]));
    let q_peaks = count_prominent_peaks(&traj.q[window_start..], PEAK_PROMINENCE);

    // q, theta, H_norm
    let key = [1usize, 2, 3];
    let slopes = key.map(|i| terminal_slopes[i]);
    let label = if q_peaks >= MIN_PEAKS {
        Regime::Oscillatory
    } else if slopes.iter().all(|&s| s < -SLOPE_TOL) {
        Regime::Decline
    } else if slopes.iter().all(|&s| s > SLOPE_TOL)
        || key.iter().all(|&i| terminal[i] > GROWTH_MARGIN * initial[i] && terminal_slopes[i] >= -SLOPE_TOL)
    {
        Regime::Growth
    } else if slopes.iter().all(|s| s.abs() <= SLOPE_TOL) {
        Regime::Stagnation
    } else {
        Regime::Mixed
    };

    Ok(RegimeLabel { label, diagnostics: RegimeDiagnostics { initial, terminal, terminal_slopes, q_peaks } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_from(f: impl Fn(f64) -> [f64; 5], n: usize) -> NormalizedTrajectory {
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let rows: Vec<[f64; 5]> = times.iter().map(|&t| f(t)).collect();
        let col = |j: usize| rows.iter().map(|r| r[j]).collect();
        NormalizedTrajectory {
            times: times.clone(),
            k_norm: col(0),
            q: col(1),
            theta: col(2),
            h_norm: col(3),
            q_norm: col(4),
        }
    }

    #[test]
    fn constant_is_stagnation() {
        let l = classify_regime(&traj_from(|_| [0.01, 0.5, 0.3, 0.1, 0.1], 101)).unwrap();
        assert_eq!(l.label, Regime::Stagnation);
        assert_eq!(l.diagnostics.terminal_slopes, [0.0; 5]);
    }

    #[test]
    fn ramps() {
        let up =
            classify_regime(&traj_from(|t| [0.0, 0.2 + 1e-3 * t, 0.1 + 1e-3 * t, 0.1 + 1e-3 * t, 0.0], 200)).unwrap();
        assert_eq!(up.label, Regime::Growth);
        let down =
            classify_regime(&traj_from(|t| [0.0, 0.5 - 1e-3 * t, 0.3 - 1e-3 * t, 0.3 - 1e-3 * t, 0.0], 200)).unwrap();
        assert_eq!(down.label, Regime::Decline);
        let mixed = classify_regime(&traj_from(|t| [0.0, 0.5 - 1e-3 * t, 0.3 + 1e-3 * t, 0.3, 0.0], 200)).unwrap();
        assert_eq!(mixed.label, Regime::Mixed);
    }

    #[test]
    fn saturated_growth_counts_as_growth() {
        // Rose by far more than 5% then flattened out.
        let l = classify_regime(&traj_from(
            |t| {
                let s = 1.0 - (-t / 10.0).exp();
                [0.0, 0.5 + 0.4 * s, 0.3 + 0.5 * s, 0.1 + 0.5 * s, 0.0]
            },
            400,
        ))
        .unwrap();
        assert_eq!(l.label, Regime::Growth);
    }

    #[test]
    fn sine_is_oscillatory() {
        let l = classify_regime(&traj_from(|t| [0.0, 0.5 + 0.1 * (t / 8.0).sin(), 0.3, 0.1, 0.0], 300)).unwrap();
        assert_eq!(l.label, Regime::Oscillatory);
        assert!(l.diagnostics.q_peaks >= MIN_PEAKS);
    }

    #[test]
    fn small_wiggles_are_not_peaks() {
        let x: Vec<f64> = (0..300).map(|i| 0.5 + 0.004 * (i as f64 / 8.0).sin()).collect();
        assert_eq!(count_prominent_peaks(&x, PEAK_PROMINENCE), 0);
    }

    #[test]
    fn prominence_matches_hand_example() {
        // Peaks at 3 (height 5) and 7 (height 4); the saddle between is 1.
        let x = [0.0, 1.0, 2.0, 5.0, 2.0, 1.0, 3.0, 4.0, 2.0, 0.0];
        assert_eq!(local_maxima(&x), vec![3, 7]);
        assert_eq!(prominence(&x, 3), 5.0);
        assert_eq!(prominence(&x, 7), 3.0);
        let flat = [0.0, 1.0, 1.0, 1.0, 0.0];
        assert_eq!(local_maxima(&flat), vec![2]);
    }

    #[test]
    fn too_short() {
        let err = classify_regime(&traj_from(|_| [0.0; 5], 49)).unwrap_err();
        assert!(matches!(err, ScenarioError::TooShort { len: 49, .. }));
    }

    #[test]
    fn deterministic() {
        let t = traj_from(|t| [0.0, 0.5 + 0.1 * (t / 5.0).cos(), 0.3, 0.1, 0.0], 120);
        assert_eq!(classify_regime(&t).unwrap(), classify_regime(&t).unwrap());
    }
}
