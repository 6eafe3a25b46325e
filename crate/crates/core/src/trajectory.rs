//! Normalized views of trajectories and their CSV file format.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::integrator::Trajectory;
use crate::model::State;

/// Header of the full trajectory file.
pub const TRAJECTORY_HEADER: &str = "t,K,q,theta,H,Q,K_norm,H_norm,Q_norm";
/// Header of the normalized-only trajectory file.
pub const NORMALIZED_HEADER: &str = "t,K_norm,q,theta,H_norm,Q_norm";

/// Trajectory scaled for plotting: `K/K_max`, `q`, `theta`, `H/H_inf`,
/// `Q/Q_sat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrajectory {
    pub times: Vec<f64>,
    #[serde(rename = "K_norm")]
    pub k_norm: Vec<f64>,
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(rename = "H_norm")]
    pub h_norm: Vec<f64>,
    #[serde(rename = "Q_norm")]
    pub q_norm: Vec<f64>,
}

impl NormalizedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn normalize(traj: &Trajectory) -> NormalizedTrajectory {
    let p = &traj.params;
    let col = |f: &dyn Fn(&State) -> f64| traj.states.iter().map(f).collect::<Vec<_>>();
    NormalizedTrajectory {
        times: traj.times.clone(),
        k_norm: col(&|s| s.archive / p.k_max),
        q: col(&|s| s.quality),
        theta: col(&|s| s.model_skill),
        h_norm: col(&|s| s.human_skill / p.h_inf),
        q_norm: col(&|s| s.queries / p.q_sat),
    }
}

/// Rows read back from a full trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub normalized: NormalizedTrajectory,
}

#[inline]
fn fmt17(out: &mut String, v: f64) {
    // 17 significant digits round-trip every finite f64.
    write!(out, "{v:.16e}").expect("write to String");
}

fn write_rows(
    path: &Path,
    header: &str,
    rows: usize,
    mut row: impl FnMut(usize) -> Vec<f64>,
) -> Result<(), ScenarioError> {
    if rows == 0 {
        return Err(ScenarioError::InvalidTrajectory("cannot export an empty trajectory".into()));
    }
    let mut text = String::with_capacity(rows * 200);
    text.push_str(header);
    text.push('\n');
    for i in 0..rows {
        for (j, v) in row(i).into_iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            fmt17(&mut text, v);
        }
        text.push('\n');
    }
    let io = |source| ScenarioError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(text.as_bytes()).map_err(io)?;
    Ok(())
}

fn check_lengths(n: usize, cols: &[usize]) -> Result<(), ScenarioError> {
    if cols.iter().any(|&c| c != n) {
        return Err(ScenarioError::InvalidTrajectory("columns differ in length".into()));
    }
    Ok(())
}

/// Writes the full trajectory file (raw and normalized columns).
pub fn export_trajectory(traj: &Trajectory, path: &Path) -> Result<(), ScenarioError> {
    check_lengths(traj.times.len(), &[traj.states.len()])?;
    let norm = normalize(traj);
    write_rows(path, TRAJECTORY_HEADER, traj.len(), |i| {
        let s = &traj.states[i];
        vec![
            traj.times[i],
            s.archive,
            s.quality,
            s.model_skill,
            s.human_skill,
            s.queries,
            norm.k_norm[i],
            norm.h_norm[i],
            norm.q_norm[i],
        ]
    })
}

/// Writes the normalized series only.
pub fn export_normalized(norm: &NormalizedTrajectory, path: &Path) -> Result<(), ScenarioError> {
    let n = norm.len();
    check_lengths(n, &[norm.k_norm.len(), norm.q.len(), norm.theta.len(), norm.h_norm.len(), norm.q_norm.len()])?;
    write_rows(path, NORMALIZED_HEADER, n, |i| {
        vec![norm.times[i], norm.k_norm[i], norm.q[i], norm.theta[i], norm.h_norm[i], norm.q_norm[i]]
    })
}

fn read_rows(path: &Path, header: &str, width: usize) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let parse_err = |line: usize, message: String| ScenarioError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == header => {}
        Some(h) => return Err(parse_err(1, format!("expected header '{header}', found '{h}'"))),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let fields = fields.map_err(|e| parse_err(i + 2, e.to_string()))?;
        if fields.len() != width {
            return Err(parse_err(i + 2, format!("expected {width} fields, found {}", fields.len())));
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(ScenarioError::InvalidTrajectory(format!("{} has no rows", path.display())));
    }
    Ok(rows)
}

pub fn import_trajectory(path: &Path) -> Result<TrajectoryTable, ScenarioError> {
    let rows = read_rows(path, TRAJECTORY_HEADER, 9)?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(TrajectoryTable {
        times: col(0),
        states: rows.iter().map(|r| State::new(r[1], r[2], r[3], r[4], r[5])).collect(),
        normalized: NormalizedTrajectory {
            times: col(0),
            k_norm: col(6),
            q: col(2),
            theta: col(3),
            h_norm: col(7),
            q_norm: col(8),
        },
    })
}

pub fn import_normalized(path: &Path) -> Result<NormalizedTrajectory, ScenarioError> {
    let rows = read_rows(path, NORMALIZED_HEADER, 6)?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(NormalizedTrajectory { times: col(0), k_norm: col(1), q: col(2), theta: col(3), h_norm: col(4), q_norm: col(5) })
}
