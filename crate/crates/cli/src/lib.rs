//! `kdyn`: simulate scenarios, sweep two levers, fetch Wikipedia series,
//! calibrate the archive-flow block and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 invalid input or domain error, 2 file system or
//! network error, 3 numerical failure. Artifacts go to
//! `<out>/<command>/<name>/`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod calibrate;
pub mod error;
pub mod fetch;
pub mod serve;
pub mod simulate;
pub mod sweep;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "kdyn", version, about = "Human-AI collective knowledge dynamics toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and classify its regime
    Simulate(simulate::SimulateArgs),
    /// Integrate a two-lever parameter grid
    Sweep(sweep::SweepArgs),
    /// Fetch and assemble monthly Wikipedia series for calibration eras
    FetchData(fetch::FetchArgs),
    /// Fit (alpha_H, alpha_A, delta_K) to assembled era files
    Calibrate(calibrate::CalibrateArgs),
    /// Serve the simulation API until interrupted
    Serve(serve::ServeArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::FetchData(a) => fetch::run(&a),
        Command::Calibrate(a) => calibrate::run(&a),
        Command::Serve(a) => serve::run(&a),
    }
}

/// Where a command writes its artifacts.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output root (path); artifacts go to <OUT>/<command>/<NAME>/
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Run name (subdirectory), default depends on the command
    #[arg(long, value_name = "NAME")]
    pub name: Option<String>,
}

impl OutputArgs {
    /// Creates `<out>/<command>/<name>` and returns it.
    pub fn dir(&self, command: &str, default_name: &str) -> Result<PathBuf, CliError> {
        let name = self.name.as_deref().unwrap_or(default_name);
        if name.is_empty() || name == "." || name == ".." || name.contains(['/', '\\']) {
            return Err(CliError::Invalid(format!("run name '{name}' must be a single path component")));
        }
        let dir = self.out.join(command).join(name);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(dir)
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// `KEY=VALUE` with a float value; scientific notation accepted.
pub(crate) fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Values of one sweep lever.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub(crate) fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    let values = if let Some((a, rest)) = s.split_once(':') {
        let (b, n) = rest.split_once(':').ok_or_else(|| format!("expected start:stop:count, got '{s}'"))?;
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n.trim().parse().map_err(|_| format!("'{n}' is not a count"))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("grid values must be finite".into());
    }
    Ok(Grid(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("a_0=0.8").unwrap(), ("a_0".into(), 0.8));
        assert_eq!(parse_assignment("K_max = 1e5").unwrap(), ("K_max".into(), 1e5));
        assert!(parse_assignment("a_0").is_err());
        assert!(parse_assignment("a_0=high").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1,0.2").unwrap().0, [0.1, 0.2]);
        assert_eq!(parse_grid("0:1:5").unwrap().0, [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("2e-1:9:1").unwrap().0, [0.2]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1,,2").is_err());
        assert!(parse_grid("inf").is_err());
    }

    #[test]
    fn run_names_stay_inside_the_root() {
        let tmp = tempfile::tempdir().unwrap();
        let out = OutputArgs { out: tmp.path().into(), name: Some("../x".into()) };
        assert!(matches!(out.dir("simulate", "a"), Err(CliError::Invalid(_))));
        let out = OutputArgs { out: tmp.path().into(), name: None };
        assert_eq!(out.dir("simulate", "a").unwrap(), tmp.path().join("simulate/a"));
    }
}
