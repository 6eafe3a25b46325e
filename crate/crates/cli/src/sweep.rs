use clap::Args;
use kdyn_core::api::DEFAULT_PRESET;
use kdyn_core::regime::Series5;
use kdyn_core::{run_simulation, ModelParams, ParamValues};
use rayon::prelude::*;
use serde::Serialize;

use crate::simulate::SimulateArgs;
use crate::{parse_grid, write_file, CliError, Grid, OutputArgs};

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Base preset name or TOML scenario path; every cell starts from its y0
    #[arg(long, value_name = "NAME|PATH", default_value = DEFAULT_PRESET)]
    pub preset: String,
    /// First lever: a parameter field name such as alpha_H
    #[arg(long, value_name = "FIELD")]
    pub x: String,
    /// First lever values in the field's units: a,b,c or start:stop:count
    #[arg(long, value_name = "GRID", value_parser = parse_grid)]
    pub x_values: Grid,
    /// Second lever: a parameter field name such as alpha_A
    #[arg(long, value_name = "FIELD")]
    pub y: String,
    /// Second lever values in the field's units: a,b,c or start:stop:count
    #[arg(long, value_name = "GRID", value_parser = parse_grid)]
    pub y_values: Grid,
    /// Horizon in months; an integer in [10, 20000]; default from the preset (1000)
    #[arg(long, value_name = "MONTHS")]
    pub t_end: Option<f64>,
    /// Worker threads (count); default is the number of logical cores
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// The merged parameters failed validation.
    Invalid,
    /// Integration failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub status: CellStatus,
    pub regime: Option<&'static str>,
    /// Terminal `K_norm, q, theta, H_norm, Q_norm`.
    pub terminal: Option<Series5>,
    pub failure_time: Option<f64>,
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    preset: &'a str,
    t_end: u32,
    x: &'a str,
    x_values: &'a [f64],
    y: &'a str,
    y_values: &'a [f64],
    ok: usize,
    invalid: usize,
    failed: usize,
}

fn check_lever(name: &str) -> Result<(), CliError> {
    if ParamValues::FIELD_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("unknown lever '{name}'; valid levers: {}", ParamValues::FIELD_NAMES.join(", "))))
    }
}

/// Cells in row-major order (`y` outer, `x` inner).
pub fn cells(args: &SweepArgs) -> Result<(kdyn_core::ScenarioPreset, Vec<Cell>), CliError> {
    check_lever(&args.x)?;
    check_lever(&args.y)?;
    if args.x == args.y {
        return Err(CliError::Invalid(format!("levers must differ, both are '{}'", args.x)));
    }
    let (xs, ys) = (&args.x_values.0, &args.y_values.0);
    if xs.is_empty() || ys.is_empty() {
        return Err(CliError::Invalid("both grids need at least one value".into()));
    }
    let base_args = SimulateArgs {
        preset: args.preset.clone(),
        t_end: args.t_end,
        set: Vec::new(),
        y0: Vec::new(),
        output: args.output.clone(),
    };
    let (req, presets) = base_args.request()?;
    let base = req.resolve(&presets)?;

    let grid: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let cell = |&(x, y): &(f64, f64)| {
        let mut values = *base.params.values();
        values.set(&args.x, x).expect("lever checked");
        values.set(&args.y, y).expect("lever checked");
        let blank =
            Cell { x, y, status: CellStatus::Ok, regime: None, terminal: None, failure_time: None, detail: None };
        let params = match ModelParams::new(values) {
            Ok(p) => p,
            Err(e) => return Cell { status: CellStatus::Invalid, detail: Some(e.to_string()), ..blank },
        };
        match run_simulation(&params, &base.y0, &base.config) {
            Ok(out) => Cell {
                regime: Some(out.regime.as_ref().map_or("unclassified", |r| r.label.as_str())),
                terminal: Some(
                    out.regime.as_ref().map_or_else(|| last_row(&out.normalized), |r| r.diagnostics.terminal),
                ),
                ..blank
            },
            Err(e) => Cell {
                status: CellStatus::Failed,
                failure_time: e.failure_time(),
                detail: Some(e.to_string()),
                ..blank
            },
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(CliError::Invalid("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let cells = pool.install(|| grid.par_iter().map(cell).collect());
    Ok((base, cells))
}

fn last_row(n: &kdyn_core::trajectory::NormalizedTrajectory) -> Series5 {
    let i = n.len() - 1;
    [n.k_norm[i], n.q[i], n.theta[i], n.h_norm[i], n.q_norm[i]]
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let (base, cells) = cells(args)?;
    let default_name = format!("{}_{}_{}", base.name, args.x, args.y);
    let dir = args.output.dir("sweep", &default_name)?;

    let path = dir.join("grid.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    let io = |e: csv::Error| CliError::io(&path, e);
    w.write_record([
        args.x.as_str(),
        &args.y,
        "status",
        "regime",
        "K_norm",
        "q",
        "theta",
        "H_norm",
        "Q_norm",
        "failure_time",
        "detail",
    ])
    .map_err(io)?;
    for c in &cells {
        let status = match c.status {
            CellStatus::Ok => "ok",
            CellStatus::Invalid => "invalid",
            CellStatus::Failed => "failed",
        };
        let mut row = vec![c.x.to_string(), c.y.to_string(), status.into(), c.regime.unwrap_or("").into()];
        row.extend((0..5).map(|i| opt(c.terminal.map(|t| t[i]))));
        row.push(opt(c.failure_time));
        row.push(c.detail.clone().unwrap_or_default());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let count = |s| cells.iter().filter(|c| c.status == s).count();
    let summary = SweepSummary {
        preset: &base.name,
        t_end: base.config.t_end,
        x: &args.x,
        x_values: &args.x_values.0,
        y: &args.y,
        y_values: &args.y_values.0,
        ok: count(CellStatus::Ok),
        invalid: count(CellStatus::Invalid),
        failed: count(CellStatus::Failed),
    };
    write_file(&dir.join("sweep.json"), serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;

    eprintln!(
        "sweep: {} over {} x {} = {} cells ({} ok, {} invalid, {} failed), t_end = {} months",
        base.name,
        args.x,
        args.y,
        cells.len(),
        summary.ok,
        summary.invalid,
        summary.failed,
        base.config.t_end
    );
    let mut tally: Vec<(&str, usize)> = Vec::new();
    for r in cells.iter().filter_map(|c| c.regime) {
        match tally.iter_mut().find(|(k, _)| *k == r) {
            Some((_, n)) => *n += 1,
            None => tally.push((r, 1)),
        }
    }
    for (r, n) in tally {
        eprintln!("  {r}: {n}");
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}
