use std::path::Path;

use clap::Args;
use kdyn_core::api::{SimulateRequest, SimulateResponse, DEFAULT_PRESET};
use kdyn_core::scenario::{builtin_preset, builtin_presets, load_scenario_file};
use kdyn_core::trajectory::{export_normalized, export_trajectory};
use kdyn_core::{ScenarioPreset, SimulationOutput};
use serde::Serialize;

use crate::{parse_assignment, write_file, CliError, OutputArgs};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Built-in preset name, or path to a TOML scenario file
    #[arg(long, value_name = "NAME|PATH", default_value = DEFAULT_PRESET)]
    pub preset: String,
    /// Horizon in months; an integer in [10, 20000]; default from the preset (1000)
    #[arg(long, value_name = "MONTHS")]
    pub t_end: Option<f64>,
    /// Parameter override FIELD=VALUE, repeatable, in the field's own units
    /// (rates per month, K_max/K_half in items, Q_half/Q_sat in queries, others dimensionless)
    #[arg(long = "set", value_name = "FIELD=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
    /// Initial-state override, repeatable: K0 (items), q0 (quality in [0,1]),
    /// theta0 (skill), H0 (skill), Q0 (queries)
    #[arg(long = "y0", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub y0: Vec<(String, f64)>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl SimulateArgs {
    /// The request these flags describe, and the preset table it resolves
    /// against. Built-in names win over same-named files.
    pub fn request(&self) -> Result<(SimulateRequest, Vec<ScenarioPreset>), CliError> {
        let (name, presets) = match builtin_preset(&self.preset) {
            Ok(p) => (p.name, builtin_presets()),
            Err(e) if !Path::new(&self.preset).is_file() => return Err(e.into()),
            Err(_) => {
                let p = load_scenario_file(Path::new(&self.preset))?;
                (p.name.clone(), vec![p])
            }
        };
        let req = SimulateRequest {
            preset: Some(name),
            params: self.set.iter().cloned().collect(),
            y0: self.y0.iter().cloned().collect(),
            t_end: self.t_end,
        };
        Ok((req, presets))
    }
}

#[derive(Serialize)]
struct RegimeSummary<'a> {
    preset: &'a str,
    t_end: u32,
    #[serde(flatten)]
    regime: &'a Option<kdyn_core::RegimeLabel>,
}

/// Resolves and integrates; shared with `sweep` and the tests.
pub fn execute(args: &SimulateArgs) -> Result<(ScenarioPreset, SimulationOutput), CliError> {
    let (req, presets) = args.request()?;
    let run = req.resolve(&presets)?;
    let out = run.run()?;
    Ok((run, out))
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let (run, out) = execute(args)?;
    let dir = args.output.dir("simulate", &run.name)?;
    export_trajectory(&out.trajectory, &dir.join("trajectory.csv"))?;
    export_normalized(&out.normalized, &dir.join("normalized.csv"))?;
    let summary = RegimeSummary { preset: &run.name, t_end: run.config.t_end, regime: &out.regime };
    write_file(&dir.join("regime.json"), serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    write_file(&dir.join("simulation.json"), SimulateResponse::from_output(&run, &out).to_json())?;

    eprintln!(
        "simulate: {} ({}), t_end = {} months, {} grid points",
        run.name,
        run.label,
        run.config.t_end,
        out.normalized.len()
    );
    match &out.regime {
        Some(r) => {
            let t = r.diagnostics.terminal;
            eprintln!("regime: {}", r.label.as_str());
            eprintln!("terminal: K_norm={} q={} theta={} H_norm={} Q_norm={}", t[0], t[1], t[2], t[3], t[4]);
        }
        None => eprintln!("regime: unclassified (grid too short)"),
    }
    let params: Vec<String> = run.params.entries().iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("parameters: {}", params.join(" "));
    let y = run.y0;
    eprintln!("y0: K0={} q0={} theta0={} H0={} Q0={}", y.archive, y.quality, y.model_skill, y.human_skill, y.queries);
    eprintln!("wrote {}", dir.display());
    Ok(())
}
