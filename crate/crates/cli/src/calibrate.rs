use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kdyn_core::calibration::{
    fit_era, fit_joint_delta, render_fit_table, render_variant_matrix, run_variant_matrix, CalibConfig,
    CalibFixedBlock, FitResult, FitTarget, JointFitResult, VariantMatrix,
};
use kdyn_core::series::{EraData, KmaxMultiplier};
use serde::Serialize;

use crate::{write_file, CliError, OutputArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantSet {
    /// One fit per era with the flags below
    Baseline,
    /// Baseline plus level target, gate off, demand lag 1, K_max x1.50,
    /// Q_half = 2500 and joint delta_K (needs both eras)
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// Monthly new pages (pages/month)
    Flow,
    /// Cumulative archive size from K0 (pages)
    Level,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Pre-era file written by fetch-data (JSON)
    #[arg(long, value_name = "FILE")]
    pub pre: Option<PathBuf>,
    /// Post-era file written by fetch-data (JSON)
    #[arg(long, value_name = "FILE")]
    pub post: Option<PathBuf>,
    /// Which fits to run
    #[arg(long, value_enum, default_value = "baseline")]
    pub variants: VariantSet,
    /// Residual definition
    #[arg(long, value_enum, default_value = "flow")]
    pub fit_target: TargetArg,
    /// Admit every AI answer (gate fraction fixed at 1)
    #[arg(long)]
    pub no_gate: bool,
    /// Demand lag in months: 0 or 1
    #[arg(long, value_name = "MONTHS", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub demand_lag: u8,
    /// K_max as a multiple of cumulative new pages through 2025-08 (dimensionless): 1.25 or 1.5
    #[arg(long, value_name = "X", default_value_t = 1.25)]
    pub kmax_multiplier: f64,
    /// Override the feedback half-saturation (millions of pageviews per month)
    #[arg(long, value_name = "MVIEWS")]
    pub q_half: Option<f64>,
    /// Also fit both eras jointly with one shared delta_K (needs both eras)
    #[arg(long)]
    pub joint_delta_k: bool,
    /// Random restarts per fit (count)
    #[arg(long, value_name = "N", default_value_t = 16)]
    pub restarts: usize,
    /// Seed for the restart points (integer)
    #[arg(long, value_name = "SEED", default_value_t = 20251130)]
    pub seed: u64,
    /// Nelder-Mead iteration cap per restart (count)
    #[arg(long, value_name = "N", default_value_t = 2000)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl CalibrateArgs {
    pub fn config(&self) -> Result<CalibConfig, CliError> {
        let config = CalibConfig {
            fit_target: match self.fit_target {
                TargetArg::Flow => FitTarget::Flow,
                TargetArg::Level => FitTarget::Level,
            },
            gate_enabled: !self.no_gate,
            demand_lag_months: self.demand_lag,
            kmax_multiplier: KmaxMultiplier::try_from(self.kmax_multiplier)?,
            q_half_override: self.q_half,
            joint_delta_k: self.joint_delta_k,
            restarts: self.restarts,
            rng_seed: self.seed,
            max_iterations: self.max_iterations,
            ..CalibConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn read_era(path: &Path) -> Result<EraData, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let era: EraData = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: not an era file: {e}", path.display())))?;
    era.series.validate().map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(era)
}

#[derive(Debug, Serialize)]
struct EraSummary<'a> {
    label: &'a str,
    start: String,
    end: String,
    months: usize,
    #[serde(rename = "K0")]
    k0: f64,
    history_total: f64,
    #[serde(rename = "K_max")]
    k_max: f64,
    fixture_version: Option<&'a str>,
}

/// Everything `calibrate` computed; `report.json` is this document.
#[derive(Debug, Serialize)]
pub struct CalibrationReport<'a> {
    config: CalibConfig,
    eras: Vec<EraSummary<'a>>,
    fits: Vec<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Option<JointFitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<VariantMatrix>,
}

fn render(r: &CalibrationReport<'_>) -> String {
    let c = &r.config;
    let mut out = String::new();
    writeln!(out, "calibration of (alpha_H, alpha_A, delta_K)").unwrap();
    writeln!(
        out,
        "config: fit_target={:?} gate={} demand_lag_months={} kmax_multiplier={} Q_half={} restarts={} seed={} max_iterations={}",
        c.fit_target,
        if c.gate_enabled { "on" } else { "off" },
        c.demand_lag_months,
        c.kmax_multiplier.value(),
        c.q_half_override.map_or_else(|| "5000".to_string(), |q| q.to_string()),
        c.restarts,
        c.rng_seed,
        c.max_iterations
    )
    .unwrap();
    writeln!(out, "\ndata").unwrap();
    for e in &r.eras {
        writeln!(
            out,
            "  {}: {}..{}, {} months, K0 = {} pages, K_max = {} pages{}",
            e.label,
            e.start,
            e.end,
            e.months,
            e.k0,
            e.k_max,
            e.fixture_version.map(|v| format!(", fixture {v}")).unwrap_or_default()
        )
        .unwrap();
    }
    writeln!(out, "\nfits (alpha_H pages/editor, alpha_A pages/million views, delta_K 1/month, RMSE pages/month, RMSE_level pages)").unwrap();
    out.push_str(&render_fit_table(&r.fits));
    if let Some(j) = &r.joint {
        writeln!(out, "\njoint fit, shared delta_K = {:.6e}", j.delta_k).unwrap();
        out.push_str(&render_fit_table(&[j.pre.clone(), j.post.clone()]));
    }
    if let Some(m) = &r.matrix {
        writeln!(out, "\nrobustness variants").unwrap();
        out.push_str(&render_variant_matrix(m));
    }
    out
}

/// Runs the fits; shared with the tests.
pub fn compute<'a>(args: &CalibrateArgs, eras: &'a [EraData]) -> Result<CalibrationReport<'a>, CliError> {
    let config = args.config()?;
    let both = || match eras {
        [pre, post] => Ok((pre, post)),
        _ => Err(CliError::Invalid("this run needs both --pre and --post".into())),
    };
    let summaries = eras
        .iter()
        .map(|e| EraSummary {
            label: &e.window.label,
            start: e.window.start.to_string(),
            end: e.window.end.to_string(),
            months: e.series.len(),
            k0: e.k0,
            history_total: e.history_total,
            k_max: CalibFixedBlock::from_era(e).effective(&config).k_max,
            fixture_version: e.fixture_version.as_deref(),
        })
        .collect();

    let (fits, joint, matrix) = match args.variants {
        VariantSet::All => {
            let (pre, post) = both()?;
            let m = run_variant_matrix(pre, post, &config)?;
            let baseline = m.row(kdyn_core::calibration::Variant::Baseline).expect("matrix has a baseline row");
            let mut fits = Vec::new();
            for cell in [&baseline.pre, &baseline.post] {
                match (&cell.result, &cell.error) {
                    (Some(f), _) => fits.push(f.clone()),
                    (None, e) => {
                        return Err(CliError::Numerical(format!(
                            "baseline fit failed: {}",
                            e.clone().unwrap_or_default()
                        )))
                    }
                }
            }
            (fits, None, Some(m))
        }
        VariantSet::Baseline => {
            let fits = eras.iter().map(|e| fit_era(e, &config)).collect::<Result<Vec<_>, _>>()?;
            let joint = if args.joint_delta_k {
                let (pre, post) = both()?;
                let (fp, fq) = (CalibFixedBlock::from_era(pre), CalibFixedBlock::from_era(post));
                let mut j = fit_joint_delta((&pre.series, &fp), (&post.series, &fq), &config)?;
                j.pre.era = pre.window.clone();
                j.post.era = post.window.clone();
                Some(j)
            } else {
                None
            };
            (fits, joint, None)
        }
    };
    Ok(CalibrationReport { config, eras: summaries, fits, joint, matrix })
}

pub fn run(args: &CalibrateArgs) -> Result<(), CliError> {
    let eras: Vec<EraData> = args.pre.iter().chain(&args.post).map(|p| read_era(p)).collect::<Result<_, _>>()?;
    if eras.is_empty() {
        return Err(CliError::Invalid("give at least one of --pre and --post".into()));
    }
    let report = compute(args, &eras)?;
    let default_name = match args.variants {
        VariantSet::Baseline => "baseline",
        VariantSet::All => "variants",
    };
    let dir = args.output.dir("calibrate", default_name)?;
    let text = render(&report);
    write_file(&dir.join("report.txt"), &text)?;
    write_file(&dir.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    eprint!("{text}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}
