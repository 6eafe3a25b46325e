use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kdyn_core::series::{EraData, EraWindow, YearMonth, HISTORY_END, HISTORY_START};
use kdyn_ingest::aqs::{DEFAULT_BASE_URL, DEFAULT_PROJECT};
use kdyn_ingest::cache::{write_manifest, FixtureManifest};
use kdyn_ingest::{load_era, Client, DataSource, Endpoint, GapMode, Metric, Store, DEFAULT_USER_AGENT};

use crate::{write_file, CliError, OutputArgs};

/// Pinned snapshot location used by a bare `--fixture`.
pub const DEFAULT_FIXTURE_DIR: &str = "fixtures/wikipedia";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EraChoice {
    /// 2020-03 through 2022-11
    Pre,
    /// 2022-12 through 2025-08
    Post,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct FetchArgs {
    /// Read only the pinned snapshot in DIR (no network) [default DIR: fixtures/wikipedia]
    #[arg(long, value_name = "DIR", num_args = 0..=1, default_missing_value = DEFAULT_FIXTURE_DIR)]
    pub fixture: Option<PathBuf>,
    /// Built-in era(s) to assemble
    #[arg(long, value_enum, default_value = "both", conflicts_with = "start")]
    pub era: EraChoice,
    /// First month of a custom era (YYYY-MM)
    #[arg(long, value_name = "YYYY-MM", requires = "end")]
    pub start: Option<YearMonth>,
    /// Last month of a custom era, inclusive (YYYY-MM)
    #[arg(long, value_name = "YYYY-MM", requires = "start")]
    pub end: Option<YearMonth>,
    /// Label of the custom era (also its file name)
    #[arg(long, value_name = "LABEL", default_value = "custom")]
    pub label: String,
    /// Cache directory (path) for live fetches
    #[arg(long, value_name = "DIR", env = "KDYN_CACHE_DIR", default_value = "cache")]
    pub cache_dir: PathBuf,
    /// Use only cached data; fail instead of going to the network
    #[arg(long)]
    pub offline: bool,
    /// Ignore cached entries and download again
    #[arg(long, conflicts_with = "offline")]
    pub refresh: bool,
    /// Carry months missing inside the window forward (excluded from residuals) instead of failing
    #[arg(long)]
    pub permissive_gaps: bool,
    /// AQS metrics base URL
    #[arg(long, value_name = "URL", default_value = DEFAULT_BASE_URL)]
    pub base_url: String,
    /// Wiki project, e.g. en.wikipedia.org
    #[arg(long, value_name = "PROJECT", default_value = DEFAULT_PROJECT)]
    pub project: String,
    /// User-Agent header sent to the API
    #[arg(long, value_name = "STRING", default_value = DEFAULT_USER_AGENT)]
    pub user_agent: String,
    /// After a live fetch, copy the cache entries used into DIR as a pinned fixture
    #[arg(long, value_name = "DIR", requires = "pin_version", conflicts_with = "fixture")]
    pub pin: Option<PathBuf>,
    /// Version string recorded in the pinned fixture's manifest
    #[arg(long, value_name = "VERSION", requires = "pin")]
    pub pin_version: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl FetchArgs {
    pub fn windows(&self) -> Result<Vec<(String, EraWindow)>, CliError> {
        if let (Some(start), Some(end)) = (self.start, self.end) {
            let slug: String = self
                .label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect();
            return Ok(vec![(slug, EraWindow::new(start, end, self.label.clone())?)]);
        }
        Ok(match self.era {
            EraChoice::Pre => vec![("pre".into(), EraWindow::pre_chatgpt())],
            EraChoice::Post => vec![("post".into(), EraWindow::post_chatgpt())],
            EraChoice::Both => {
                vec![("pre".into(), EraWindow::pre_chatgpt()), ("post".into(), EraWindow::post_chatgpt())]
            }
        })
    }

    fn source(&self) -> DataSource {
        match &self.fixture {
            Some(dir) => DataSource::Fixture(dir.clone()),
            None => {
                DataSource::Live { cache_dir: self.cache_dir.clone(), offline: self.offline, refresh: self.refresh }
            }
        }
    }
}

fn history_window() -> EraWindow {
    EraWindow::new(HISTORY_START, HISTORY_END, "history").expect("history window is ordered")
}

/// Copies the cache entries behind `windows` into a fixture directory.
fn pin(cache: &Path, dest: &Path, project: &str, version: &str, windows: &[EraWindow]) -> Result<(), CliError> {
    let (from, to) = (Store::new(cache), Store::new(dest));
    let mut files = vec![(Metric::NewPages, history_window())];
    for w in windows {
        files.extend(Metric::ALL.iter().map(|&m| (m, w.clone())));
    }
    for (metric, w) in files {
        let (src, dst) = (from.path(project, metric, &w), to.path(project, metric, &w));
        if let Some(parent) = dst.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::copy(&src, &dst).map_err(|e| CliError::io(&src, e))?;
    }
    let description = format!(
        "new pages, active editors and user pageviews for {}",
        windows.iter().map(|w| format!("{}..{}", w.start, w.end)).collect::<Vec<_>>().join(", ")
    );
    write_manifest(dest, &FixtureManifest { version: version.into(), project: project.into(), description })?;
    Ok(())
}

/// Loads every requested era.
pub fn load(args: &FetchArgs) -> Result<Vec<(String, EraData)>, CliError> {
    let endpoint = Endpoint {
        base_url: args.base_url.trim_end_matches('/').into(),
        project: args.project.clone(),
        ..Endpoint::default()
    };
    let client = Client::live(endpoint, args.source(), &args.user_agent)?;
    let gap = if args.permissive_gaps { GapMode::Permissive } else { GapMode::Strict };
    args.windows()?.into_iter().map(|(slug, w)| Ok((slug, load_era(&client, &w, gap)?))).collect()
}

pub fn run(args: &FetchArgs) -> Result<(), CliError> {
    let eras = load(args)?;
    let default_name = match &args.fixture {
        Some(_) => "fixture",
        None => "live",
    };
    let dir = args.output.dir("fetch-data", default_name)?;
    for (slug, era) in &eras {
        let path = dir.join(format!("{slug}.json"));
        write_file(&path, serde_json::to_string_pretty(era).expect("era serializes") + "\n")?;
        let s = &era.series;
        let source = s.provenance.get("delta_K").map(|p| format!("{:?}", p.source).to_lowercase()).unwrap_or_default();
        eprintln!(
            "{}: {}..{}, {} months, K0 = {} pages, history total = {} pages, source {}{}",
            era.window.label,
            era.window.start,
            era.window.end,
            s.len(),
            era.k0,
            era.history_total,
            source,
            era.fixture_version.as_deref().map(|v| format!(" (fixture {v})")).unwrap_or_default()
        );
        let mut notes: Vec<&String> = s.provenance.values().flat_map(|p| &p.notes).collect();
        notes.sort();
        notes.dedup();
        for n in notes {
            eprintln!("  note: {n}");
        }
    }
    if let (Some(dest), Some(version)) = (&args.pin, &args.pin_version) {
        let windows: Vec<EraWindow> = eras.iter().map(|(_, e)| e.window.clone()).collect();
        pin(&args.cache_dir, dest, &args.project, version, &windows)?;
        eprintln!("pinned fixture {version} at {}", dest.display());
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}
