use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use clap::Args;
use kdyn_service::ServiceConfig;

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Address to bind (IP)
    #[arg(long, value_name = "IP", default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// TCP port; 0 picks a free one
    #[arg(long, value_name = "PORT", default_value_t = 8000)]
    pub port: u16,
    /// Directory of extra TOML scenario files to serve as presets (path)
    #[arg(long, value_name = "DIR")]
    pub preset_dir: Option<PathBuf>,
    /// Browser origin allowed to call the API, repeatable; '*' allows any
    #[arg(long = "cors-origin", value_name = "ORIGIN", env = "KDYN_CORS_ORIGINS", value_delimiter = ',')]
    pub cors_origins: Vec<String>,
}

pub fn run(args: &ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig { preset_dir: args.preset_dir.clone(), cors_origins: args.cors_origins.clone() };
    let addr = SocketAddr::new(args.bind, args.port);
    kdyn_service::run(addr, &config, |local| eprintln!("serving on http://{local} (Ctrl-C to stop)"))?;
    eprintln!("stopped");
    Ok(())
}
