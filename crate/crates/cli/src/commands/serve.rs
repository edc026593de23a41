//! `serve`: the experiment service over HTTP.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use kpirl_core::game::{enumerate_feature_space, GameConfig};
use kpirl_core::treatment::TreatmentFile;
use kpirl_service::{ArmSpec, Service, ServiceConfig, CONTROL_ARM, MIN_OBSERVATIONS, MIN_RATE_HZ};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeArgs {
    /// Listen address; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Record store directory; defaults to `<out>/data`.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Treatment arms as `name=treatment.json`; a control arm is always added.
    #[arg(long = "arm")]
    #[serde(default)]
    pub arms: Vec<String>,
    #[arg(long, default_value_t = MIN_OBSERVATIONS)]
    pub min_observations: usize,
    #[arg(long, default_value_t = MIN_RATE_HZ)]
    pub min_rate_hz: f64,
}

pub fn run(global: &GlobalArgs, args: &ServeArgs) -> Result<(), CliError> {
    let seed = global.require_seed()?;
    let mut out = Output::create(global, "serve", args)?;
    let space = enumerate_feature_space();
    let mut arms = vec![ArmSpec::control(&space).map_err(CliError::run)?];
    for spec in &args.arms {
        let (name, path) =
            spec.split_once('=').ok_or_else(|| CliError::Usage(format!("arm `{spec}` is not name=path")))?;
        if name == CONTROL_ARM {
            return Err(CliError::Usage(format!("arm name `{CONTROL_ARM}` is reserved")));
        }
        let path = PathBuf::from(path);
        let text = out.read_input(&path)?;
        let treatment = TreatmentFile::from_json(&text, &space)
            .map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))?;
        arms.push(ArmSpec { name: name.to_string(), treatment });
    }
    let data_dir = args.data_dir.clone().unwrap_or_else(|| out.dir().join("data"));
    let config = ServiceConfig {
        arms,
        seed,
        data_dir,
        game: GameConfig::default(),
        min_observations: args.min_observations,
        min_rate_hz: args.min_rate_hz,
    };
    let service = Arc::new(Service::new(config).map_err(|e| CliError::InvalidInput(e.to_string()))?);
    out.finish()?;
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::run)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| CliError::Run(format!("bind {}: {e}", args.addr)))?;
        let local = listener.local_addr().map_err(CliError::run)?;
        println!("listening on http://{local}");
        log::info!("arms: {}", service.arm_names().join(", "));
        kpirl_service::http::serve(listener, service).await.map_err(CliError::run)
    })
}
