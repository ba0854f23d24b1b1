//! Batch front-end for the relaying simulator: configuration, campaign
//! execution and result files.

pub mod config;
pub mod output;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;
use vfd_core::sim::{CampaignResult, ScenarioConfig, Simulator};

pub use config::{parse_config, ConfigError, Overrides};
pub use output::{emit_results, OutputError, RunManifest};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] vfd_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Simulation(_) | Self::Output(_) => 3,
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs the campaign and writes all result files into `out_dir`.
pub fn run(
    config: &ScenarioConfig,
    out_dir: &Path,
    progress: Option<&(dyn Fn(usize) + Sync)>,
) -> Result<CampaignResult, RunError> {
    let started = unix_now();
    let result = Simulator::new(config.clone())?.run_campaign(progress)?;
    let manifest = RunManifest::new(config, started, unix_now(), result.redraws);
    emit_results(config, &result, &manifest, out_dir)?;
    Ok(result)
}
