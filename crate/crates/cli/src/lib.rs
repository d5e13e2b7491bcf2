//! Config-driven pipeline runner: each subcommand reads a TOML run config,
//! writes CSV/JSON outputs and records their digests in `manifest.json`.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use commands::{
    cmd_graph, cmd_metrics, cmd_null, cmd_psm, cmd_psw, cmd_regress, cmd_report, cmd_run, cmd_sweep, cmd_synth,
    cmd_validate,
};
pub use config::{RunConfig, SweepDimension};
pub use error::{CliError, CliResult};
pub use manifest::{RunManifest, StageRecord, MANIFEST_FILE};
