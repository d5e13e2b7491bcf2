use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cautious_cli::{commands, CliError, CliResult, RunConfig, SweepDimension};

#[derive(Parser)]
#[command(name = "cautious", version, about = "Exploration propensity and distance analyses over publication corpora")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a papers file and report warning counts.
    Validate { path: Option<PathBuf> },
    /// Generate a synthetic corpus with ground truth.
    Synth,
    /// Build the topic graph and export edges and strengths.
    Graph,
    /// Compute the per-author analysis table.
    Metrics,
    /// Fit the configured regression models.
    Regress,
    /// Propensity score matching.
    Psm,
    /// Propensity score weighting.
    Psw,
    /// Author- and paper-level null models.
    Null {
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Re-run the analysis over one swept dimension.
    Sweep {
        #[arg(long, value_enum)]
        dimension: SweepDimension,
    },
    /// Emit plot-data series.
    Report,
    /// Run every configured stage.
    Run,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.out = std::path::absolute(o).map_err(|e| CliError::io("resolving --out", e))?;
    }
    Ok(config)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let config = load(&cli)?;
    match cli.command {
        Command::Validate { path } => commands::cmd_validate(&config, path.as_deref()),
        Command::Synth => commands::cmd_synth(&config),
        Command::Graph => commands::cmd_graph(&config),
        Command::Metrics => commands::cmd_metrics(&config),
        Command::Regress => commands::cmd_regress(&config),
        Command::Psm => commands::cmd_psm(&config),
        Command::Psw => commands::cmd_psw(&config),
        Command::Null { replicates } => commands::cmd_null(&config, replicates),
        Command::Sweep { dimension } => commands::cmd_sweep(&config, dimension),
        Command::Report => commands::cmd_report(&config),
        Command::Run => commands::cmd_run(&config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
