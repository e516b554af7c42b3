use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reroute_cli::pipeline::{parse_period_filter, RunOptions, Stage};
use reroute_cli::service::{serve, AppState};
use reroute_cli::{Pipeline, PipelineConfig, PipelineError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "reroute",
    version,
    about = "Transit route re-planning from smart-card lateness"
)]
struct Cli {
    /// Pipeline config file.
    #[arg(long, global = true, default_value = "reroute.json")]
    config: PathBuf,
    /// Override the config seed (also the synthetic city seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// morning, noon, afternoon, evening, night or all.
    #[arg(long, global = true, default_value = "all")]
    period: String,
    /// Minimum improvement in percent for `rank`; defaults to the config value.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Single-threaded, bitwise-reproducible run.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Rerun every stage of `all` even if its artifacts are fresh.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic city into the workspace.
    Synth,
    /// Parse GTFS, smart-card and POI inputs.
    Ingest,
    /// Build the road graph and route patterns.
    BuildGraph,
    /// Distribute lateness onto edges and write the dataset.
    Label,
    /// Train the lateness model.
    Train,
    /// Write one weight table per period.
    Weigh,
    /// Compute route suggestions.
    Suggest,
    /// Rank routes by improvement and print those above the cutoff.
    Rank,
    /// Run every stage in order.
    All,
    /// Serve the workspace over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut config = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    let period = parse_period_filter(&cli.period)?;
    let cutoff = cli.cutoff.unwrap_or(config.cutoff_pct);
    if !(0.0..=100.0).contains(&cutoff) {
        return Err(PipelineError::Config(format!("cutoff {cutoff} is outside [0, 100]")));
    }
    let options = RunOptions {
        deterministic: cli.deterministic,
        force: cli.force,
    };
    let mut pipeline = Pipeline::open(config, options)?;
    let stage = match cli.command {
        Command::Synth => Stage::Synth,
        Command::Ingest => Stage::Ingest,
        Command::BuildGraph => Stage::BuildGraph,
        Command::Label => Stage::Label,
        Command::Train => Stage::Train,
        Command::Weigh => Stage::Weigh,
        Command::Suggest => Stage::Suggest,
        Command::Rank => {
            for r in pipeline.rank(period, cutoff)? {
                let badge = if r.changed { "changed" } else { "unchanged" };
                println!(
                    "{}\t{}\t{:.3}\t{badge}",
                    r.period.as_str(),
                    r.route_id,
                    r.improvement_pct
                );
            }
            return Ok(());
        }
        Command::All => return pipeline.all(),
        Command::Serve { bind } => {
            let state = AppState::load(&pipeline.workspace)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::io(&cli.config, e))?;
            return rt
                .block_on(serve(state, bind))
                .map_err(|e| PipelineError::Config(format!("cannot serve on {bind}: {e}")));
        }
    };
    pipeline.run(stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
