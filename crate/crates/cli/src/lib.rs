//! The `holdtrade` command line: ingest → features → simulate / train →
//! analyze → report. Every command is a thin layer over `holdtrade-core`.

pub mod commands;
pub mod config;
pub mod svg;

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "holdtrade", version, about = "Trading simulation and agent behaviour analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for stochastic baselines and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated ticker subset (and order).
    #[arg(long, global = true, value_delimiter = ',')]
    pub tickers: Option<Vec<String>>,
    /// Train/test boundary date, e.g. 2023-12-01.
    #[arg(long, global = true)]
    pub split: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, validate and align bar files into a cached panel.
    Ingest(IngestArgs),
    /// Compute the indicator panel from the cached panel.
    Features(PanelArgs),
    /// Run one episode with a baseline or a trained checkpoint.
    Simulate(SimulateArgs),
    /// Train the actor-critic agent on the training window.
    Train(TrainArgs),
    /// Behaviour reports for one or more episode logs.
    Analyze(AnalyzeArgs),
    /// Render SVG charts from behaviour reports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct IngestArgs {
    /// Per-ticker bar CSVs (ticker = file stem).
    #[arg(long, num_args = 1..)]
    pub bars: Vec<PathBuf>,
    /// Directory of per-ticker bar CSVs.
    #[arg(long)]
    pub bars_dir: Option<PathBuf>,
    /// Long-format CSV with a ticker column.
    #[arg(long)]
    pub long: Option<PathBuf>,
    /// Auxiliary series as NAME=PATH (repeatable).
    #[arg(long = "aux", value_parser = parse_aux)]
    pub aux: Vec<(String, PathBuf)>,
    #[arg(long, value_enum)]
    pub fill: Option<Fill>,
}

fn parse_aux(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got `{s}`"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fill {
    Intersect,
    ForwardFill,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PanelArgs {
    /// Cached panel (defaults to `<out>/panel.bin`).
    #[arg(long)]
    pub panel: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum WindowChoice {
    Train,
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Baseline name: hold, random, buy-and-hold, momentum.
    #[arg(long, conflicts_with = "checkpoint")]
    pub agent: Option<String>,
    /// Trained agent checkpoint.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub window: WindowChoice,
    /// Log path (defaults to `<out>/logs/<label>.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub timesteps: Option<usize>,
    /// Checkpoint path (defaults to `<out>/a2c.ckpt`).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    /// Episode log CSVs (each with its JSON sidecar).
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    /// Also export integral holding in share-value terms (needs the panel).
    #[arg(long)]
    pub share_value: bool,
    #[command(flatten)]
    pub panel: PanelArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Report directories or report.json files (defaults to every report
    /// under `<out>/analysis`).
    pub reports: Vec<PathBuf>,
}

/// Runs a parsed command line, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let cfg = commands::resolve_config(&cli.global)?;
    match cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, &a, stdout),
        Command::Features(a) => commands::features(&cfg, &a, stdout),
        Command::Simulate(a) => commands::simulate(&cfg, &a, stdout),
        Command::Train(a) => commands::train(&cfg, &a, stdout),
        Command::Analyze(a) => commands::analyze(&cfg, &a, stdout),
        Command::Report(a) => commands::report(&cfg, &a, stdout),
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(cli, stdout)
}
