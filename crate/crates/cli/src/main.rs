//! `csac`: simulate datasets, DOP timelines, quality reports and coasting
//! evaluations from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CSAC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "csac", version, about = "CSAC holdover drift modeling against GPS time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one or more measurement datasets.
    Simulate(SimulateArgs),
    /// Per-epoch visibility and DOP timeline of a scenario.
    Dop(DopArgs),
    /// Noise variance between aligned datasets, binned by n_vis or TDOP.
    Quality(QualityArgs),
    /// Fit drift models on the head of a dataset and score them on the rest.
    Coast(CoastArgs),
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, short, env = OUT_DIR_ENV, default_value = "csac-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScenarioSource {
    /// JSON config with `scenario`, `clock`, `replicates`, `constellation`.
    #[arg(long, short, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Preset scenario number (1, 2 or 3) instead of a config file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replicates.
    #[arg(long, short = 'k')]
    replicates: Option<usize>,
    /// Override the scenario duration, seconds.
    #[arg(long)]
    duration_s: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct DopArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Override the scenario duration, seconds.
    #[arg(long)]
    duration_s: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "n_vis", alias = "nvis")]
    NVis,
    Tdop,
}

#[derive(Debug, Args)]
struct QualityArgs {
    /// Aligned dataset CSVs (at least two).
    #[arg(required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "tdop")]
    mode: ModeArg,
    /// Ascending TDOP bin edges.
    #[arg(long, value_delimiter = ',', default_value = "1.25,2.0")]
    thresholds: Vec<f64>,
    /// Expected cadence in seconds, or `none` to skip the check.
    #[arg(long, default_value = "2", value_parser = parse_cadence)]
    cadence: Cadence,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct CoastArgs {
    /// Dataset CSV.
    dataset: PathBuf,
    /// Samples in the fit window; the rest is the coast window.
    #[arg(long, default_value_t = csac_holdover::simulator::PROTOCOL_FIT_SAMPLES)]
    fit_count: usize,
    /// Polynomial degrees to fit.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    degrees: Vec<usize>,
    /// Weighting schemes: uniform, visnum, inv_tdop.
    #[arg(long, value_delimiter = ',', default_value = "uniform,visnum,inv_tdop")]
    schemes: Vec<String>,
    /// Denominator of the visnum weight; defaults to the fit-window maximum.
    #[arg(long)]
    n_max: Option<u32>,
    /// Expected cadence in seconds, or `none` to skip the check.
    #[arg(long, default_value = "2", value_parser = parse_cadence)]
    cadence: Cadence,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy)]
struct Cadence(Option<f64>);

fn parse_cadence(s: &str) -> Result<Cadence, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Cadence(None));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(Cadence(Some(v))),
        _ => Err(format!("expected a positive number of seconds or `none`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Dop(a) => commands::dop(&a),
        Command::Quality(a) => commands::quality(&a),
        Command::Coast(a) => commands::coast(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csac: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
