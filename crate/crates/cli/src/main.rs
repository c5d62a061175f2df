//! `prolab` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prolab::ColorSpaceId;

mod commands;
mod io;

use io::Triple;

#[derive(Parser)]
#[command(name = "prolab", version, about = "Projective colour coordinates: conversions, uniformity and noise criteria")]
struct Cli {
    /// Reference white as an XYZ triple `X,Y,Z` (default D65).
    #[arg(long, global = true, allow_hyphen_values = true)]
    white: Option<Triple>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert colours between coordinate systems.
    Convert(ConvertArgs),
    /// Non-uniformity `U` of one or all spaces on a random pair sample.
    Uniformity(SpaceSampleArgs),
    /// Score every space on `U`, `H` and collineation.
    Table1(Table1Args),
    /// Fit the eight metric parameters by penalized multistart search.
    Fit(FitArgs),
    /// Sensor noise: model fit, heteroscedasticity and ellipsoids.
    Noise {
        #[command(subcommand)]
        command: NoiseCommand,
    },
    /// Emit plottable coordinates as CSV.
    Plotdata(PlotArgs),
    /// Print the built-in constants as JSON.
    DumpConstants {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    from: ColorSpaceId,
    #[arg(long)]
    to: ColorSpaceId,
    /// A single colour `a,b,c`.
    #[arg(long, conflicts_with = "input", required_unless_present = "input", allow_hyphen_values = true)]
    color: Option<Triple>,
    /// CSV with three numeric columns; a non-numeric first row is a header.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Optimal-colour resolution of the gamut hull.
    #[arg(long, default_value_t = 100)]
    resolution: usize,
}

#[derive(Args)]
struct SpaceSampleArgs {
    /// Restrict to one space; all nine otherwise.
    #[arg(long)]
    space: Option<ColorSpaceId>,
    #[command(flatten)]
    sample: SampleArgs,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    /// Directory for `table1.csv` and `manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Training pairs.
    #[arg(long, alias = "n", default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, default_value_t = 4000)]
    max_iters: usize,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseParams {
    /// Gain override.
    #[arg(long)]
    g: Option<f64>,
    /// Additive variance override.
    #[arg(long)]
    var_eps: Option<f64>,
}

#[derive(Subcommand)]
enum NoiseCommand {
    /// Fit gain and additive variance to per-patch statistics.
    Fit {
        /// CSV with columns `channel,mean,variance`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heteroscedasticity `H` over reproducible colours.
    H {
        #[command(flatten)]
        sample: SpaceSampleArgs,
        #[command(flatten)]
        model: NoiseParams,
    },
    /// Noise ellipsoid frames on an sRGB grid.
    Ellipsoids {
        #[arg(long, default_value = "proLab")]
        space: ColorSpaceId,
        /// Grid levels per sRGB channel.
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[command(flatten)]
        model: NoiseParams,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    #[value(name = "gamut-3d")]
    Gamut3d,
    SrgbCube,
    Macadam,
    Scatter,
    NoiseClouds,
}

#[derive(Args)]
struct PlotArgs {
    figure: Figure,
    #[arg(long, default_value = "proLab")]
    space: ColorSpaceId,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Pairs for `scatter`.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Samples per curve, or grid levels for `noise-clouds`.
    #[arg(long, default_value_t = 32)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for usage or precondition failures, 3 for numerical ones.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<prolab::Error>() {
        Some(pe) if !pe.is_precondition() => 3,
        _ => 2,
    }
}
