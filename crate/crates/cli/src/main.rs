//! `surfpinn`: generate rough surfaces, simulate scattered fields, reconstruct
//! surfaces from field data and sweep experiment parameters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod oracles;
mod spec;

use clap::{Args, Parser, Subcommand};
use commands::Axis;
use spec::SpecArgs;
use std::path::PathBuf;
use std::process::ExitCode;
use surfpinn_core::inverse::Preset;
use surfpinn_core::io::ManifestFormat;

#[derive(Debug, Parser)]
#[command(name = "surfpinn", version, about = "Rough-surface scattering and physics-informed surface reconstruction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spec: SpecArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Base seed; run i uses seed + i.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of runs (default 1, or 5 for sweeps).
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// baseline, incident, desk or flat.
    #[arg(long, global = true, default_value = "baseline")]
    pub preset: Preset,
    /// Manifest format: json or kv.
    #[arg(long, global = true, default_value = "kv")]
    pub manifest: ManifestFormat,
    /// Concurrent training runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// No progress output on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write random surfaces as `x,h` CSV.
    Generate,
    /// Simulate field data over a surface file or a generated surface.
    Forward {
        /// Surface CSV; generated from the spec when omitted.
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Train the surface network on recorded field data.
    Reconstruct {
        #[arg(long)]
        field: PathBuf,
        /// Metadata sidecar; defaults to the field path with a `.meta` extension.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// True surface on the observation abscissae, for the ℓ2 error.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Mean and population std of the ℓ2 error along one parameter axis.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Run the built-in oracle checks.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (c, s) = (&cli.common, &cli.spec);
    let result = match &cli.command {
        Command::Generate => commands::generate(c, s).map(|_| true),
        Command::Forward { surface } => commands::forward(c, s, surface.as_deref()).map(|_| true),
        Command::Reconstruct { field, meta, truth } => {
            commands::reconstruct(c, s, field, meta.as_deref(), truth.as_deref()).map(|_| true)
        }
        Command::Sweep { axis, values } => commands::sweep(c, s, *axis, values).map(|_| true),
        Command::Validate => commands::validate(c, s),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some oracle checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
