//! Command-line harness for training, evaluating and benchmarking MPCANet
//! models. The binary is a thin wrapper around [`run`].

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mpcanet_core::{Architecture, SynthSpec};

use crate::config::{parse_extents, RunConfig, DEFAULT_ENERGY, DEFAULT_RATIO, DEFAULT_SPLITS};
pub use crate::error::{CliError, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "mpcanet", version, about = "MPCA / MPCANet tensor feature toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and classifier, then write the model file.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Model output path.
        #[arg(long, visible_alias = "model")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Report accuracy and confusion of a model on a manifest.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Multi-split benchmark, optionally sweeping patch sizes.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated leading patch extents, e.g. `3x3,5x5,7x7`.
        #[arg(long, value_delimiter = ',', value_parser = extents_arg)]
        patch_sizes: Vec<Extents>,
        /// Write the row table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// MPCA + LDA baseline over feature dimensions C-1 and 10..100.
    SweepMpcaLda {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SPLITS)]
        splits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RATIO)]
        ratio: f64,
        /// Per-mode energy fraction kept by MPCA.
        #[arg(long, default_value_t = DEFAULT_ENERGY)]
        energy: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic tensor-classification dataset.
    Synth {
        /// Output directory for tensor files and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = extents_arg, default_value = "16x16x8")]
        dims: Extents,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        /// Template rank: one value for every mode or one per mode (`2x2x1`).
        #[arg(long, value_parser = extents_arg, default_value = "2")]
        rank: Extents,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Print a model's geometry, core sizes, energy curves and feature length.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// `3x3x8` style extents as one argument value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extents(pub Vec<usize>);

fn extents_arg(s: &str) -> Result<Extents, String> {
    parse_extents(s).map(Extents)
}

/// Config file plus flags that override it.
#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub architecture: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long)]
    pub ratio: Option<f64>,
}

impl RunArgs {
    pub fn effective_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(a) = &self.architecture {
            cfg.architecture = a.parse::<Architecture>().map_err(|e| CliError::usage(e.to_string()))?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.splits {
            cfg.splits = s;
        }
        if let Some(r) = self.ratio {
            cfg.ratio = Some(r);
        }
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Train { run, out: model, json } => {
            commands::cmd_train(&run.effective_config()?, &run.data, model, *json, out)
        }
        Command::Eval { model, data, json } => commands::cmd_eval(model, data, *json, out),
        Command::Bench { run, patch_sizes, csv, json } => commands::cmd_bench(
            &run.effective_config()?,
            &run.data,
            &patch_sizes.iter().map(|e| e.0.clone()).collect::<Vec<_>>(),
            csv.as_deref(),
            *json,
            out,
        ),
        Command::SweepMpcaLda { data, splits, seed, ratio, energy, csv, json } => {
            commands::cmd_sweep(data, *splits, *seed, *ratio, *energy, csv.as_deref(), *json, out)
        }
        Command::Synth { out: dir, dims, classes, per_class, rank, sigma, seed } => {
            let (dims, rank) = (&dims.0, &rank.0);
            let template_rank = match rank.as_slice() {
                [r] => vec![*r; dims.len()],
                r => r.to_vec(),
            };
            let spec = SynthSpec {
                dims: dims.clone(),
                num_classes: *classes,
                samples_per_class: *per_class,
                template_rank,
                noise_sigma: *sigma,
                seed: *seed,
            };
            commands::cmd_synth(&spec, dir, out)
        }
        Command::Inspect { model, json } => commands::cmd_inspect(model, *json, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; errors go to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
