//! Command-line front end: feature extraction, synthetic data, training,
//! evaluation, gradient checks, comparison experiments and filter analysis.

pub mod commands;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "impnet", version, about = "Intermap-pooling CNNs for spectral frame classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract log-mel features from a directory of mono 16-bit WAV files.
    Features {
        #[arg(long)]
        wav_dir: PathBuf,
        /// Feature archive to write; a `.csv` index is written beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16000)]
        sample_rate: u32,
        #[arg(long, default_value_t = impnet::features::DEFAULT_MEL_BANDS)]
        mel_bands: usize,
        /// Subtract each band's mean over the utterance.
        #[arg(long)]
        mean_norm: bool,
    },
    /// Generate a synthetic shifted-pattern dataset.
    Synth {
        /// key=value spec file; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a network with the accept/reject epoch schedule.
    Train {
        #[command(flatten)]
        model: ModelSource,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seeds both initialization and shuffling; defaults to the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 512)]
        batch: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0.9)]
        momentum: f64,
        #[arg(long, default_value_t = 0.0005)]
        l2: f64,
    },
    /// Frame accuracy and confusion matrix of a saved model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory (or a single `.impf` archive with its `.csv`).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Confusion matrix CSV; defaults to `confusion_<split>.csv` in the model directory.
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients.
    Gradcheck {
        #[command(flatten)]
        model: ModelSource,
        /// Use the preset at a few units per layer.
        #[arg(long)]
        reduced: bool,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt the analytic gradients (harness self-test).
        #[arg(long)]
        inject_bug: bool,
    },
    /// Train matched-budget variant pairs over several seeds.
    Compare {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = commands::compare::Recipe::default().epochs)]
        epochs: usize,
        /// Synthetic spec; its seed is replaced by each run's seed.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Filter-group coherence, shift invariance and layer-1 filter images.
    Analyze {
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory; its `spec.txt` supplies the class templates.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_shift: u32,
    },
}

#[derive(Debug, clap::Args)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Network config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in architecture name.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Time-axis versus frequency-axis convolution.
    Axis,
    /// Intermap pooling versus a plain CNN.
    Imp,
}

pub fn run(cli: Cli) -> CliResult {
    use commands::*;
    match cli.command {
        Command::Features {
            wav_dir,
            out,
            sample_rate,
            mel_bands,
            mean_norm,
        } => features::run(&wav_dir, &out, sample_rate, mel_bands, mean_norm),
        Command::Synth { spec, out, seed } => synth::run(spec.as_deref(), &out, seed),
        Command::Train {
            model,
            data,
            out,
            seed,
            epochs,
            batch,
            lr,
            momentum,
            l2,
        } => train::run(&train::TrainArgs {
            model,
            data,
            out,
            seed,
            epochs,
            batch,
            lr,
            momentum,
            l2,
        }),
        Command::Eval {
            model,
            data,
            split,
            confusion,
        } => eval::run(&model, &data, &split, confusion.as_deref()),
        Command::Gradcheck {
            model,
            reduced,
            trials,
            eps,
            tol,
            seed,
            inject_bug,
        } => gradcheck::run(
            &model,
            reduced,
            impnet::gradcheck::GradcheckOptions {
                trials,
                eps,
                tol,
                seed,
                inject_bug,
            },
        ),
        Command::Compare {
            experiment,
            out,
            seeds,
            epochs,
            spec,
        } => compare::run(experiment, &out, seeds, epochs, spec.as_deref()),
        Command::Analyze {
            model,
            data,
            out,
            max_shift,
        } => analyze::run(&model, data.as_deref(), &out, max_shift),
    }
}
