use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "utsgan", version, about = "Train and evaluate unified time-series GANs on UCR datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render spectrogram images for a dataset into a cached corpus.
    Prepare(PrepareArgs),
    /// Train one model per (dataset, class, mode, seed).
    Train(TrainArgs),
    /// Compute FID for every checkpoint of the selected runs.
    Evaluate(EvaluateArgs),
    /// Draw loss curves, generated spectrograms and series overlays of a run.
    Plot(PlotArgs),
    /// Export synthetic series from a checkpoint as UCR-format TSV.
    Generate(GenerateArgs),
}

/// Options shared by every command that reads datasets.
#[derive(Debug, Args)]
pub struct Selection {
    /// Flat `key = value` file; keys are flag names. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// UCR dataset: a directory holding NAME_TRAIN.tsv, a `_TRAIN.tsv`
    /// file, or a name under `$UTSGAN_UCR_DIR`. Repeatable.
    #[arg(long)]
    pub dataset: Vec<String>,
    /// Class labels as written in the files, comma-separated. Default: all.
    #[arg(long = "class")]
    pub class: Option<String>,
    /// Also load the `_TEST.tsv` split.
    #[arg(long)]
    pub include_test: bool,
    /// Output root. Default: `$UTSGAN_OUT`, else `runs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Spectral {
    #[arg(long)]
    pub image_size: Option<String>,
    #[arg(long)]
    pub nfft: Option<String>,
    #[arg(long)]
    pub hop: Option<String>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub sel: Selection,
    #[command(flatten)]
    pub spectral: Spectral,
}

/// Which runs a command applies to.
#[derive(Debug, Args)]
pub struct RunFilter {
    /// `unified`, `serial`, or both comma-separated.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub sel: Selection,
    #[command(flatten)]
    pub runs: RunFilter,
    #[command(flatten)]
    pub spectral: Spectral,
    #[arg(long)]
    pub epochs: Option<String>,
    /// Comma-separated epochs, or `auto` for quarters of `--epochs`.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub n_critic: Option<String>,
    /// Gradient-penalty weight of both critics.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Latent dimension.
    #[arg(long)]
    pub dz: Option<String>,
    /// Runs trained concurrently.
    #[arg(long)]
    pub jobs: Option<String>,
    /// Continue each run from its latest checkpoint.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub sel: Selection,
    #[command(flatten)]
    pub runs_filter: RunFilter,
    /// Generation runs per checkpoint.
    #[arg(long)]
    pub runs: Option<String>,
    /// Synthetic series per run. Default: the class size, at least 128.
    #[arg(long)]
    pub samples: Option<String>,
    /// Epoch limit when the classifier has to be trained.
    #[arg(long)]
    pub fcn_epochs: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generated and real series per overlay.
    #[arg(long, default_value_t = 3)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file. Default: `generated/epoch<E>-seed<S>.tsv` in the run.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
