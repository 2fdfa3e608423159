use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qhc", version, about = "Quantum kernel and variational classifiers on an exact statevector simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded two-Gaussian synthetic dataset.
    GenData(GenDataArgs),
    /// Reduce features by AUC selection or an autoencoder latent space.
    Reduce(ReduceArgs),
    /// Train on a fold split and score every test fold.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Score a saved model on test folds.
    Evaluate(EvaluateArgs),
    /// Write the kernel (Gram) matrix of a dataset.
    KernelDump(KernelDumpArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Distance between the class means.
    #[arg(long)]
    pub sep: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReduceMode {
    Auc,
    Ae,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AePreset {
    Latent16,
    Latent8,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub mode: ReduceMode,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Features kept in `auc` mode.
    #[arg(long)]
    pub k: Option<usize>,
    /// Latent width in `ae` mode.
    #[arg(long)]
    pub latent: Option<usize>,
    /// Hidden encoder layers in `ae` mode.
    #[arg(long, default_value_t = 1)]
    pub hidden: usize,
    /// Named architecture and training settings for 67-feature input.
    #[arg(long)]
    pub preset: Option<AePreset>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the output path with extension `ae_model.json`.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Defaults to the output path with extension `ae_mse.csv`.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub label_column: Option<String>,
}

/// Flags shared by every training command.
#[derive(Debug, Args)]
pub struct CommonTrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub fold_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Box constant; overrides the value derived from lambda.
    #[arg(long = "c")]
    pub c: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_passes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Amplitude,
    #[value(alias = "u2_reuploading")]
    U2Reuploading,
    #[value(alias = "pauli_zz")]
    PauliZz,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub map: Option<MapKind>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassicalKernel {
    Rbf,
    Linear,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Fidelity-kernel SVM.
    Qsvm {
        #[command(flatten)]
        common: CommonTrainArgs,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Classical kernel SVM baseline.
    Svm {
        #[command(flatten)]
        common: CommonTrainArgs,
        #[arg(long)]
        kernel: Option<ClassicalKernel>,
        /// RBF width; defaults to 1 / n_features.
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Variational classifier with data re-uploading.
    Vqc {
        #[command(flatten)]
        common: CommonTrainArgs,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub common: CommonTrainArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKernel {
    Quantum,
    Rbf,
    Linear,
}

#[derive(Debug, Args)]
pub struct KernelDumpArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "quantum")]
    pub kernel: DumpKernel,
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Use only the first N rows.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub label_column: Option<String>,
}
