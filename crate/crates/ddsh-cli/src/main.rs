//! Command-line pipeline for deep discrete supervised hashing: generate
//! or load datasets, train hashing models, encode points, and evaluate
//! Hamming-space retrieval.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error,
//! 3 divergence. Logging is controlled by `DDSH_LOG` (error, info, debug).

mod commands;
mod config;
mod gradcheck;
mod jsondoc;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ddsh::dataset::FeatureFormat;
use ddsh::trainer::Variant;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Divergence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Divergence(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ddsh",
    version,
    about = "Deep discrete supervised hashing: train, encode, and evaluate binary codes for Hamming-space retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Knobs shared by train and baseline; every flag overrides the
/// corresponding key of the TOML config file.
#[derive(Args, Debug, Clone)]
struct TrainArgs {
    /// TOML config file with flat keys mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature file (.csv for text, anything else binary)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Label file (one row per point, ';'-separated ids)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output packed codes file for the training set
    #[arg(long)]
    codes: Option<PathBuf>,
    /// Output loss-trace JSON file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Code length in bits
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampled-set size per outer iteration
    #[arg(long)]
    omega: Option<usize>,
    /// Outer iterations
    #[arg(long)]
    tout: Option<usize>,
    /// Inner epochs per outer iteration
    #[arg(long)]
    tin: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Minibatch size
    #[arg(long)]
    batch: Option<usize>,
}

impl TrainArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let overrides = RunConfig {
            features: self.features.clone(),
            labels: self.labels.clone(),
            model: self.model.clone(),
            codes: self.codes.clone(),
            out: self.out.clone(),
            bits: self.bits,
            seed: self.seed,
            omega: self.omega,
            tout: self.tout,
            tin: self.tin,
            lr: self.lr,
            batch: self.batch,
            ..Default::default()
        };
        Ok(base.merged(overrides))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a hashing model, writing model, codes, and loss trace
    Train(TrainArgs),
    /// Encode a feature file with a trained model
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Output packed codes file
        #[arg(long)]
        codes: PathBuf,
    },
    /// Evaluate query codes against database codes
    Eval {
        /// Database codes file
        #[arg(long)]
        codes: PathBuf,
        /// Database labels file
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        query_codes: PathBuf,
        #[arg(long)]
        query_labels: PathBuf,
        /// Hamming radius for the lookup task (repeatable)
        #[arg(long)]
        radius: Vec<u32>,
        /// Cutoff for top-k precision (repeatable)
        #[arg(long)]
        k: Vec<usize>,
        /// Truncate average precision to the top K returned neighbors
        #[arg(long)]
        map_at: Option<usize>,
        /// Output metrics JSON file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a baseline variant instead of the full model
    Baseline {
        #[command(subcommand)]
        which: BaselineCommand,
    },
    /// Validate analytic gradients against finite differences
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent network draws to check
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Corrupt one gradient entry to confirm the check fails (test hook)
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Model diagnostics
    Diag {
        #[command(subcommand)]
        which: DiagCommand,
    },
    /// Generate a synthetic class-blob dataset
    GenBlobs {
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output feature file
        #[arg(long)]
        features: PathBuf,
        /// Output label file
        #[arg(long)]
        labels: PathBuf,
        /// Feature file encoding
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

#[derive(Subcommand, Debug)]
enum BaselineCommand {
    /// Random projection codes, no training
    Lsh(TrainArgs),
    /// Full procedure with hidden layers frozen at initialization
    Ddsh0(TrainArgs),
}

#[derive(Subcommand, Debug)]
enum DiagCommand {
    /// Histogram of |tanh(F(x))| showing how well the head saturates
    TanhHist {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Output JSON file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => commands::cmd_train(&args.resolve()?, None),
        Command::Encode {
            model,
            features,
            codes,
        } => commands::cmd_encode(&model, &features, &codes),
        Command::Eval {
            codes,
            labels,
            query_codes,
            query_labels,
            radius,
            k,
            map_at,
            out,
        } => commands::cmd_eval(
            &codes,
            &labels,
            &query_codes,
            &query_labels,
            radius,
            k,
            map_at,
            out.as_deref(),
        ),
        Command::Baseline { which } => match which {
            BaselineCommand::Lsh(args) => {
                commands::cmd_train(&args.resolve()?, Some(Variant::Lsh))
            }
            BaselineCommand::Ddsh0(args) => {
                commands::cmd_train(&args.resolve()?, Some(Variant::Ddsh0))
            }
        },
        Command::Gradcheck {
            seed,
            trials,
            corrupt,
        } => commands::cmd_gradcheck(seed, trials, corrupt),
        Command::Diag { which } => match which {
            DiagCommand::TanhHist {
                model,
                features,
                bins,
                out,
            } => commands::cmd_diag_tanh(&model, &features, bins, out.as_deref()),
        },
        Command::GenBlobs {
            classes,
            per_class,
            dim,
            spread,
            seed,
            features,
            labels,
            format,
        } => {
            let format = match format.as_str() {
                "csv" => FeatureFormat::Csv,
                "binary" => FeatureFormat::Binary,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown feature format '{other}' (expected csv or binary)"
                    )))
                }
            };
            commands::cmd_gen_blobs(
                classes, per_class, dim, spread, seed, &features, &labels, format,
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DDSH_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
