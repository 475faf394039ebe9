//! `psc`: ingest PDBML, build balanced datasets, train and apply the
//! sequence classifier.
//!
//! Machine-readable results are printed to stdout as a single JSON line;
//! logs go to stderr (`RUST_LOG` controls verbosity). Exit status: 0 on
//! success, 2 for data errors, 3 for numeric failures, 64 for usage errors.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "psc", version, about = "Protein sequence classification with a 1D CNN")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON file with flat configuration keys; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: one per core)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// RNG seed; falls back to the config file, then PSC_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract polymer sequences from a directory of PDBML files
    Ingest(IngestArgs),
    /// Build balanced, encoded train/test datasets from a sequence table
    Build(BuildArgs),
    /// Train the classifier and write the best checkpoint and metrics
    Train(TrainArgs),
    /// Score a checkpoint on an encoded dataset
    Evaluate(EvaluateArgs),
    /// Classify one sequence given as dash-joined codes (argument or stdin)
    Predict(PredictArgs),
    /// Print a checkpoint's header, layer lengths and parameter count
    Inspect(InspectArgs),
    /// Write a synthetic sequence table from a seeded Markov generator
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Directory searched recursively for *.xml and *.xml.gz
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    /// Output sequence table (gzip CSV)
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Sequence table written by `ingest` or `synth`
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Directory for train.csv, test.csv and vocab.tsv
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    dataset: DatasetFlags,
}

#[derive(Debug, Args)]
struct DatasetFlags {
    /// Fixed encoded length; longer sequences are dropped [default: 1500]
    #[arg(long)]
    max_len: Option<usize>,
    /// Do not add reversed copies of the positives
    #[arg(long)]
    no_reverse: bool,
    /// Smallest mutated fraction of a sequence [default: 0.05]
    #[arg(long)]
    mutation_frac_lo: Option<f64>,
    /// Largest mutated fraction of a sequence [default: 0.07]
    #[arg(long)]
    mutation_frac_hi: Option<f64>,
    /// Share of samples in the training split [default: 0.8]
    #[arg(long)]
    train_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory produced by `build`
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// Directory for best.psc, metrics.csv and metrics.svg
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    training: TrainingFlags,
}

#[derive(Debug, Args)]
struct ModelFlags {
    /// Embedding width [default: 32]
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Filters of the first kernel-3 convolution [default: 32]
    #[arg(long)]
    conv1_filters: Option<usize>,
    /// Filters of the second kernel-3 convolution [default: 32]
    #[arg(long)]
    conv2_filters: Option<usize>,
    /// First max-pool window [default: 5]
    #[arg(long)]
    pool1_window: Option<usize>,
    /// Filters of the kernel-5 convolution [default: 32]
    #[arg(long)]
    conv3_filters: Option<usize>,
    /// Second max-pool window [default: 5]
    #[arg(long)]
    pool2_window: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainingFlags {
    /// Samples per optimizer step [default: 50]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Passes over the training split [default: 50]
    #[arg(long)]
    epochs: Option<usize>,
    /// Probability at or above which a sample is called real [default: 0.5]
    #[arg(long)]
    threshold: Option<f64>,
    /// Adadelta learning-rate multiplier [default: 1.0]
    #[arg(long)]
    lr: Option<f64>,
    /// Adadelta decay [default: 0.95]
    #[arg(long)]
    rho: Option<f64>,
    /// Adadelta stabilizer [default: 1e-6]
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Encoded dataset (train.csv or test.csv from `build`)
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Probability at or above which a sample is called real [default: 0.5]
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Codes joined by '-', e.g. ALA-GLY-SER; read from stdin if omitted
    sequence: Option<String>,
    /// Probability at or above which the sequence is called real [default: 0.5]
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Checkpoint written by `train`
    checkpoint: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output sequence table (gzip CSV)
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Number of sequences
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Shortest sequence
    #[arg(long, default_value_t = 40)]
    min_len: usize,
    /// Longest sequence
    #[arg(long, default_value_t = 80)]
    max_len: usize,
    /// Probability of leaving the preferred transitions at each step
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

impl Cli {
    /// Flag values as a sparse config, to be laid over the config file.
    fn flag_overrides(&self) -> RunConfig {
        let mut c = RunConfig {
            seed: self.seed,
            jobs: self.jobs,
            ..RunConfig::default()
        };
        match &self.command {
            Command::Build(a) => {
                let d = &a.dataset;
                c.max_len = d.max_len;
                c.augment_reverse = d.no_reverse.then_some(false);
                c.mutation_frac_lo = d.mutation_frac_lo;
                c.mutation_frac_hi = d.mutation_frac_hi;
                c.train_ratio = d.train_ratio;
            }
            Command::Train(a) => {
                let (m, t) = (&a.model, &a.training);
                c.embed_dim = m.embed_dim;
                c.conv1_filters = m.conv1_filters;
                c.conv2_filters = m.conv2_filters;
                c.pool1_window = m.pool1_window;
                c.conv3_filters = m.conv3_filters;
                c.pool2_window = m.pool2_window;
                c.batch_size = t.batch_size;
                c.epochs = t.epochs;
                c.threshold = t.threshold;
                c.lr = t.lr;
                c.rho = t.rho;
                c.epsilon = t.epsilon;
            }
            Command::Evaluate(a) => c.threshold = a.threshold,
            Command::Predict(a) => c.threshold = a.threshold,
            Command::Ingest(_) | Command::Inspect(_) | Command::Synth(_) => {}
        }
        c
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Unreadable or unusable input named by the user.
    Input { path: PathBuf, message: String },
    Core(psc_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Input { .. } | CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<psc_core::Error> for CliError {
    fn from(e: psc_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.config.as_ref(), &cli.flag_overrides())?;
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&a.input, &a.output, &cfg),
        Command::Build(a) => commands::build(&a.input, &a.out_dir, &cfg),
        Command::Train(a) => commands::train(&a.data, &a.out_dir, &cfg),
        Command::Evaluate(a) => commands::evaluate(&a.checkpoint, &a.dataset, &cfg),
        Command::Predict(a) => commands::predict(&a.checkpoint, a.sequence.as_deref(), &cfg),
        Command::Inspect(a) => commands::inspect(&a.checkpoint),
        Command::Synth(a) => commands::synth(&a.output, a.count, a.min_len, a.max_len, a.noise, &cfg),
    }
}
