//! `featprop` command-line pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod manifest;

use config::{GraphArgs, PushArgs, ReuseArgs, SplitArgs, TrainArgs};

/// Failures mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or mutually inconsistent inputs (exit 1).
    Usage(String),
    /// The verification criterion was not met (exit 2).
    Verification(String),
    /// Unreadable, unwritable or malformed files (exit 3).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<featprop::Error> for CliError {
    fn from(e: featprop::Error) -> Self {
        use featprop::Error as E;
        match e {
            E::Io { .. } | E::Parse { .. } | E::Format(_) | E::NonFinite { .. } => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "featprop",
    version,
    about = "Approximate feature propagation for decoupled graph neural networks"
)]
struct Cli {
    /// `key = value` file with defaults for any tunable flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Style {
    Correlated,
    Orthogonal,
    Independent,
    Signed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    MultiClass,
    MultiLabel,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the embedding matrix from a graph and an attribute matrix.
    Precompute {
        /// Edge list (`u v` per line) or binary graph cache.
        #[arg(long)]
        graph: PathBuf,
        /// Attribute matrix container.
        #[arg(long)]
        features: PathBuf,
        /// Embedding matrix container to write.
        #[arg(long)]
        out: PathBuf,
        /// Manifest path [default: <out>.manifest.json].
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Also write a per-part CSV of work counters.
        #[arg(long = "parts-csv")]
        parts_csv: Option<PathBuf>,
        #[command(flatten)]
        graph_args: GraphArgs,
        #[command(flatten)]
        push: PushArgs,
        #[command(flatten)]
        reuse: ReuseArgs,
    },
    /// Compare the approximation against the exact oracle (CSV report).
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Seeded runs per column.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// CSV report path [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        graph_args: GraphArgs,
        #[command(flatten)]
        push: PushArgs,
        #[command(flatten)]
        reuse: ReuseArgs,
    },
    /// Train a feed-forward classifier on an embedding matrix.
    Train {
        #[arg(long)]
        embedding: PathBuf,
        /// `node class` or `node c1,c2,...` lines.
        #[arg(long)]
        labels: PathBuf,
        /// Model checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Force the task instead of inferring it from the label file.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Predict classes for every node; scores a split when labels are given.
    Predict {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Predictions file, one `node classes` line per node.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        /// Split to score.
        #[arg(long = "split", value_enum, default_value = "test")]
        split_name: SplitName,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Time precomputation with and without reuse on synthetic inputs (CSV).
    Bench {
        /// Node counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1000usize, 10000])]
        nodes: Vec<usize>,
        /// Average undirected degree.
        #[arg(long, default_value_t = 10.0)]
        degree: f64,
        #[arg(long = "num-features", default_value_t = 32)]
        num_features: usize,
        #[arg(long, value_enum, default_value = "correlated")]
        style: Style,
        /// Weight of the shared prototype in correlated columns.
        #[arg(long, default_value_t = 0.9)]
        correlation: f64,
        /// Number of prototypes for correlated columns.
        #[arg(long, default_value_t = 4)]
        sources: usize,
        /// Non-zero fraction for sparse styles.
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// CSV path [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        push: PushArgs,
        #[command(flatten)]
        reuse: ReuseArgs,
    },
    /// Write a synthetic planted-partition dataset.
    Generate {
        #[arg(long, default_value_t = 1000)]
        nodes: usize,
        #[arg(long, default_value_t = 10.0)]
        degree: f64,
        #[arg(long = "num-features", default_value_t = 16)]
        num_features: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        /// Fraction of edges that ignore the planted blocks.
        #[arg(long, default_value_t = 0.1)]
        mixing: f64,
        #[arg(long, value_enum, default_value = "independent")]
        style: Style,
        /// Value added to a column on the nodes of its class.
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for graph.txt, features.bin and labels.txt.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Convert an attribute matrix between whitespace text rows and the container.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write text rows instead of reading them.
        #[arg(long = "to-text")]
        to_text: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Precompute {
            graph,
            features,
            out,
            manifest,
            parts_csv,
            graph_args,
            push,
            reuse,
        } => commands::precompute_cmd(
            &file,
            &commands::Inputs {
                graph,
                features,
                graph_args,
                push,
                reuse,
            },
            &out,
            manifest.as_deref(),
            parts_csv.as_deref(),
        ),
        Command::Verify {
            graph,
            features,
            seeds,
            out,
            manifest,
            graph_args,
            push,
            reuse,
        } => commands::verify(
            &file,
            &commands::Inputs {
                graph,
                features,
                graph_args,
                push,
                reuse,
            },
            seeds,
            out.as_deref(),
            manifest.as_deref(),
        ),
        Command::Train {
            embedding,
            labels,
            out,
            task,
            manifest,
            split,
            train,
        } => commands::train(
            &file,
            &embedding,
            &labels,
            &out,
            task,
            manifest.as_deref(),
            &split,
            &train,
        ),
        Command::Predict {
            embedding,
            model,
            out,
            labels,
            task,
            split_name,
            manifest,
            split,
        } => commands::predict(
            &file,
            &embedding,
            &model,
            &out,
            labels.as_deref(),
            task,
            split_name,
            manifest.as_deref(),
            &split,
        ),
        Command::Bench {
            nodes,
            degree,
            num_features,
            style,
            correlation,
            sources,
            density,
            out,
            push,
            reuse,
        } => commands::bench(
            &file,
            &commands::BenchSpec {
                nodes,
                degree,
                num_features,
                style,
                correlation,
                sources,
                density,
            },
            &push,
            &reuse,
            out.as_deref(),
        ),
        Command::Generate {
            nodes,
            degree,
            num_features,
            classes,
            mixing,
            style,
            signal,
            seed,
            out_dir,
        } => commands::generate(
            nodes,
            degree,
            num_features,
            classes,
            mixing,
            style,
            signal,
            seed,
            &out_dir,
        ),
        Command::Convert { input, out, to_text } => commands::convert(&input, &out, to_text),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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
