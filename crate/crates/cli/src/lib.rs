//! Subcommands of the `tabenc` binary. Each returns a [`CliError`] whose
//! exit code separates data errors (1) from usage errors (2).

mod commands;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{RunConfig, SEED_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    /// Standard output was closed by the reader (e.g. `| head`).
    #[error("output closed")]
    Closed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Closed => 0,
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }

    pub(crate) fn output(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::BrokenPipe => CliError::Closed,
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tabenc",
    version,
    about = "Table encoder pipeline: cleaning, pretraining, encoding and data generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean every CSV/JSON table in a directory.
    Clean(CleanArgs),
    /// Contrastively pretrain the encoder on a directory of tables.
    Pretrain(PretrainArgs),
    /// Write column embeddings of one table.
    Encode(EncodeArgs),
    /// Print the hybrid representation of one table.
    Serialize(SerializeArgs),
    /// Generate alignment samples as JSON Lines.
    GenAlign(GenAlignArgs),
    /// Run the token mask or the tuple filters over a samples file.
    Filter(FilterArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Directory of input tables (.csv with header row, or .json).
    #[arg(long)]
    pub input: PathBuf,
    /// Receives `reports/` and `tables/`.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON rule set; missing fields take defaults.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Rule ids to switch off (e.g. nan-row, horizontal-transpose).
    #[arg(long = "disable", value_name = "RULE")]
    pub disable: Vec<String>,
    /// Report unreadable inputs and carry on instead of failing.
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub tables: PathBuf,
    /// JSON run config (model, contrastive, adapter_steps, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Loss curve CSV (step,loss).
    #[arg(long)]
    pub losses: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured number of encoder steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Overrides the configured number of adapter proxy steps.
    #[arg(long)]
    pub adapter_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output JSON file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SerializeArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// `canonical` or one of the layout variants, e.g. `markdown+dtype+values+pk`.
    #[arg(long, default_value = "canonical")]
    pub variant: String,
    #[arg(long, default_value_t = 3)]
    pub values_per_col: usize,
    /// Enclose in `<tab>` ... `</tab>`.
    #[arg(long)]
    pub wrap: bool,
    /// Print the known variant ids and exit.
    #[arg(long)]
    pub list_variants: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignTask {
    ColumnPrediction,
    CellPrediction,
    /// Alternate the two tasks.
    Both,
}

#[derive(Debug, Args)]
pub struct GenAlignArgs {
    #[arg(long)]
    pub tables: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub task: AlignTask,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: PathBuf,
    /// Directory with column_prediction.txt and cell_prediction.txt.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterMode {
    Slm,
    Tuple,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Token scores (.csv or JSON Lines) or tuple samples (JSON Lines).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: FilterMode,
    #[arg(long, default_value_t = 0.6)]
    pub threshold: f64,
    /// Drop tokens whose score equals the threshold.
    #[arg(long)]
    pub strict: bool,
    /// Tuple rule ids to switch off.
    #[arg(long = "disable", value_name = "RULE")]
    pub disable: Vec<String>,
    /// Output JSON Lines; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Seeds the randomized shapes and values.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` and runs the command, writing human output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(CliError::output)?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    match cli.command {
        Command::Clean(a) => commands::clean(&a, out),
        Command::Pretrain(a) => commands::pretrain(&a, out),
        Command::Encode(a) => commands::encode(&a, out),
        Command::Serialize(a) => commands::serialize(&a, out),
        Command::GenAlign(a) => commands::gen_align(&a, out),
        Command::Filter(a) => commands::filter(&a, out),
        Command::Gradcheck(a) => commands::gradcheck(&a, out),
    }
}
