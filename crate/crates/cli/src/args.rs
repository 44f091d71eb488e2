use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cphmm::{ChainKind, Direction, Family};

#[derive(Debug, Parser)]
#[command(
    name = "cphmm",
    version,
    about = "Exact change-point inference with level- and segment-based hidden Markov models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit parameters by greedy initialisation followed by EM (JSON output).
    Fit(ModelArgs),
    /// State marginals and change-point posteriors for every position.
    Posterior(ModelArgs),
    /// Draw state paths from the posterior.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of paths to draw.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DirectionArg::Backward)]
        direction: DirectionArg,
    },
    /// Most probable state path and its log joint probability.
    Viterbi(ModelArgs),
    /// Cross-check the recursions against brute-force enumeration.
    #[command(hide = true)]
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Maximum number of enumerated state sequences.
        #[arg(long, default_value_t = 2_000_000)]
        budget: u128,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Single-column CSV file, or a builtin dataset: `coal` or `bt474`.
    #[arg(long)]
    pub data: String,

    #[arg(long = "model", value_enum)]
    pub kind: KindArg,

    #[arg(long, value_enum)]
    pub family: FamilyArg,

    /// Number of levels (level model) or segments (segment model).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub states: u32,

    #[arg(long, value_enum, default_value_t = InitArg::Greedy)]
    pub init: InitArg,

    /// Fixed means or rates, one per state. Skips EM.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub fix_params: Option<Vec<f64>>,

    /// Fixed standard deviation for the normal family (with --fix-params).
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Fixed level exit probabilities (with --fix-params).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub exit_probs: Option<Vec<f64>>,

    /// Segment transition probability; posteriors do not depend on it.
    #[arg(long)]
    pub eta: Option<f64>,

    /// One-based level of each greedy segment, e.g. 1,2,1,3.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub levels: Option<Vec<usize>>,

    /// Merge greedy segments whose means lie within this distance.
    #[arg(long)]
    pub merge_threshold: Option<f64>,

    /// Number of greedy segments searched with --merge-threshold.
    #[arg(long)]
    pub segments: Option<usize>,

    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl ModelArgs {
    pub fn states(&self) -> usize {
        self.states as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Level,
    Segment,
}

impl From<KindArg> for ChainKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Level => ChainKind::Level,
            KindArg::Segment => ChainKind::Segment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Poisson,
    Normal,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Poisson => Family::Poisson,
            FamilyArg::Normal => Family::NormalHomoscedastic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}
