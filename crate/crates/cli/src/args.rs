use std::path::PathBuf;

use ckm_core::kmedian::CoreKind;
use ckm_core::{ConstraintFamily, ParamMode, Problem};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ckm", version, about = "Constrained k-means and k-median via candidate lists")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CKM_THREADS")]
    pub threads: Option<usize>,

    /// Print tree statistics to standard error.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a candidate list and return the best constrained clustering.
    Solve(SolveArgs),
    /// Build and write a candidate list.
    List(ListArgs),
    /// Measure how often the list serves the optimal clustering (n <= 14).
    Verify(VerifyArgs),
    /// Emit the basis-vector lower-bound instance and its counting report.
    Lowerbound(LowerboundArgs),
    /// Sweep list parameters and tabulate time, list size and cost.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    KMeans,
    KMedian,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::KMeans => Problem::KMeans,
            ProblemArg::KMedian => Problem::KMedian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Practical,
}

impl From<ModeArg> for ParamMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => ParamMode::Exact,
            ModeArg::Practical => ParamMode::Practical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Default,
    Centroid,
    SubsetPoints,
}

impl From<GeneratorArg> for CoreKind {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Default => CoreKind::Default,
            GeneratorArg::Centroid => CoreKind::Centroid,
            GeneratorArg::SubsetPoints => CoreKind::SubsetPoints,
        }
    }
}

pub fn parse_constraint(s: &str) -> Result<ConstraintFamily, String> {
    serde_json::from_str(s).map_err(|e| format!("bad constraint JSON: {e}"))
}

/// List construction parameters shared by every command that builds lists.
#[derive(Debug, Clone, Args)]
pub struct ListOpts {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "k-means")]
    pub problem: ProblemArg,
    /// `exact` uses the guaranteed (and enormous) parameter values.
    #[arg(long, value_enum, default_value = "practical")]
    pub mode: ModeArg,
    /// N: points drawn per node (default ⌈8k/ε⌉).
    #[arg(long)]
    pub sample_size: Option<u64>,
    /// M: subset size and proxy copies per center (default ⌈2/ε⌉, at most N).
    #[arg(long)]
    pub subset_size: Option<usize>,
    /// Independent roots (default 2^k).
    #[arg(long)]
    pub repeats: Option<u64>,
    /// Subsets tried per node (default 64; `all` enumerates every subset).
    #[arg(long)]
    pub subset_budget: Option<String>,
    /// 1-median candidate generator for k-median.
    #[arg(long, value_enum, default_value = "default")]
    pub generator: GeneratorArg,
    /// k-median constant in N = ⌈αk/ε⁶⌉ (exact mode).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// k-median constant in M = ⌈β/ε⁴⌉ (exact mode).
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dataset: CSV, or JSON `{"points": [...]}` with a .json extension.
    #[arg(long)]
    pub input: PathBuf,
    /// Constraint family as JSON, e.g. '{"type":"r-gather","r":2}'.
    #[arg(long, value_parser = parse_constraint, default_value = r#"{"type":"unconstrained"}"#)]
    pub constraint: ConstraintFamily,
    #[command(flatten)]
    pub list: ListOpts,
    /// Output file (standard output if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub list: ListOpts,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the centers in the binary cache format.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_constraint, default_value = r#"{"type":"unconstrained"}"#)]
    pub constraint: ConstraintFamily,
    #[command(flatten)]
    pub list: ListOpts,
    /// Seeds `seed .. seed + trials`.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Comma-separated target labels; defaults to the brute-force optimum.
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<usize>>,
    /// Exit with status 5 when the success rate falls below this value.
    #[arg(long)]
    pub min_rate: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    /// Write the instance points as CSV here.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Random center sets and clusterings for the identity check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file (standard output if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_constraint, default_value = r#"{"type":"unconstrained"}"#)]
    pub constraint: ConstraintFamily,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sample_sizes: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub subset_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub budgets: Vec<u64>,
    #[arg(long)]
    pub repeats: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output (standard output if absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}
