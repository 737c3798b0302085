//! The `symtrace` command line: every pipeline stage as a subcommand over
//! line-delimited JSON files.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symtrace_core::problems::ProblemError;

pub use commands::{evaluate, run, Evaluation};
pub use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(
    name = "symtrace",
    version,
    about = "Symbolic ReAct trajectory pipeline"
)]
pub struct Cli {
    /// Pipeline configuration file (JSON). Flags override its values.
    #[arg(long, global = true, visible_alias = "backend")]
    pub config: Option<PathBuf>,
    /// Log at info level; twice for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic implication-chain problems with an even split.
    GenProblems(GenProblemsArgs),
    /// Sample trajectories for every problem.
    Sample(SampleArgs),
    /// Monte Carlo label every step of every trajectory.
    Label(LabelArgs),
    /// Check every step with the rule verifier.
    Verify(VerifyArgs),
    /// Score trajectories step by step.
    Score(ScoreArgs),
    /// Keep trajectories with all steps positive and a correct answer.
    Select(SelectArgs),
    /// Build preference pairs from trajectory scores.
    DpoPairs(DpoPairsArgs),
    /// Write PRM, SFT or DPO training records.
    Export(ExportArgs),
    /// Report accuracy and trajectory shape statistics.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    #[default]
    Native,
    Folio,
}

#[derive(Debug, Args)]
pub struct ProblemInput {
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: InputFormat,
}

#[derive(Debug, Args)]
pub struct GenProblemsArgs {
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// Problems per length.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: ProblemInput,
    /// Trajectories per problem.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub input: ProblemInput,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_prompt_chars: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub input: ProblemInput,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub input: ProblemInput,
    #[arg(long, value_enum)]
    pub scorer: Option<config::ScorerKind>,
    #[arg(long)]
    pub scorer_url: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub input: ProblemInput,
    /// Judge steps by PRM scores against the step threshold.
    #[arg(long, conflicts_with = "labels")]
    pub scores: Option<PathBuf>,
    /// Judge steps by Monte Carlo hard labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DpoPairsArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Prm,
    Sft,
    Dpo,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub kind: ExportKind,
    #[command(flatten)]
    pub input: ProblemInput,
    /// All sampled trajectories (prm, dpo).
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Step labels (prm).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Selected trajectories (sft).
    #[arg(long)]
    pub selected: Option<PathBuf>,
    /// Preference pairs (dpo).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub input: ProblemInput,
}

/// Input that parses but breaks a data invariant; exits with status 2.
#[derive(Debug)]
pub struct InvariantViolation(pub String);

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant violation: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

/// 2 for invariant violations anywhere in the error chain, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let invariant = err.chain().any(|e| {
        e.is::<InvariantViolation>()
            || matches!(
                e.downcast_ref::<ProblemError>(),
                Some(
                    ProblemError::InvariantViolation { .. }
                        | ProblemError::GenerationBudgetExceeded { .. }
                )
            )
    });
    if invariant {
        2
    } else {
        1
    }
}
