use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "revjuggle", version, about = "Reverse juggling Markov chains: exact stationary laws, verification and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the stationary law from its closed form
    Stationary(CommonArgs),
    /// Run exact checks of the closed forms against the kernels
    Verify(VerifyArgs),
    /// Sample a trajectory and compare occupancy with the stationary law
    Simulate(CommonArgs),
    /// Print a partition function with its factors
    Partition(CommonArgs),
    /// Export the full transition matrix of a finite chain
    Matrix(CommonArgs),
    /// Run the random matrix model and compare both projections with their kernels
    Matrixmodel(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Rjmc,
    Irjmc,
    Mrjmc,
    Imrjmc,
    Matrixmodel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with any of the options below; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub chain: Option<ChainKind>,
    /// Number of sites of the finite single-species chain
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of balls
    #[arg(long)]
    pub b: Option<usize>,
    /// Label multiplicities, e.g. 2,1,1
    #[arg(long)]
    pub content: Option<String>,
    /// Jump probabilities x_0,...,x_b as fractions or decimals
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Start probabilities s_1,...,s_b
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Non-bump probabilities alpha_1,...
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Field size or Knutson parameter (a prime for the matrix model)
    #[arg(long)]
    pub q: Option<u32>,
    /// Use the q-parameters of the matrix model
    #[arg(long)]
    pub knutson: bool,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Largest position listed for chains on the half-line
    #[arg(long)]
    pub cutoff: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, written atomically; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest state space to enumerate
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Check the closed forms at deliberately altered parameters (negative control)
    #[arg(long)]
    pub perturb: bool,
}
