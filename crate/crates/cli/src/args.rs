use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sls_core::PenaltyKind;

#[derive(Debug, Parser)]
#[command(name = "sls", version, about = "Sparse Laplacian shrinkage regression")]
pub struct Cli {
    /// Worker threads for cross-validation and simulation.
    #[arg(long, global = true, env = "SLS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the predictor graph and export adjacency / Laplacian lists.
    Graph {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Edge list output (`j k weight sign`, 0-based).
        #[arg(long)]
        adjacency_out: Option<PathBuf>,
        /// Laplacian output (`j k value`, diagonal and upper triangle).
        #[arg(long)]
        laplacian_out: Option<PathBuf>,
    },
    /// Single fit at given (λ1, λ2).
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        penalty: PenaltyArgs,
        #[arg(long)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda2: f64,
        /// JSON output file (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Warm-started λ1 path at fixed λ2.
    Path {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        penalty: PenaltyArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda2: f64,
        /// Number of λ1 values, λ_max·2^{−k/2} for k = 0, 1, ….
        #[arg(long, default_value_t = 17)]
        n_lambda: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// V-fold cross-validation over the (λ1, λ2) grid, then refit at the best pair.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        penalty: PenaltyArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON fit output (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// TSV of the cross-validation surface.
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Oracle-estimator diagnostics for a given support.
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Support file: one 0-based index per line, optionally followed by the true coefficient.
        #[arg(long)]
        support: PathBuf,
        #[arg(long)]
        lambda2: f64,
        /// Also evaluate the sufficient conditions at this λ1.
        #[arg(long)]
        lambda1: Option<f64>,
        /// Noise level for the condition check (default: residual estimate from the oracle fit).
        #[arg(long, requires = "lambda1")]
        sigma: Option<f64>,
        #[arg(long, default_value_t = sls_core::penalty::DEFAULT_GAMMA)]
        gamma: f64,
        /// Tail probability in the condition check.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1e-8)]
        unbiased_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation study from a TOML or JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Table of medians (TSV, default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Per-replicate records (JSON).
        #[arg(long)]
        records: Option<PathBuf>,
        /// Override the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with the response and predictors.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column: header name or 0-based index.
    #[arg(long)]
    pub response: String,
    /// The first CSV row is data, not a header.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// n1 | n2 | n3 | n4 | threshold | signed-threshold | power | signed-power | partition | none
    #[arg(long, default_value = "n1")]
    pub scheme: String,
    /// Normal-scale cutoff for threshold schemes.
    #[arg(long, conflicts_with = "cutoff_r")]
    pub cutoff_c: Option<f64>,
    /// Correlation-scale cutoff for threshold schemes.
    #[arg(long)]
    pub cutoff_r: Option<f64>,
    /// Exponent for power schemes.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Block size for the partition scheme (consecutive columns).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Read the adjacency from an edge list instead of estimating it.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Use the normalized Laplacian.
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// mcp | scad | l1
    #[arg(long, default_value = "mcp")]
    pub penalty: PenaltyKind,
    #[arg(long, default_value_t = sls_core::penalty::DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}
