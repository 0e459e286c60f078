use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finex_core::{Backend, Metric};

#[derive(Debug, Parser)]
#[command(
    name = "finex",
    version,
    about = "Build and query FINEX density-clustering indexes"
)]
pub struct Cli {
    /// Print a machine-readable JSON summary instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index for a generating pair (epsilon, MinPts).
    Build(BuildArgs),
    /// Query an index with epsilon* <= epsilon or MinPts* >= MinPts.
    Query(QueryArgs),
    /// Compare FINEX and OPTICS border recall against exact DBSCAN.
    Compare(CompareArgs),
    /// Serve an index over HTTP.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Sets,
    Vectors,
    Matrix,
}

impl DataKind {
    pub fn for_metric(metric: Metric) -> Self {
        match metric {
            Metric::Jaccard => DataKind::Sets,
            Metric::Euclidean => DataKind::Vectors,
            Metric::ExplicitMatrix => DataKind::Matrix,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Jaccard,
    Euclidean,
    Matrix,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Jaccard => Metric::Jaccard,
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Matrix => Metric::ExplicitMatrix,
        }
    }
}

/// How to read the input file.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,

    /// Standardize vector dimensions to zero mean and unit variance.
    #[arg(long)]
    pub standardize: bool,

    /// Skip the first CSV line.
    #[arg(long)]
    pub header: bool,

    /// Range-query backend (brute-force, inverted-list, kd-tree, matrix).
    #[arg(long)]
    pub backend: Option<Backend>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, value_enum)]
    pub data: DataKind,

    #[arg(long, value_enum)]
    pub metric: MetricArg,

    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,

    #[arg(long)]
    pub minpts: u64,

    /// Shuffle the outer-loop visiting order with this seed (default: id order).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["epsilon_star", "minpts_star"])))]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,

    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, allow_negative_numbers = true, conflicts_with = "minpts_star")]
    pub epsilon_star: Option<f64>,

    #[arg(long)]
    pub minpts_star: Option<u64>,

    /// Linear scan only; no candidate verification.
    #[arg(long)]
    pub approx: bool,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    /// Comma-separated query radii, each at most --epsilon.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub epsilon_stars: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: PathBuf,

    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value_t = 8080)]
    pub port: u16,

    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,

    /// Build the OPTICS baseline at startup so /api/compare is available.
    #[arg(long)]
    pub with_baselines: bool,
}
