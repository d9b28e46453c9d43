use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invdet::contour::DEFAULT_EVAL_BUDGET;
use invdet::generate::GenSpec;
use invdet::verify::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "invdet",
    version,
    about = "Reciprocal determinants by balanced series and torus quadrature"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate 1/det(A) with one method and compare against LU.
    Eval(EvalArgs),
    /// Tabulate partial sums (series) or node refinements (contour) with their errors.
    Convergence(EvalArgs),
    /// Evaluate 1/det(M - lambda) by the expansion in 1/lambda.
    Charpoly(CharpolyArgs),
    /// Run the seeded property suite.
    Verify(VerifyArgs),
    /// Time every applicable method on one matrix.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Series,
    Relaxed,
    Tracelog,
    Contour,
    Lu,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Relaxed => "relaxed",
            Method::Tracelog => "tracelog",
            Method::Contour => "contour",
            Method::Lu => "lu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct MatrixSource {
    /// Matrix JSON file: {"k": .., "re": [[..]], "im": [[..]]}
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    /// Random 1 + M with |M| = frac/k, e.g. seed=7,k=3,frac=0.5
    #[arg(long, value_name = "SPEC", value_parser = parse_gen)]
    pub gen: Option<GenSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long, value_enum, default_value_t = Method::Series)]
    pub method: Method,
    /// Truncation degree (series, relaxed) or number of trace powers (tracelog).
    #[arg(long)]
    pub order: Option<u32>,
    /// Nodes per dimension for contour; the largest n for contour convergence.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub nodes: Option<u32>,
    /// Cap on evaluations (contour nodes, series terms).
    #[arg(long, default_value_t = DEFAULT_EVAL_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    /// Evaluate series methods outside their convergence gate.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct CharpolyArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    /// Spectral parameter as <re>,<im>.
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    pub lambda: invdet::Complex64,
    /// Highest j in the coefficient sequence c_j.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_EVAL_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub nodes: Option<u32>,
    #[arg(long, default_value_t = 5)]
    pub repeats: u32,
    #[arg(long, default_value_t = DEFAULT_EVAL_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[command(flatten)]
    pub output: Output,
}

fn parse_gen(s: &str) -> Result<GenSpec, String> {
    s.parse().map_err(|e: invdet::Error| e.to_string())
}

fn parse_lambda(s: &str) -> Result<invdet::Complex64, String> {
    invdet::io::parse_lambda(s).map_err(|e| e.to_string())
}
