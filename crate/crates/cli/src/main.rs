//! `keisler`: reproducible experiments over exact Keisler measures.
//!
//! Exit codes: 0 on success, 1 when a requested check fails, 2 on a usage or
//! input error.

mod commands;
mod input;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use input::{FormulaArgs, GroupSource, Source};
use report::{Output, Outcome};

#[derive(Debug, Parser)]
#[command(name = "keisler", version, about = "Exact Keisler measures over finite structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Output::Table)]
    output: Output,
    /// Seed for every random choice; recorded in the report
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run the subcommand's invariant suite instead
    #[arg(long, global = true)]
    selftest: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truth of a sentence, or the satisfying tuples of a formula
    Eval(EvalArgs),
    /// Values b -> mu(phi(x, b)) of a measure
    Measure(MeasureArgs),
    /// Product and Morley products of two measures
    Product(ProductArgs),
    /// Level buckets of a definability table
    Buckets(BucketArgs),
    /// Finite approximation of a measure by averages of points
    Approx(ApproxArgs),
    /// Shatter function and VC dimension of a formula
    Vc(VcArgs),
    /// Definability certificate from an approximating point list
    Certify(CertifyArgs),
    /// Checks on Paley graphs
    Paley(PaleyArgs),
    /// Tail stability of a quantity along a sequence of structures
    Seq(SeqArgs),
    /// Subgroups and idempotent measures of a finite group
    Group(GroupArgs),
    /// Convolution powers of a measure on a finite group
    Dynamics(DynamicsArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: Source,
    /// Formula; its free variables are listed in order of first occurrence
    #[arg(long)]
    pub formula: Option<String>,
    /// Fail unless the sentence has this truth value
    #[arg(long)]
    pub expect: Option<bool>,
    /// Most satisfying tuples to list
    #[arg(long, default_value_t = 1000)]
    pub limit: usize,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// Measure file; defaults to the counting measure
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Only this parameter tuple, e.g. `1,2`
    #[arg(long)]
    pub params: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProductCheck {
    /// The two Morley orders agree
    Commute,
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// Measure in the object variables; defaults to counting
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// Measure in the parameter variables; defaults to a random measure from the seed
    #[arg(long)]
    pub nu: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub check: Option<ProductCheck>,
}

#[derive(Debug, Args)]
pub struct BucketArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Granularity
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub source: Source,
    /// Formula; repeat for a simultaneous approximation to within 1/count
    #[arg(long)]
    pub formula: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub objects: Vec<String>,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Target sup-error, e.g. `1/10`
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long, default_value = "greedy")]
    pub strategy: String,
    /// Search rounds
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_points: usize,
}

#[derive(Debug, Args)]
pub struct VcArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub formula: FormulaArgs,
    /// Largest set size searched
    #[arg(long, default_value_t = 3)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub formula: FormulaArgs,
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Granularity
    #[arg(long)]
    pub n: Option<usize>,
    /// Point list `a;b;...` (tuples comma separated); searched for when absent
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaleyCheck {
    Degree,
    Extension,
    Obstruction,
    QuasiRandom,
}

#[derive(Debug, Args)]
pub struct PaleyArgs {
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long, value_enum, default_value = "degree")]
    pub check: PaleyCheck,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Target edge density for the obstruction report
    #[arg(long, default_value = "1/3")]
    pub p: String,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Vertices a pattern vertex must be adjacent to
    #[arg(long, default_value = "0")]
    pub adjacent: String,
    /// Vertices a pattern vertex must avoid
    #[arg(long, default_value = "1")]
    pub non_adjacent: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityKind {
    Sentence,
    Counting,
    Morley,
    Extension,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// Sequence manifest (JSON array of structure files or {"paley": q})
    #[arg(long, visible_alias = "input")]
    pub manifest: Option<PathBuf>,
    /// Paley orders, e.g. `5,13,17`
    #[arg(long, value_delimiter = ',')]
    pub qs: Vec<u64>,
    #[arg(long, value_enum, default_value = "counting")]
    pub quantity: QuantityKind,
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub objects: Vec<String>,
    /// Integrate in the order nu then counting
    #[arg(long)]
    pub reverse: bool,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Tolerance; repeatable
    #[arg(long, default_values_t = vec!["1/10".to_string()])]
    pub epsilon: Vec<String>,
    /// Fail unless the tail is stable at every tolerance
    #[arg(long)]
    pub require_stable: bool,
    /// Coin-flip target p^n (1-p)^m for this bias instead of a sequence
    #[arg(long)]
    pub bias: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    #[command(flatten)]
    pub source: GroupSource,
    /// List the Haar measure of every subgroup and check each is idempotent
    #[arg(long)]
    pub classify_idempotents: bool,
    /// Classify this measure
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// With --measure, fail unless it is idempotent
    #[arg(long)]
    pub require_idempotent: bool,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub source: GroupSource,
    /// Starting measure; defaults to a random measure from the seed
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Most convolution powers computed
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value = "1/1000")]
    pub tol: String,
    /// Also track the Cesàro averages
    #[arg(long)]
    pub cesaro: bool,
    /// Fail unless the orbit converges
    #[arg(long)]
    pub require_convergence: bool,
}

fn dispatch(cli: &Cli) -> Outcome {
    let seed = cli.seed;
    if cli.selftest {
        return Ok(selftest::run(command_name(&cli.command), seed));
    }
    match &cli.command {
        Command::Eval(a) => commands::eval(a, seed),
        Command::Measure(a) => commands::measure(a, seed),
        Command::Product(a) => commands::product_cmd(a, seed),
        Command::Buckets(a) => commands::buckets(a, seed),
        Command::Approx(a) => commands::approx(a, seed),
        Command::Vc(a) => commands::vc(a, seed),
        Command::Certify(a) => commands::certify(a, seed),
        Command::Paley(a) => commands::paley(a, seed),
        Command::Seq(a) => commands::seq(a, seed),
        Command::Group(a) => commands::group(a, seed),
        Command::Dynamics(a) => commands::dynamics(a, seed),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eval(_) => "eval",
        Command::Measure(_) => "measure",
        Command::Product(_) => "product",
        Command::Buckets(_) => "buckets",
        Command::Approx(_) => "approx",
        Command::Vc(_) => "vc",
        Command::Certify(_) => "certify",
        Command::Paley(_) => "paley",
        Command::Seq(_) => "seq",
        Command::Group(_) => "group",
        Command::Dynamics(_) => "dynamics",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.output));
            if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(2)
        }
    }
}
