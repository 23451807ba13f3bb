//! `maxlab`: maximal operators, covering checks and inequality suites on
//! grids.
//!
//! Exit codes: 0 success, 1 invariant or baseline failure, 2 usage or input
//! error.

mod commands;
mod config;
mod family;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "maxlab", version, about = "Weighted maximal inequalities on dyadic grids")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file of default flags for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Apply a maximal operator to a grid file.
    Compute(ComputeArgs),
    /// Run a covering selection and its checkers.
    Covering(CoveringArgs),
    /// Run a seed-pinned inequality suite.
    Verify(VerifyArgs),
    /// Worst directional weak-type ratio against ln N.
    #[command(name = "sweep-n")]
    SweepN(SweepArgs),
    /// Search for large Problem 1.1 ratios.
    #[command(name = "search-p11")]
    SearchP11(SearchArgs),
    /// Write a zoo weight or function to a grid file.
    #[command(name = "make-weight")]
    MakeWeight(MakeWeightArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Cube maximal (axis squares, or dyadic with --dyadic).
    Hl,
    Strong,
    Directional,
    /// M_R(M_Q w).
    W,
    /// M_Sigma(M_Q w).
    WDirectional,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Double,
    Exact,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[arg(long, value_enum)]
    pub op: Op,
    /// Grid file, CSV or JSON by extension.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub dyadic: bool,
    #[arg(long = "N")]
    pub n_directions: Option<usize>,
    #[arg(long, value_enum, default_value_t = Backend::Double)]
    pub backend: Backend,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoveringMode {
    Dyadic,
    Directional,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    All,
    Certificates,
    Inclusion,
    Multiplicity,
    Structure,
    Covering,
}

#[derive(Args, Debug)]
pub struct CoveringArgs {
    #[arg(long, value_enum)]
    pub mode: CoveringMode,
    /// Family file; see `--random` for a generated one.
    #[arg(long, conflicts_with = "random")]
    pub family: Option<PathBuf>,
    /// Generate this many random rectangles instead of reading a file.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Directions for generated directional families.
    #[arg(long = "N", default_value_t = 16)]
    pub n_directions: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub check: Vec<CheckKind>,
    /// Also test the two-rectangle lemma on this many random instances.
    #[arg(long)]
    pub lemma31: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyTag {
    Fs,
    Thm12,
    Cor13,
    Thm14,
    Cor15,
    #[value(name = "sweep-n")]
    SweepN,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub tag: VerifyTag,
    /// Defaults to 1000, or 50 for sweep-n.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exponents for cor13 / cor15.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Direction counts for thm14 / cor15.
    #[arg(long = "N", value_delimiter = ',')]
    pub n_directions: Option<Vec<usize>>,
    /// Direction counts for sweep-n.
    #[arg(long = "Ns", value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Directory for the JSON-lines and summary CSV files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Baseline file to check worst ratios against.
    #[arg(long)]
    pub baselines: Option<PathBuf>,
    /// Record this run's worst ratios into the baseline file.
    #[arg(long, requires = "baselines")]
    pub write_baselines: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long = "Ns", value_delimiter = ',', default_value = "16,32,64,128")]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SweepResult JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub baselines: Option<PathBuf>,
    #[arg(long, requires = "baselines")]
    pub write_baselines: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Strong,
    Weak,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Form::Strong)]
    pub form: Form,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory to write the best `f.csv` and `w.csv` into.
    #[arg(long)]
    pub save_grids: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MakeWeightArgs {
    /// Weight spec, e.g. `lognormal:seed=42,sigma=1.5`.
    #[arg(long, required_unless_present = "function", conflicts_with = "function")]
    pub weight: Option<String>,
    /// Function spec, e.g. `disc:8,8,3`.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also print the A_p* estimate of the grid for this p.
    #[arg(long)]
    pub apstar: Option<f64>,
    /// Scan dyadic rectangles only for --apstar.
    #[arg(long)]
    pub dyadic: bool,
}

/// Failure classes of a command.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or parameters: exit 2.
    Usage(anyhow::Error),
    /// Argument error already printed by the parser: exit 2.
    Parse,
    /// Checks or baselines failed: exit 1.
    Invariant(Vec<String>),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("MAXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("MAXLAB_THREADS must be a nonnegative integer, got {v:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run() -> Result<(), Failure> {
    let args = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            e.print()?;
            // Help and version requests exit 0; everything else is usage.
            if code == 0 {
                return Ok(());
            }
            return Err(Failure::Parse);
        }
    };
    init_threads()?;
    match cli.command {
        Command::Compute(a) => commands::compute(&a),
        Command::Covering(a) => commands::covering(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::SweepN(a) => commands::sweep(&a),
        Command::SearchP11(a) => commands::search(&a),
        Command::MakeWeight(a) => commands::make_weight(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msgs)) => {
            for m in msgs {
                eprintln!("FAILED: {m}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Parse) => ExitCode::from(2),
    }
}
