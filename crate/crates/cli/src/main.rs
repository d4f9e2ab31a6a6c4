//! `whitney-ext`: extension runs, property suites and the case catalog.
//!
//! Exit codes: 0 success, 1 a criterion failed, 2 bad input.

mod commands;
mod dataset;

use clap::{Args, Parser, Subcommand, ValueEnum};
use whitney_ext::TransitionProfile;

#[derive(Parser)]
#[command(name = "whitney-ext", version, about = "Whitney-type extension of first-order jets from closed sets")]
struct Cli {
    /// Worker threads for grid sampling and suite estimation.
    #[arg(long, global = true, env = "WHITNEY_EXT_THREADS")]
    threads: Option<usize>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL", global = true)]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the extension on a grid and write CSV.
    Extend(ExtendArgs),
    /// Run property suites on a case or dataset.
    Check(CheckArgs),
    /// List or describe built-in cases.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Partition diagnostics.
    Partition {
        #[command(subcommand)]
        action: PartitionAction,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON jet dataset.
    #[arg(long)]
    input: Option<String>,
    /// Catalog case name.
    #[arg(long)]
    case: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bump {
    Exp,
    Poly2,
    Poly4,
}

impl Bump {
    fn profile(self) -> TransitionProfile {
        match self {
            Bump::Exp => TransitionProfile::ExpSmooth,
            Bump::Poly2 => TransitionProfile::PolySmooth(2),
            Bump::Poly4 => TransitionProfile::PolySmooth(4),
        }
    }
}

#[derive(Args)]
struct ExtendArgs {
    #[command(flatten)]
    source: Source,
    /// Grid box and resolution, e.g. `lo=-1,-1 hi=1,1 res=32,32`.
    #[arg(long, num_args = 1..=3, required = true, value_name = "SPEC")]
    grid: Vec<String>,
    /// Operator field: nearest, averaged, or external:FILE.
    #[arg(long, default_value = "nearest")]
    afield: String,
    #[arg(long, value_enum, default_value = "exp")]
    bump: Bump,
    /// Add Jacobian columns.
    #[arg(long)]
    jacobian: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    /// Accepted for uniformity; extension runs draw no random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
    /// partition, derivative, hoelder, strict, lipschitz, contracts, cones or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exp")]
    bump: Bump,
    /// JSON report file.
    #[arg(long)]
    report: Option<String>,
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Show { name: String },
}

#[derive(Subcommand)]
enum PartitionAction {
    /// Measure C1, C2 and the partition properties on off-set samples.
    Info {
        /// JSON set descriptor file, or `catalog:NAME`.
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "exp")]
        bump: Bump,
        #[arg(long)]
        report: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match commands::run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}
