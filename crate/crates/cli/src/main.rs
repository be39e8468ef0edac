//! `qm` — counting quasimorphisms on hyperbolic graphs from the
//! command line.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, malformed
//! configuration — the message names the offending field), 2 when a
//! computation fails (budget exhausted, oracle mismatch, vertex outside
//! the model).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use qm_cli::config::{Operation, PairMode, RunConfig, TripleMode};
use qm_cli::pipelines;

#[derive(Parser)]
#[command(
    name = "qm",
    version,
    about = "Counting quasimorphisms on hyperbolic graphs: evaluation, defects, growth, \
             independence certificates, and WPD probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Space specification: f<rank>:radius=<r> or farey:q=<bound>[,center=<p/q>].
    /// Required everywhere except `certificate`, which computes exact
    /// tree values without a finite model.
    #[arg(long)]
    space: Option<String>,
    /// RNG seed for the sampling modes; recorded in every artifact
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON artifact here
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate h_w(g) at the basepoint
    Eval {
        #[command(flatten)]
        common: Common,
        /// Pattern word w (letters a..i, inverses A..I)
        #[arg(long)]
        w: String,
        /// Credit W per copy, 0 < W < |w|
        #[arg(long = "W", default_value_t = 1)]
        credit: u32,
        /// Group element to evaluate at
        #[arg(long)]
        g: String,
        /// Basepoint word x₀ (default: the identity vertex)
        #[arg(long)]
        basepoint: Option<String>,
        /// Re-derive the value with the walk-enumeration oracle; any
        /// mismatch aborts with exit code 2
        #[arg(long)]
        oracle_check: bool,
    },
    /// Maximum defect |h(g₁g₂) − h(g₁) − h(g₂)| over element pairs
    Defect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: String,
        #[arg(long = "W", default_value_t = 1)]
        credit: u32,
        /// Pair selection: all | sample
        #[arg(long, default_value = "all")]
        pairs: String,
        /// Word-length bound for the element enumeration
        #[arg(long)]
        bound: usize,
        /// Number of pairs when sampling
        #[arg(long)]
        count: Option<usize>,
    },
    /// h(fⁿ) for n = 1..n_max with the least-squares slope
    Growth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: String,
        #[arg(long = "W", default_value_t = 1)]
        credit: u32,
        /// The element whose powers are evaluated
        #[arg(long)]
        f: String,
        #[arg(long)]
        n_max: u32,
        /// Write the (n, h) rows as CSV here
        #[arg(long)]
        csv: Option<String>,
    },
    /// Linear-independence certificate for a quasimorphism family
    Certificate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        /// Exponent schedule: "default" or quadruples "1,2,3,4;5,6,7,8"
        #[arg(long, default_value = "default")]
        schedule: String,
        /// Number of family members
        #[arg(long)]
        count: usize,
        /// Power a_i per member (default: all 1)
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<u32>>,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        /// Write the human-readable summary table here
        #[arg(long)]
        markdown: Option<String>,
    },
    /// Coarse-stabilizer cardinality for the WPD condition
    Wpd {
        #[command(flatten)]
        common: Common,
        /// Matrix [[a,b],[c,d]] acting on the Farey graph
        #[arg(long)]
        g: String,
        /// Base slope p/q (or 1/0 for ∞)
        #[arg(long)]
        x0: String,
        /// Closeness constant C
        #[arg(long)]
        c: u32,
        /// Power N in the two-point condition
        #[arg(long = "n")]
        n_power: u32,
        /// Matrix-entry bound for the element enumeration
        #[arg(long)]
        enum_bound: usize,
    },
    /// Thin-triangle constant of the model space
    Delta {
        #[command(flatten)]
        common: Common,
        /// Triple selection: all | sample
        #[arg(long, default_value = "all")]
        triples: String,
        /// Number of triples when sampling
        #[arg(long)]
        count: Option<usize>,
    },
    /// Exact joint stabilizer of two Farey vertices
    FareyStab {
        #[command(flatten)]
        common: Common,
        /// First slope
        #[arg(long)]
        a: String,
        /// Second slope
        #[arg(long)]
        b: String,
        /// Matrix-entry bound for the element enumeration
        #[arg(long)]
        enum_bound: usize,
    },
    /// Run a pipeline from a JSON configuration file
    Run {
        /// Path to a JSON document mirroring the run configuration
        #[arg(long)]
        config: PathBuf,
    },
}

fn usage_err<T>(field: &str, detail: impl std::fmt::Display) -> Result<T, String> {
    Err(format!("field `{field}`: {detail}"))
}

/// Map the parsed command line onto the run configuration. Errors here
/// are usage errors.
fn build_config(command: Command) -> Result<RunConfig, String> {
    let (common, op, csv, markdown) = match command {
        Command::Eval {
            common,
            w,
            credit,
            g,
            basepoint,
            oracle_check,
        } => (
            common,
            Operation::Eval {
                w,
                credit,
                g,
                basepoint,
                oracle_check,
            },
            None,
            None,
        ),
        Command::Defect {
            common,
            w,
            credit,
            pairs,
            bound,
            count,
        } => {
            let pairs = match pairs.as_str() {
                "all" => PairMode::All,
                "sample" => PairMode::Sample,
                other => return usage_err("pairs", format!("`{other}` is not all|sample")),
            };
            (
                common,
                Operation::Defect {
                    w,
                    credit,
                    pairs,
                    bound,
                    count,
                },
                None,
                None,
            )
        }
        Command::Growth {
            common,
            w,
            credit,
            f,
            n_max,
            csv,
        } => (common, Operation::Growth { w, credit, f, n_max }, csv, None),
        Command::Certificate {
            common,
            g1,
            g2,
            schedule,
            count,
            powers,
            n_max,
            markdown,
        } => (
            common,
            Operation::Certificate {
                g1,
                g2,
                schedule,
                count,
                powers,
                n_max,
            },
            None,
            markdown,
        ),
        Command::Wpd {
            common,
            g,
            x0,
            c,
            n_power,
            enum_bound,
        } => (
            common,
            Operation::Wpd {
                g,
                x0,
                c,
                n_power,
                enum_bound,
            },
            None,
            None,
        ),
        Command::Delta {
            common,
            triples,
            count,
        } => {
            let triples = match triples.as_str() {
                "all" => TripleMode::All,
                "sample" => TripleMode::Sample,
                other => return usage_err("triples", format!("`{other}` is not all|sample")),
            };
            (common, Operation::Delta { triples, count }, None, None)
        }
        Command::FareyStab {
            common,
            a,
            b,
            enum_bound,
        } => (common, Operation::FareyStab { a, b, enum_bound }, None, None),
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("field `config`: cannot read {}: {e}", config.display()))?;
            let parsed: RunConfig = serde_json::from_str(&text)
                .map_err(|e| format!("field `config`: {e}"))?;
            return Ok(parsed);
        }
    };
    // Certificate runs default to writing their report next to the
    // invocation; every other artifact is opt-in.
    let out = match (&op, common.out) {
        (Operation::Certificate { .. }, None) => Some("certificate.json".to_string()),
        (_, out) => out,
    };
    Ok(RunConfig {
        space: common.space,
        op,
        seed: common.seed,
        out,
        csv,
        markdown,
    })
}

fn budget_cap_from_env() -> Result<Option<usize>, String> {
    match std::env::var("QM_BUDGET_CAP") {
        Ok(text) => {
            let cap: usize = text
                .parse()
                .map_err(|_| format!("QM_BUDGET_CAP `{text}` is not a positive integer"))?;
            if cap == 0 {
                return Err("QM_BUDGET_CAP must be positive".into());
            }
            Ok(Some(cap))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("QM_BUDGET_CAP: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let run = || -> Result<RunConfig, String> {
        let config = build_config(cli.command)?;
        config.validate()?;
        Ok(config)
    };
    let config = match run() {
        Ok(config) => config,
        Err(message) => {
            eprintln!("usage error: {message}");
            return ExitCode::from(1);
        }
    };
    let budget_cap = match budget_cap_from_env() {
        Ok(cap) => cap,
        Err(message) => {
            eprintln!("usage error: {message}");
            return ExitCode::from(1);
        }
    };
    match pipelines::execute(&config, budget_cap) {
        Ok(outcome) => {
            println!("{}", outcome.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
