//! `medz`: partition functions over Hamming medians, #SAT through string
//! gadgets, small parsimony and median-set Markov chains. Every subcommand
//! prints one JSON document.

mod commands;
mod input;

use clap::{Args, Parser, Subcommand};
use input::StringFormat;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Guard(String),
}

impl From<medz_core::Error> for Failure {
    fn from(e: medz_core::Error) -> Self {
        if e.is_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Guard(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "medz", version, about = "Median partition functions, gadget reductions, parsimony and median chains")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct StringsOpt {
    /// Multiset file: raw 0/1 lines, or blueprint lines `<pairs> +<e>`.
    #[arg(long)]
    strings: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: StringFormat,
    /// Pair count `n` for raw input; the rest of each line is extras.
    #[arg(long, default_value_t = 0)]
    pairs: usize,
    /// Extra coordinates `t` (blueprint default: exactly the extras used).
    #[arg(long)]
    extras: Option<usize>,
}

impl StringsOpt {
    fn args(&self) -> input::StringsArgs<'_> {
        input::StringsArgs { path: &self.strings, format: self.format, pairs: self.pairs, extras: self.extras }
    }
}

#[derive(Args, Debug)]
struct TreeOpt {
    /// Topology, e.g. `((A,B),(C,D));`.
    #[arg(long)]
    tree: PathBuf,
    /// `name<TAB>bits` per leaf.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args, Debug)]
struct ChainOpt {
    #[arg(long, value_enum, default_value = "metropolis")]
    chain: commands::ChainChoice,
    #[arg(long, default_value = "factorial")]
    weight: String,
    /// RNG seed; the MEDZ_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition function Z(B, w) over the optimal medians.
    Z {
        #[command(flatten)]
        strings: StringsOpt,
        /// `factorial`, `identity` or `table:<path>`.
        #[arg(long, default_value = "factorial")]
        weight: String,
        /// Refuse more ambiguous coordinates than this.
        #[arg(long, default_value_t = 30)]
        max_bits: usize,
    },
    /// Median-set structure; `--list` enumerates the medians.
    Medians {
        #[command(flatten)]
        strings: StringsOpt,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 4096)]
        max_list: u64,
    },
    /// #SAT of a DIMACS 3-CNF through the counting gadget and CRT.
    CountSat {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, default_value = "practical")]
        mode: String,
        #[arg(long, default_value_t = medz_core::pipeline::DEFAULT_MAX_SCAN_BITS)]
        max_bits: usize,
    },
    /// Rewrites a 3-CNF into clauses over three distinct variables.
    ReduceD3 {
        #[arg(long)]
        cnf: PathBuf,
    },
    /// Adds the complement variables and their four forcing clauses each.
    XorAugment {
        #[arg(long)]
        cnf: PathBuf,
    },
    /// Builds a gadget multiset and writes its blueprint files.
    BuildGadget {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long, value_enum)]
        kind: commands::GadgetKind,
        /// Prime for the counting gadget (default: the smallest admissible one).
        #[arg(long)]
        prime: Option<u64>,
        /// Weight for the threshold variants.
        #[arg(long, default_value = "factorial")]
        weight: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Recomputes the clause distance tables against the printed bodies.
    VerifyTables,
    /// Parsimony score per coordinate with Fitch and Sankoff details.
    TreeScore {
        #[command(flatten)]
        tree: TreeOpt,
    },
    /// Number of most parsimonious labelings and scenarios.
    TreeCount {
        #[command(flatten)]
        tree: TreeOpt,
        /// Refuse when the labelings to walk exceed this.
        #[arg(long, default_value_t = 1 << 20)]
        max_mpl: u64,
    },
    /// Runs a seeded chain on the median set.
    Sample {
        #[command(flatten)]
        strings: StringsOpt,
        #[command(flatten)]
        chain: ChainOpt,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        thin: u64,
        /// Starting median (default: the majority median with ambiguous bits 0).
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 100_000_000)]
        max_steps: u64,
    },
    /// Exact stationary vector, spectral gap and cut conductance.
    Diagnose {
        #[command(flatten)]
        strings: Option<StringsOpt>,
        /// Use the `n,t` torpid instance and its half cut instead of `--strings`.
        #[arg(long, conflicts_with = "strings")]
        torpid: Option<String>,
        #[command(flatten)]
        chain: ChainOpt,
        /// Conductance of the cut "at most K ambiguous bits set".
        #[arg(long)]
        cut_max_ones: Option<u32>,
        #[arg(long, default_value_t = 1 << 12)]
        max_states: u64,
    },
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("MEDZ_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Input(format!("MEDZ_SEED={v:?} is not a u64"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, Failure> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::Input("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Z { strings, weight, max_bits } => commands::z(&strings.args(), &weight, max_bits),
        Command::Medians { strings, list, max_list } => commands::medians(&strings.args(), list, max_list),
        Command::CountSat { cnf, mode, max_bits } => commands::count_sat(&cnf, &mode, max_bits),
        Command::ReduceD3 { cnf } => commands::reduce_d3(&cnf),
        Command::XorAugment { cnf } => commands::xor_augment(&cnf),
        Command::BuildGadget { cnf, kind, prime, weight, out_dir } => {
            commands::build_gadget(&cnf, kind, prime, &weight, &out_dir)
        }
        Command::VerifyTables => commands::verify_tables(),
        Command::TreeScore { tree } => commands::tree_score(&tree.tree, &tree.labels),
        Command::TreeCount { tree, max_mpl } => commands::tree_count(&tree.tree, &tree.labels, max_mpl),
        Command::Sample { strings, chain, steps, thin, start, max_steps } => {
            if steps > max_steps {
                return Err(Failure::Guard(format!("{steps} steps exceed --max-steps {max_steps}")));
            }
            let seed = seed(chain.seed)?;
            commands::sample(&strings.args(), chain.chain, &chain.weight, seed, steps, thin, start.as_deref())
        }
        Command::Diagnose { strings, torpid, chain, cut_max_ones, max_states } => {
            let seed = seed(chain.seed)?;
            match (strings, torpid) {
                (_, Some(spec)) => commands::diagnose_torpid(&spec, max_states),
                (Some(s), None) => {
                    commands::diagnose(&s.args(), chain.chain, &chain.weight, seed, cut_max_ones, max_states)
                }
                (None, None) => Err(Failure::Input("diagnose needs --strings or --torpid".into())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(v) => {
            let mut text = serde_json::to_string_pretty(&v).expect("reports serialize");
            text.push('\n');
            let written = match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{}", serde_json::json!({ "error": e, "kind": "input" }));
                    ExitCode::from(2)
                }
            }
        }
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Input(m) => ("input", m),
                Failure::Guard(m) => ("guard", m),
            };
            eprintln!("{}", serde_json::json!({ "error": msg, "kind": kind }));
            ExitCode::from(f.code())
        }
    }
}
