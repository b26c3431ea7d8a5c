//! Command-line driver: model loading, command dispatch, and verdict,
//! witness, tableau, and matrix output.
//!
//! Exit codes: 0 when the queried property holds, 1 when it does not, and
//! 2 on malformed inputs or model errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use distbisim::bisim::{minimal_bisim_matrix, BisimMatrix, BisimOptions, Variant};
use distbisim::ct::{ctmc_parallel, ctmc_to_sa, sa_parallel, Ctmc, Sa};
use distbisim::exactlin::{dot, format_rat};
use distbisim::pa::{dist_to_map, parse_dist_inline, Dist, Pa};
use distbisim::pomdp::{pomdp_to_pa, Pomdp};
use distbisim::tableau::{check_commute, check_locations, tableau_to_json, verify_tableau};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nvariants: full (default) | singleton (sink-completed, singleton label sets)",
    " | exact-label (self-loop-completed, enabled-set schedule)",
    "\nextremal-choice cap default: 1000000",
    "\nlabel-subset schedule: nonempty subsets, size then lexicographic",
);

#[derive(Parser)]
#[command(name = "distbisim", version, long_version = LONG_VERSION)]
#[command(about = "Distribution-based bisimulation checking for probabilistic and stochastic automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EngineFlags {
    /// Which relation to compute.
    #[arg(long, value_enum, default_value = "full")]
    variant: VariantArg,
    /// Cap on the number of pure scheduler tuples per label set.
    #[arg(long, default_value_t = 1_000_000)]
    max_choices: u64,
    /// Evaluate independent stability candidates on this many threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum VariantArg {
    Full,
    Singleton,
    ExactLabel,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Singleton => Variant::Singleton,
            VariantArg::ExactLabel => Variant::ExactLabel,
        }
    }
}

impl EngineFlags {
    fn options(&self) -> BisimOptions {
        BisimOptions {
            variant: self.variant.into(),
            max_choices: self.max_choices,
            jobs: self.jobs.max(1),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether two distributions over a probabilistic automaton are
    /// bisimilar.
    CheckPa {
        #[arg(long)]
        model: PathBuf,
        /// Inline distribution, e.g. "{t:1}" or "{t':1/2,t'':1/2}".
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-validate the produced witness independently.
        #[arg(long)]
        verify_witness: bool,
    },
    /// Compute and dump the minimal bisimulation matrix.
    BisimMatrix {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide location bisimilarity of a deterministic exponential
    /// stochastic automaton.
    CheckSa {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        /// Write the tableau proof object here.
        #[arg(long)]
        tableau: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify_witness: bool,
    },
    /// Build and dump the finite symbolic abstraction of a stochastic
    /// automaton.
    AbstractSa {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated initial locations; defaults to the declared one.
        #[arg(long)]
        initials: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interleaving parallel composition of two chains.
    CtmcCompose {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed a chain as a stochastic automaton.
    CtmcEmbed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interleaving parallel composition of two stochastic automata.
    SaCompose {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that embedding two chains and composing commutes with
    /// composing and embedding, up to bisimilarity.
    CheckCommute {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        tableau: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a POMDP into its observation-labelled automaton.
    PomdpToPa {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether two beliefs of a POMDP are equivalent.
    BeliefCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct PaVerdictDump {
    variant: String,
    rank: usize,
    equivalent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessDump>,
}

#[derive(Serialize)]
struct WitnessDump {
    column_index: usize,
    column: Vec<String>,
    dot: String,
}

/// Returns the exit code the verdict maps to.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::CheckPa {
            model,
            mu,
            nu,
            engine,
            out,
            verify_witness,
        } => {
            let pa = Pa::from_json(&read(&model)?)?;
            let mu = parse_dist_inline(&mu, pa.states())?;
            let nu = parse_dist_inline(&nu, pa.states())?;
            let e = minimal_bisim_matrix(&pa, &engine.options())?;
            let res = e.equivalent(&mu, &nu)?;
            if verify_witness {
                if let Some(w) = &res.witness {
                    revalidate_witness(&e, &mu, &nu, w.column_index)?;
                    eprintln!("witness re-validated: column {} separates", w.column_index);
                }
            }
            let dump = PaVerdictDump {
                variant: e.variant().to_string(),
                rank: e.rank(),
                equivalent: res.equivalent,
                witness: res.witness.as_ref().map(|w| WitnessDump {
                    column_index: w.column_index,
                    column: w.column.iter().map(format_rat).collect(),
                    dot: format_rat(&w.dot),
                }),
            };
            if let Some(path) = out {
                write_out(&path, &to_json(&dump))?;
            }
            if res.equivalent {
                println!("EQUIVALENT");
                Ok(0)
            } else {
                let w = res.witness.expect("inequivalence carries a witness");
                println!(
                    "NOT-EQUIVALENT: column {} yields {}",
                    w.column_index,
                    format_rat(&w.dot)
                );
                Ok(1)
            }
        }
        Command::BisimMatrix { model, engine, out } => {
            let pa = Pa::from_json(&read(&model)?)?;
            let e = minimal_bisim_matrix(&pa, &engine.options())?;
            let text = e.to_json();
            match out {
                Some(path) => write_out(&path, &text)?,
                None => print!("{text}"),
            }
            println!("rank {}", e.rank());
            Ok(0)
        }
        Command::CheckSa {
            model,
            left,
            right,
            tableau,
            out,
            verify_witness,
        } => {
            let sa = Sa::from_json(&read(&model)?)?;
            let l = sa.location_index(&left)?;
            let r = sa.location_index(&right)?;
            let (fpa, verdict) = check_locations(&sa, l, r)?;
            if verify_witness {
                let ok = verify_tableau(&fpa, verdict.tableau(), verdict.bisimilar());
                if !ok {
                    bail!("tableau re-validation failed");
                }
                eprintln!("tableau re-validated");
            }
            let text = tableau_to_json(&fpa, &verdict);
            if let Some(path) = tableau {
                write_out(&path, &text)?;
            }
            if let Some(path) = out {
                write_out(&path, &text)?;
            }
            println!("{}", verdict.line(&fpa));
            Ok(if verdict.bisimilar() { 0 } else { 1 })
        }
        Command::AbstractSa {
            model,
            initials,
            out,
        } => {
            let sa = Sa::from_json(&read(&model)?)?;
            let locs: Vec<usize> = match initials {
                None => vec![sa.initial()],
                Some(list) => list
                    .split(',')
                    .map(|name| sa.location_index(name.trim()))
                    .collect::<Result<_, _>>()?,
            };
            let fpa = distbisim::abstraction::abstract_sa(&sa, &locs)?;
            let text = fpa.to_json();
            match out {
                Some(path) => write_out(&path, &text)?,
                None => print!("{text}"),
            }
            println!("{} abstract states", fpa.len());
            Ok(0)
        }
        Command::CtmcCompose { left, right, out } => {
            let a = Ctmc::from_json(&read(&left)?)?;
            let b = Ctmc::from_json(&read(&right)?)?;
            emit(ctmc_parallel(&a, &b).to_json(), out)
        }
        Command::CtmcEmbed { model, out } => {
            let c = Ctmc::from_json(&read(&model)?)?;
            emit(ctmc_to_sa(&c).to_json(), out)
        }
        Command::SaCompose { left, right, out } => {
            let a = Sa::from_json(&read(&left)?)?;
            let b = Sa::from_json(&read(&right)?)?;
            emit(sa_parallel(&a, &b).to_json(), out)
        }
        Command::CheckCommute {
            left,
            right,
            tableau,
            out,
        } => {
            let a = Ctmc::from_json(&read(&left)?)?;
            let b = Ctmc::from_json(&read(&right)?)?;
            let (_, fpa, verdict) = check_commute(&a, &b)?;
            let text = tableau_to_json(&fpa, &verdict);
            if let Some(path) = tableau {
                write_out(&path, &text)?;
            }
            if let Some(path) = out {
                write_out(&path, &text)?;
            }
            println!("{}", verdict.line(&fpa));
            Ok(if verdict.bisimilar() { 0 } else { 1 })
        }
        Command::PomdpToPa { model, out } => {
            let m = Pomdp::from_json(&read(&model)?)?;
            emit(pomdp_to_pa(&m)?.to_json(), out)
        }
        Command::BeliefCheck { model, mu, nu, out } => {
            let m = Pomdp::from_json(&read(&model)?)?;
            let pa = pomdp_to_pa(&m)?;
            let b1 = parse_dist_inline(&mu, pa.states())?;
            let b2 = parse_dist_inline(&nu, pa.states())?;
            let e = minimal_bisim_matrix(&pa, &BisimOptions::default())?;
            let res = e.equivalent(&b1, &b2)?;
            if let Some(path) = out {
                #[derive(Serialize)]
                struct BeliefDump {
                    equivalent: bool,
                    rank: usize,
                    mu: BTreeMap<String, String>,
                    nu: BTreeMap<String, String>,
                }
                let dump = BeliefDump {
                    equivalent: res.equivalent,
                    rank: e.rank(),
                    mu: dist_to_map(&b1, pa.states()),
                    nu: dist_to_map(&b2, pa.states()),
                };
                write_out(&path, &to_json(&dump))?;
            }
            if res.equivalent {
                println!("EQUIVALENT");
                Ok(0)
            } else {
                println!("NOT-EQUIVALENT");
                Ok(1)
            }
        }
    }
}

fn emit(text: String, out: Option<PathBuf>) -> Result<u8> {
    match out {
        Some(path) => write_out(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Independent witness check: the recorded column must separate the two
/// distributions with a nonzero dot product.
fn revalidate_witness(e: &BisimMatrix, mu: &Dist, nu: &Dist, column_index: usize) -> Result<()> {
    let col = &e.basis().columns()[column_index];
    let mut diff: Vec<_> = mu
        .as_slice()
        .iter()
        .zip(nu.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    diff.resize(col.len(), distbisim::exactlin::rat(0, 1));
    let d = dot(&diff, col);
    if d == distbisim::exactlin::rat(0, 1) {
        bail!("witness column does not separate the distributions");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
