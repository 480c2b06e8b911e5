//! `miaroute`: generate topologies, run the solvers, and produce the batch
//! experiment CSVs.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 usage or invalid input,
//! 3 infeasible, 4 refused by a budget cap.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use mia_core::broadcast::{solve_min_delay_broadcast_with, BroadcastOptions, DEFAULT_BROADCAST_CAP};
use mia_core::energy::{solve_min_energy_with, LinearNetwork};
use mia_core::experiment::{run_cdf, write_cdf_csv, CdfConfig, MAX_BATCH_RELAYS};
use mia_core::heuristics::{heuristic1, heuristic2};
use mia_core::line::{solve_line, write_ratio_csv, CapacityLaw, LineConfig};
use mia_core::network::{gen_random_topology, TopologyGenConfig};
use mia_core::unicast::{solve_min_delay_with, traditional_shortest_path, SearchOptions, DEFAULT_SUBSET_CAP};
use mia_core::{Error, Topology};

#[derive(Parser)]
#[command(
    name = "miaroute",
    version,
    about = "Routing and broadcast with mutual information accumulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Optimal,
    H1,
    H2,
    Sp,
    Energy,
    Broadcast,
    Line,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random topology as JSON.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of relays.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Path-loss exponent.
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        imax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a topology file and print the solution as JSON.
    Solve {
        /// Topology JSON (not used by `--mode line`).
        topology: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Energy mode: rate per unit PSD, `C = gamma * gain * P`.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Energy mode: delay budget.
        #[arg(long)]
        dmax: Option<f64>,
        /// Largest relay count an exponential or factorial search will accept.
        #[arg(long)]
        budget_cap: Option<usize>,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        parallel: bool,
        /// Line mode: number of relays.
        #[arg(long)]
        n: Option<usize>,
        /// Line mode: capacity at unit distance.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Line mode: path-loss exponent.
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        /// Line mode: links longer than this carry nothing.
        #[arg(long)]
        truncation: Option<f64>,
        /// Line mode: packet size.
        #[arg(long, default_value_t = 1.0)]
        imax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-topology batch: per-seed delays and ratios as CSV.
    Cdf {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// First seed; instance `i` uses `seed + i`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        imax: f64,
        #[arg(long, default_value_t = MAX_BATCH_RELAYS)]
        budget_cap: usize,
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        parallel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Line-network delay ratio against hop-by-hop routing, as CSV.
    LineRatio {
        /// Largest relay count.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        imax: f64,
        /// Only transmitters at most this many hops back count.
        #[arg(long, default_value_t = 3)]
        truncation: usize,
        /// Every earlier transmitter counts.
        #[arg(long, conflicts_with = "truncation")]
        no_truncation: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: Option<&Path>, v: &serde_json::Value) -> Result<(), Failure> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: Option<&Path>) -> Result<Topology, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("this mode needs a topology file".into()))?;
    Ok(Topology::read(path)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            seed,
            n,
            alpha,
            imax,
            out,
        } => {
            let topo = gen_random_topology(&TopologyGenConfig {
                n_relays: n,
                alpha,
                i_max: imax,
                seed,
                ..Default::default()
            })?;
            let mut w = output(out.as_deref())?;
            w.write_all(topo.to_json()?.as_bytes())?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Solve {
            topology,
            mode,
            gamma,
            dmax,
            budget_cap,
            parallel,
            n,
            theta,
            alpha,
            truncation,
            imax,
            out,
        } => {
            let search = SearchOptions {
                prune: true,
                parallel,
                budget_cap: budget_cap.unwrap_or(DEFAULT_SUBSET_CAP),
            };
            let value = match mode {
                Mode::Optimal => solve_min_delay_with(&load(topology.as_deref())?, &search)?
                    .0
                    .to_json_value(Some("optimal")),
                Mode::H1 => heuristic1(&load(topology.as_deref())?)?.to_json_value(Some("h1")),
                Mode::H2 => heuristic2(&load(topology.as_deref())?)?.to_json_value(Some("h2")),
                Mode::Sp => {
                    let topo = load(topology.as_deref())?;
                    traditional_shortest_path(&topo)?.to_json_value(&topo)
                }
                Mode::Energy => {
                    let d_max = dmax.ok_or_else(|| Failure::Usage("--mode energy requires --dmax".into()))?;
                    let net = LinearNetwork::from_topology(&load(topology.as_deref())?, gamma)?;
                    solve_min_energy_with(&net, d_max, &search)?.0.to_json_value()
                }
                Mode::Broadcast => {
                    let opts = BroadcastOptions {
                        budget_cap: budget_cap.unwrap_or(DEFAULT_BROADCAST_CAP),
                        ..Default::default()
                    };
                    solve_min_delay_broadcast_with(&load(topology.as_deref())?, &opts)?
                        .0
                        .to_json_value()
                }
                Mode::Line => {
                    let n = n.ok_or_else(|| Failure::Usage("--mode line requires --n".into()))?;
                    let mut cfg = LineConfig::equally_spaced(n, CapacityLaw::PowerLaw { theta, alpha }, imax);
                    cfg.truncation_radius = truncation;
                    solve_line(&cfg)?.to_json_value(Some("line"))
                }
            };
            write_json(out.as_deref(), &value)?;
        }
        Command::Cdf {
            n,
            instances,
            seed,
            alpha,
            imax,
            budget_cap,
            parallel,
            out,
        } => {
            let results = run_cdf(&CdfConfig {
                n_relays: n,
                instances,
                seed0: seed,
                alpha,
                i_max: imax,
                parallel,
                budget_cap,
            })?;
            write_cdf_csv(output(out.as_deref())?, &results)?;
        }
        Command::LineRatio {
            n,
            theta,
            imax,
            truncation,
            no_truncation,
            out,
        } => {
            let trunc = (!no_truncation).then_some(truncation);
            write_ratio_csv(output(out.as_deref())?, n, theta, imax, trunc)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidInput(_) => 2,
                Error::Infeasible(_) | Error::NotDecoded(_) => 3,
                Error::BudgetExceeded { .. } => 4,
                _ => 1,
            })
        }
    }
}
