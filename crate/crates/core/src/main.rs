//! Command-line harness: generate deployments, schedule networks, check
//! small instances against the brute-force optimum, and run sweeps.

use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aggsim::{
    generate_network, heuristic_schedule, optimal_tree_lifetime, run_experiment, sptbsa,
    write_csv, DeploymentConfig, EnergyModel, ExperimentConfig, HeuristicParams, Network,
    DEFAULT_NODE_CAP,
};

#[derive(Parser)]
#[command(
    name = "aggsim",
    version,
    about = "Aggregation-tree lifetime scheduling for wireless sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random connected deployment and write the network file.
    Gen(GenArgs),
    /// Schedule one network to death and dump its periods.
    Simulate(SimulateArgs),
    /// Brute-force the optimal single-tree lifetime of a small network.
    Oracle(OracleArgs),
    /// Sweep node counts, comparing both algorithms over seeded networks.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct EnergyFlags {
    /// Aggregation ratio: raw-data units packed into one packet.
    #[arg(long, default_value_t = 2)]
    alpha: u64,
    /// Energy units to transmit one packet.
    #[arg(long, default_value_t = 2)]
    etx: u64,
    /// Energy units to receive one packet.
    #[arg(long, default_value_t = 1)]
    erx: u64,
}

impl EnergyFlags {
    fn model(&self) -> Result<EnergyModel, Box<dyn Error>> {
        Ok(EnergyModel::new(self.alpha, self.etx, self.erx)?)
    }
}

#[derive(Args)]
struct HeuristicFlags {
    /// Low-energy threshold as a fraction of median residual energy.
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    /// Maximum local-adjustment sweeps per tree build.
    #[arg(long, default_value_t = 10)]
    max_passes: u32,
}

impl HeuristicFlags {
    fn params(&self) -> Result<HeuristicParams, Box<dyn Error>> {
        Ok(HeuristicParams::new(self.theta, self.max_passes)?)
    }
}

#[derive(Args)]
struct GenArgs {
    /// Non-sink node count (the sink is added on top).
    #[arg(long)]
    nodes: u32,
    /// How many of the nodes are relays.
    #[arg(long, default_value_t = 50)]
    relays: u32,
    /// Communication range in field units.
    #[arg(long, default_value_t = 2.0)]
    range: f64,
    /// Initial energy per node.
    #[arg(long, default_value_t = 100_000)]
    energy: u64,
    /// Deployment seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output network file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgoFlag {
    Heuristic,
    Sptbsa,
}

#[derive(Args)]
struct SimulateArgs {
    /// Network file to schedule.
    net: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoFlag::Heuristic)]
    algo: AlgoFlag,
    #[command(flatten)]
    energy: EnergyFlags,
    #[command(flatten)]
    heuristic: HeuristicFlags,
    /// Output file for the schedule dump; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Network file (small; enumeration is exhaustive).
    net: PathBuf,
    #[command(flatten)]
    energy: EnergyFlags,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Node counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [200u32, 400, 600, 800, 1000])]
    nodes: Vec<u32>,
    /// Relay count at every sweep point.
    #[arg(long, default_value_t = 50)]
    relays: u32,
    /// Communication range in field units.
    #[arg(long, default_value_t = 2.0)]
    range: f64,
    /// Initial energy per node.
    #[arg(long, default_value_t = 100_000)]
    energy: u64,
    /// Base seed; each run derives its own from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications per node count.
    #[arg(long, default_value_t = 30)]
    replications: u32,
    #[command(flatten)]
    energy_model: EnergyFlags,
    #[command(flatten)]
    heuristic: HeuristicFlags,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

fn write_output(out: Option<&PathBuf>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let net = generate_network(&DeploymentConfig {
                n_total: a.nodes,
                n_relays: a.relays,
                field: (10.0, 10.0),
                comm_range: a.range,
                energy_init: a.energy,
                rho_range: (1, 10),
                seed: a.seed,
            })?;
            fs::write(&a.out, net.to_text())?;
        }
        Cmd::Simulate(a) => {
            let mut net = Network::from_text(&fs::read_to_string(&a.net)?)?;
            let em = a.energy.model()?;
            let schedule = match a.algo {
                AlgoFlag::Heuristic => heuristic_schedule(&mut net, &em, &a.heuristic.params()?)?,
                AlgoFlag::Sptbsa => sptbsa(&mut net, &em)?,
            };
            write_output(a.out.as_ref(), &schedule.to_text())?;
        }
        Cmd::Oracle(a) => {
            let net = Network::from_text(&fs::read_to_string(&a.net)?)?;
            let em = a.energy.model()?;
            let (life, tree) = optimal_tree_lifetime(&net, &em, DEFAULT_NODE_CAP)?;
            let text = format!("optimal {life}\n{}", tree.to_text());
            write_output(a.out.as_ref(), &text)?;
        }
        Cmd::Experiment(a) => {
            let cfg = ExperimentConfig {
                node_counts: a.nodes.clone(),
                replications: a.replications,
                deployment: DeploymentConfig {
                    n_total: 0,
                    n_relays: a.relays,
                    field: (10.0, 10.0),
                    comm_range: a.range,
                    energy_init: a.energy,
                    rho_range: (1, 10),
                    seed: 0,
                },
                energy_model: a.energy_model.model()?,
                heuristic: a.heuristic.params()?,
                base_seed: a.seed,
            };
            let rows = run_experiment(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            fs::write(&a.out, buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
