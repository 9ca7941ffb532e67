//! Batch runs over random deployments: sweep node counts, run both
//! scheduling algorithms on identical networks, report per-run rows and
//! per-node-count summaries as CSV.
//!
//! Reproducibility contract: each (node count, replication) pair derives
//! its own seed from the base seed, so any row can be reproduced in
//! isolation and the whole table is a pure function of the config. Rows
//! are emitted in (node count, replication, algorithm) order regardless of
//! how the work is scheduled across threads.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::heuristic::HeuristicParams;
use crate::network::{generate_network, DeploymentConfig, NetworkError};
use crate::schedule::{run_algorithm, Algorithm, Cause, ScheduleError};
use crate::seed::derive_seed;
use crate::tree::{EnergyModel, Lifetime};

/// Sweep description. `deployment` is a template: its `n_total` and `seed`
/// are overridden per run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub node_counts: Vec<u32>,
    pub replications: u32,
    pub deployment: DeploymentConfig,
    pub energy_model: EnergyModel,
    pub heuristic: HeuristicParams,
    pub base_seed: u64,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// What one algorithm did on one generated network.
#[derive(Clone, Copy, Debug)]
pub struct RunOutcome {
    pub network_lifetime: Lifetime,
    pub periods: usize,
    pub cause: Cause,
    /// Lifetime of the first period's tree; kept for trend analysis, not
    /// part of the CSV row format.
    pub first_tree_lifetime: Lifetime,
}

/// One CSV data row. `outcome` is `None` when no connected deployment was
/// found for the row's seed.
#[derive(Clone, Copy, Debug)]
pub struct RunRow {
    pub node_count: u32,
    pub replication: u32,
    pub seed: u64,
    pub algo: Algorithm,
    pub outcome: Option<RunOutcome>,
}

/// Algorithms in row order.
const ALGOS: [Algorithm; 2] = [Algorithm::Heuristic, Algorithm::Sptbsa];

fn validate(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    if cfg.node_counts.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "node_counts must be non-empty".into(),
        ));
    }
    if cfg.replications < 1 {
        return Err(ExperimentError::InvalidConfig(
            "replications must be at least 1".into(),
        ));
    }
    if let Some(&bad) = cfg
        .node_counts
        .iter()
        .find(|&&c| c < cfg.deployment.n_relays)
    {
        return Err(ExperimentError::InvalidConfig(format!(
            "node count {bad} is below the relay count {}",
            cfg.deployment.n_relays
        )));
    }
    Ok(())
}

/// Runs the full sweep. Replications execute in parallel; the returned
/// rows are in deterministic (node count, replication, algorithm) order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRow>, ExperimentError> {
    validate(cfg)?;
    let jobs: Vec<(u32, u32)> = cfg
        .node_counts
        .iter()
        .flat_map(|&c| (0..cfg.replications).map(move |r| (c, r)))
        .collect();
    let per_job: Vec<Result<Vec<RunRow>, ExperimentError>> = jobs
        .par_iter()
        .map(|&(node_count, replication)| run_one(cfg, node_count, replication))
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() * ALGOS.len());
    for job in per_job {
        rows.extend(job?);
    }
    Ok(rows)
}

fn run_one(
    cfg: &ExperimentConfig,
    node_count: u32,
    replication: u32,
) -> Result<Vec<RunRow>, ExperimentError> {
    let seed = derive_seed(cfg.base_seed, &[node_count as u64, replication as u64]);
    let dep = DeploymentConfig {
        n_total: node_count,
        seed,
        ..cfg.deployment.clone()
    };
    let net = match generate_network(&dep) {
        Ok(net) => net,
        Err(NetworkError::ConnectivityFailure { .. }) => {
            return Ok(ALGOS
                .iter()
                .map(|&algo| RunRow {
                    node_count,
                    replication,
                    seed,
                    algo,
                    outcome: None,
                })
                .collect());
        }
        Err(e) => return Err(ScheduleError::Network(e).into()),
    };
    let mut rows = Vec::with_capacity(ALGOS.len());
    for algo in ALGOS {
        let mut copy = net.clone();
        let schedule = run_algorithm(&mut copy, &cfg.energy_model, &cfg.heuristic, algo)?;
        let first_tree_lifetime = match schedule.entries.first() {
            Some(e) => Lifetime::Rounds(e.duration),
            None if schedule.network_lifetime.is_unbounded() => Lifetime::Unbounded,
            None => Lifetime::Rounds(0),
        };
        rows.push(RunRow {
            node_count,
            replication,
            seed,
            algo,
            outcome: Some(RunOutcome {
                network_lifetime: schedule.network_lifetime,
                periods: schedule.entries.len(),
                cause: schedule.cause,
                first_tree_lifetime,
            }),
        });
    }
    Ok(rows)
}

/// Per-(node count, algorithm) aggregate over a row set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryRow {
    pub node_count: u32,
    pub algo: Algorithm,
    /// Mean over finite lifetimes of successful runs; `None` if there are
    /// none (all failed or all unbounded).
    pub mean_lifetime: Option<f64>,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub stddev: Option<f64>,
    /// Runs without a connected deployment.
    pub failures: u32,
}

/// Aggregates rows into summary rows, ordered like the input.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<u32> = Vec::new();
    for r in rows {
        if !keys.contains(&r.node_count) {
            keys.push(r.node_count);
        }
    }
    let mut out = Vec::new();
    for node_count in keys {
        for algo in ALGOS {
            let group = rows
                .iter()
                .filter(|r| r.node_count == node_count && r.algo == algo);
            let mut values: Vec<f64> = Vec::new();
            let mut failures = 0u32;
            for r in group {
                match r.outcome {
                    None => failures += 1,
                    Some(o) => {
                        if let Some(rounds) = o.network_lifetime.rounds() {
                            values.push(rounds as f64);
                        }
                    }
                }
            }
            let (mean, stddev) = if values.is_empty() {
                (None, None)
            } else {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = if values.len() > 1 {
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                (Some(mean), Some(var.sqrt()))
            };
            out.push(SummaryRow {
                node_count,
                algo,
                mean_lifetime: mean,
                stddev,
                failures,
            });
        }
    }
    out
}

/// Writes the data rows and the summary section, both with headers.
/// Failed rows leave lifetime and period fields empty with cause
/// `gen_failed`. Floats are fixed to three decimals, so equal inputs give
/// byte-identical output.
pub fn write_csv<W: Write>(rows: &[RunRow], out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "node_count,replication,seed,algo,network_lifetime,periods,cause"
    )?;
    for r in rows {
        match r.outcome {
            Some(o) => writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.node_count, r.replication, r.seed, r.algo, o.network_lifetime, o.periods, o.cause
            )?,
            None => writeln!(
                out,
                "{},{},{},{},,,gen_failed",
                r.node_count, r.replication, r.seed, r.algo
            )?,
        }
    }
    writeln!(out, "node_count,algo,mean_lifetime,stddev,failures")?;
    for s in summarize(rows) {
        let mean = s
            .mean_lifetime
            .map(|m| format!("{m:.3}"))
            .unwrap_or_default();
        let sd = s.stddev.map(|v| format!("{v:.3}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            s.node_count, s.algo, mean, sd, s.failures
        )?;
    }
    Ok(())
}
