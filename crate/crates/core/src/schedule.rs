//! Period scheduling: run a tree until its bottleneck is spent, rebuild,
//! repeat; the network lifetime is the total rounds across periods.
//!
//! Each period's tree runs for exactly its own lifetime (the bottleneck
//! node's whole-round budget), then energies are debited and the next tree
//! is built over the nodes still able to participate. The network is dead
//! when some source cannot fund even one round of its own leaf
//! transmission, or when the surviving nodes no longer connect every
//! source to the sink.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::heuristic::{build_max_lifetime_tree, HeuristicError, HeuristicParams};
use crate::network::{Network, NetworkError, NodeId};
use crate::spt::build_spt;
use crate::tree::{
    bottleneck, compute_stats, tree_lifetime, AggregationTree, EnergyModel, Lifetime, TreeError,
};

/// Why a schedule stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cause {
    /// A source node cannot fund one round of its own transmission.
    SourceDead,
    /// Some source can no longer reach the sink through usable nodes.
    Disconnected,
    /// The best available tree cannot complete a single round.
    ZeroLifetimeTree,
    /// No sources at all: the network runs forever (degenerate).
    Unbounded,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cause::SourceDead => "source_dead",
            Cause::Disconnected => "disconnected",
            Cause::ZeroLifetimeTree => "zero_lifetime_tree",
            Cause::Unbounded => "unbounded",
        };
        f.write_str(s)
    }
}

/// One scheduled period: a tree run for its full lifetime.
#[derive(Clone, Debug)]
pub struct ScheduleEntry {
    pub tree: AggregationTree,
    /// Rounds this tree ran; equals its lifetime at build time.
    pub duration: u64,
    /// Lowest-id node that limited the duration.
    pub bottleneck: NodeId,
}

/// Result of scheduling a network to death (or to the unbounded flag).
#[derive(Clone, Debug)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
    /// Sum of entry durations; unbounded only for zero-source networks.
    pub network_lifetime: Lifetime,
    pub cause: Cause,
}

impl Schedule {
    /// Line-oriented dump: one `period` line per entry, then the total.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("period {} {} {}\n", i + 1, e.duration, e.bottleneck));
        }
        out.push_str(&format!("lifetime {} {}\n", self.network_lifetime, self.cause));
        out
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("duration must be at least one round")]
    ZeroRounds,
    #[error("node {0} cannot fund {1} rounds")]
    Overdraft(NodeId, u64),
    #[error("sources cannot reach the sink in the initial network")]
    DisconnectedAtStart,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Which tree-building strategy a schedule uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Algorithm {
    /// Plain shortest path tree, rebuilt each period.
    Sptbsa,
    /// Leafification plus local adjustment on top of the SPT.
    Heuristic,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Sptbsa => "sptbsa",
            Algorithm::Heuristic => "heuristic",
        })
    }
}

/// Debits every non-sink node `rounds` times its per-round drain.
///
/// `rounds` must be positive and within the tree's lifetime, so no node
/// goes negative; exact integer accounting.
pub fn apply_rounds(
    net: &mut Network,
    tree: &AggregationTree,
    em: &EnergyModel,
    rounds: u64,
) -> Result<(), ScheduleError> {
    if rounds == 0 {
        return Err(ScheduleError::ZeroRounds);
    }
    let stats = compute_stats(net, tree, em)?;
    let sink = tree.sink();
    for (u, s) in stats.iter() {
        if u == sink {
            continue;
        }
        if net.energy(u) < rounds * s.eng {
            return Err(ScheduleError::Overdraft(u, rounds));
        }
    }
    for (u, s) in stats.iter() {
        if u != sink && s.eng > 0 {
            net.debit_energy(u, rounds * s.eng);
        }
    }
    Ok(())
}

/// Cost of one round for a source transmitting as a leaf; the network is
/// dead once any source cannot pay it.
fn leaf_round_cost(rho: u64, em: &EnergyModel) -> u64 {
    em.e_tx() * rho.div_ceil(em.alpha())
}

/// Runs the period loop until the network dies, mutating `net`'s energies.
///
/// Per period: sources must each fund one leaf round (`source_dead`
/// otherwise) and reach the sink through nodes holding at least `e_tx`
/// (`disconnected` otherwise); the builder's tree then runs for its full
/// lifetime. A zero-lifetime tree ends the schedule; an unbounded one
/// (possible only with zero sources) flags the schedule unbounded.
pub fn run_schedule<B>(
    net: &mut Network,
    em: &EnergyModel,
    mut builder: B,
) -> Result<Schedule, ScheduleError>
where
    B: FnMut(&Network, &BTreeSet<NodeId>) -> Result<AggregationTree, HeuristicError>,
{
    let sink = net.sink_id();
    let sources: Vec<NodeId> = net
        .nodes()
        .iter()
        .filter(|n| n.rho > 0)
        .map(|n| n.id)
        .collect();
    let mut entries: Vec<ScheduleEntry> = Vec::new();
    let mut total: u64 = 0;
    loop {
        if sources
            .iter()
            .any(|&s| net.energy(s) < leaf_round_cost(net.rho(s), em))
        {
            return Ok(Schedule {
                entries,
                network_lifetime: Lifetime::Rounds(total),
                cause: Cause::SourceDead,
            });
        }
        let mut eligible: BTreeSet<NodeId> = net
            .nodes()
            .iter()
            .filter(|n| n.energy >= em.e_tx())
            .map(|n| n.id)
            .collect();
        eligible.insert(sink);
        let participants = net.reachable_from_sink(&eligible);
        if sources.iter().any(|s| !participants.contains(s)) {
            if entries.is_empty() {
                return Err(ScheduleError::DisconnectedAtStart);
            }
            return Ok(Schedule {
                entries,
                network_lifetime: Lifetime::Rounds(total),
                cause: Cause::Disconnected,
            });
        }
        let tree = builder(net, &participants)?;
        let stats = compute_stats(net, &tree, em)?;
        match tree_lifetime(&stats, sink) {
            Lifetime::Unbounded => {
                return Ok(Schedule {
                    entries,
                    network_lifetime: Lifetime::Unbounded,
                    cause: Cause::Unbounded,
                });
            }
            Lifetime::Rounds(0) => {
                return Ok(Schedule {
                    entries,
                    network_lifetime: Lifetime::Rounds(total),
                    cause: Cause::ZeroLifetimeTree,
                });
            }
            Lifetime::Rounds(duration) => {
                let (bn, _) = bottleneck(&stats, sink).expect("finite lifetime has a bottleneck");
                apply_rounds(net, &tree, em, duration)?;
                total += duration;
                entries.push(ScheduleEntry {
                    tree,
                    duration,
                    bottleneck: bn,
                });
            }
        }
    }
}

/// Baseline: plain shortest path tree rebuilt each period.
pub fn sptbsa(net: &mut Network, em: &EnergyModel) -> Result<Schedule, ScheduleError> {
    run_schedule(net, em, |n, eligible| {
        build_spt(n, eligible).map_err(HeuristicError::from)
    })
}

/// The lifetime heuristic rebuilt each period.
pub fn heuristic_schedule(
    net: &mut Network,
    em: &EnergyModel,
    p: &HeuristicParams,
) -> Result<Schedule, ScheduleError> {
    run_schedule(net, em, |n, eligible| {
        build_max_lifetime_tree(n, em, p, eligible)
    })
}

/// Runs the named algorithm on `net`.
pub fn run_algorithm(
    net: &mut Network,
    em: &EnergyModel,
    p: &HeuristicParams,
    algo: Algorithm,
) -> Result<Schedule, ScheduleError> {
    match algo {
        Algorithm::Sptbsa => sptbsa(net, em),
        Algorithm::Heuristic => heuristic_schedule(net, em, p),
    }
}
