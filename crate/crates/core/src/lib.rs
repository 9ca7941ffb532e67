//! Maximum-lifetime data aggregation scheduling for wireless sensor networks.
//!
//! The crate models a sensor network as a unit-disk graph, builds data
//! aggregation trees over it, and schedules working rounds so that the
//! network keeps delivering data for as long as possible. The pieces:
//!
//! - [`network`]: node records, random deployments, connectivity checks.
//! - [`tree`]: aggregation trees and the per-round stats recursion
//!   (load, packet count, energy drain, node and tree lifetime).
//! - [`spt`]: shortest-path (hop count) tree construction.
//! - [`heuristic`]: lifetime-maximizing tree construction on top of the
//!   shortest-path tree.
//! - [`schedule`]: the period loop that runs a tree until some node would
//!   die, rebuilds, and repeats.
//! - [`oracle`]: brute-force spanning tree enumeration for validating the
//!   heuristic on small instances.
//! - [`experiment`]: batch runs over random deployments with CSV output.

pub mod experiment;
pub mod heuristic;
pub mod network;
pub mod oracle;
pub mod schedule;
pub mod seed;
pub mod spt;
pub mod tree;

pub use network::{
    generate_network, DeploymentConfig, Network, NetworkError, NodeId, NodeInit, NodeKind,
    NodeRecord,
};
pub use experiment::{
    run_experiment, summarize, write_csv, ExperimentConfig, ExperimentError, RunOutcome, RunRow,
    SummaryRow,
};
pub use heuristic::{
    build_max_lifetime_tree, leafify_low_energy, local_adjust, HeuristicError, HeuristicParams,
};
pub use oracle::{
    count_spanning_trees, enumerate_spanning_trees, for_each_spanning_tree,
    optimal_tree_lifetime, OracleError, DEFAULT_NODE_CAP,
};
pub use schedule::{
    apply_rounds, heuristic_schedule, run_algorithm, run_schedule, sptbsa, Algorithm, Cause,
    Schedule, ScheduleEntry, ScheduleError,
};
pub use seed::derive_seed;
pub use spt::build_spt;
pub use tree::{
    bottleneck, compute_stats, tree_lifetime, validate_tree, AggregationTree, EnergyModel,
    Lifetime, NodeStats, StatsMap, TreeError, Violation,
};
