//! Breadth-first shortest path tree construction.
//!
//! The SPT is the starting point for the lifetime heuristic and, rebuilt
//! every period, the baseline scheduler's tree. Hop counts equal graph
//! hop-distance from the sink. Everything is deterministic: each node's
//! parent is its lowest-id eligible neighbor one hop closer to the sink.

use std::collections::{BTreeSet, VecDeque};

use crate::network::{Network, NetworkError, NodeId};
use crate::tree::AggregationTree;

/// Builds the hop-count shortest path tree of the eligible subgraph.
///
/// The sink must be eligible and every eligible node reachable from it
/// through eligible nodes; otherwise `Disconnected`.
pub fn build_spt(
    net: &Network,
    eligible: &BTreeSet<NodeId>,
) -> Result<AggregationTree, NetworkError> {
    let sink = net.sink_id();
    if !eligible.contains(&sink) {
        return Err(NetworkError::SinkNotEligible);
    }
    let n = net.len();
    for &u in eligible {
        if u.idx() >= n {
            return Err(NetworkError::UnknownNode(u));
        }
    }
    let mut in_set = vec![false; n];
    for &u in eligible {
        in_set[u.idx()] = true;
    }
    const UNSEEN: u32 = u32::MAX;
    let mut dist = vec![UNSEEN; n];
    dist[sink.idx()] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(sink);
    while let Some(u) = queue.pop_front() {
        for &v in net.adj(u) {
            if in_set[v.idx()] && dist[v.idx()] == UNSEEN {
                dist[v.idx()] = dist[u.idx()] + 1;
                queue.push_back(v);
            }
        }
    }
    if eligible.iter().any(|&u| dist[u.idx()] == UNSEEN) {
        return Err(NetworkError::Disconnected);
    }
    let mut parent = vec![None; n];
    let mut hop = vec![0u32; n];
    for &u in eligible {
        hop[u.idx()] = dist[u.idx()];
        if u == sink {
            continue;
        }
        // Adjacency is sorted by id, so the first hit is the lowest id.
        parent[u.idx()] = net
            .adj(u)
            .iter()
            .copied()
            .find(|&v| in_set[v.idx()] && dist[v.idx()] + 1 == dist[u.idx()]);
        debug_assert!(parent[u.idx()].is_some(), "BFS left a non-sink node parentless");
    }
    let mut in_tree = vec![false; n];
    for &u in eligible {
        in_tree[u.idx()] = true;
    }
    Ok(AggregationTree::from_parts(sink, parent, hop, in_tree))
}
