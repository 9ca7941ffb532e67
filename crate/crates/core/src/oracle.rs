//! Exhaustive spanning tree enumeration for small networks.
//!
//! Ground truth for testing the heuristic: every spanning tree of the
//! unit-disk graph is generated exactly once, so the true maximum
//! single-tree lifetime is known. Exponential by nature; guarded by a
//! node cap.
//!
//! Enumeration is include/exclude backtracking over the sorted edge list.
//! Including an edge that would close a cycle is skipped; excluding an
//! edge that leaves the remaining graph disconnected is pruned. Each
//! spanning tree is a distinct edge subset, so each is emitted once, in a
//! deterministic order.

use thiserror::Error;

use crate::network::{Network, NodeId};
use crate::tree::{
    compute_stats_unchecked, tree_lifetime, AggregationTree, EnergyModel, Lifetime,
};

/// Default guard on enumeration size.
pub const DEFAULT_NODE_CAP: usize = 9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("network has {nodes} nodes, enumeration cap is {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("network is not connected")]
    Disconnected,
}

/// Tiny union-find over node indexes; cloned per branch, which is cheap at
/// enumeration scale.
#[derive(Clone)]
struct Dsu {
    parent: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u8).collect(),
        }
    }

    fn find(&mut self, x: u8) -> u8 {
        let p = self.parent[x as usize];
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent[x as usize] = root;
        root
    }

    fn union(&mut self, a: u8, b: u8) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

struct Enumerator<'a, F> {
    net: &'a Network,
    edges: Vec<(NodeId, NodeId)>,
    chosen: Vec<(NodeId, NodeId)>,
    emit: F,
}

impl<'a, F: FnMut(&AggregationTree)> Enumerator<'a, F> {
    /// Recurses over edges from `idx` with `dsu` reflecting `self.chosen`.
    fn recurse(&mut self, idx: usize, dsu: &Dsu) {
        let n = self.net.len();
        if self.chosen.len() == n - 1 {
            let tree = self.build_tree();
            (self.emit)(&tree);
            return;
        }
        if idx == self.edges.len() {
            return;
        }
        // Include branch, unless the edge closes a cycle.
        let (u, v) = self.edges[idx];
        let mut with = dsu.clone();
        if with.union(u.0 as u8, v.0 as u8) {
            self.chosen.push((u, v));
            self.recurse(idx + 1, &with);
            self.chosen.pop();
        }
        // Exclude branch, unless the rest cannot span the graph.
        let mut rest = dsu.clone();
        let mut components = n - self.chosen.len();
        for &(a, b) in &self.edges[idx + 1..] {
            if rest.union(a.0 as u8, b.0 as u8) {
                components -= 1;
            }
        }
        if components == 1 {
            self.recurse(idx + 1, dsu);
        }
    }

    /// Roots the chosen edge set at the sink.
    fn build_tree(&self) -> AggregationTree {
        let n = self.net.len();
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in &self.chosen {
            adj[u.idx()].push(v);
            adj[v.idx()].push(u);
        }
        let sink = self.net.sink_id();
        let mut parent = vec![None; n];
        let mut hop = vec![0u32; n];
        let mut seen = vec![false; n];
        seen[sink.idx()] = true;
        let mut queue = std::collections::VecDeque::from([sink]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x.idx()] {
                if !seen[y.idx()] {
                    seen[y.idx()] = true;
                    parent[y.idx()] = Some(x);
                    hop[y.idx()] = hop[x.idx()] + 1;
                    queue.push_back(y);
                }
            }
        }
        AggregationTree::from_parts(sink, parent, hop, vec![true; n])
    }
}

fn check_preconditions(net: &Network, cap: usize) -> Result<(), OracleError> {
    if net.len() > cap {
        return Err(OracleError::TooLarge {
            nodes: net.len(),
            cap,
        });
    }
    match net.is_connected(&net.all_nodes()) {
        Ok(true) => Ok(()),
        _ => Err(OracleError::Disconnected),
    }
}

/// Calls `f` once per spanning tree of the full node set, each rooted at
/// the sink, in a deterministic order.
pub fn for_each_spanning_tree<F>(net: &Network, cap: usize, f: F) -> Result<(), OracleError>
where
    F: FnMut(&AggregationTree),
{
    check_preconditions(net, cap)?;
    if net.len() == 1 {
        // A lone sink: one empty tree.
        let mut f = f;
        f(&AggregationTree::from_parts(
            net.sink_id(),
            vec![None],
            vec![0],
            vec![true],
        ));
        return Ok(());
    }
    let mut edges = Vec::new();
    for u in net.all_nodes() {
        for &v in net.adj(u) {
            if u < v {
                edges.push((u, v));
            }
        }
    }
    edges.sort_unstable();
    let mut e = Enumerator {
        net,
        edges,
        chosen: Vec::with_capacity(net.len() - 1),
        emit: f,
    };
    e.recurse(0, &Dsu::new(net.len()));
    Ok(())
}

/// All spanning trees, materialized.
pub fn enumerate_spanning_trees(
    net: &Network,
    cap: usize,
) -> Result<Vec<AggregationTree>, OracleError> {
    let mut trees = Vec::new();
    for_each_spanning_tree(net, cap, |t| trees.push(t.clone()))?;
    Ok(trees)
}

pub fn count_spanning_trees(net: &Network, cap: usize) -> Result<u64, OracleError> {
    let mut count = 0u64;
    for_each_spanning_tree(net, cap, |_| count += 1)?;
    Ok(count)
}

/// The maximum tree lifetime over every spanning tree, with the first
/// maximizer in enumeration order.
pub fn optimal_tree_lifetime(
    net: &Network,
    em: &EnergyModel,
    cap: usize,
) -> Result<(Lifetime, AggregationTree), OracleError> {
    let sink = net.sink_id();
    let mut best: Option<(Lifetime, AggregationTree)> = None;
    for_each_spanning_tree(net, cap, |t| {
        let stats = compute_stats_unchecked(net, t, em);
        let life = tree_lifetime(&stats, sink);
        if best.as_ref().map_or(true, |(bl, _)| life > *bl) {
            best = Some((life, t.clone()));
        }
    })?;
    Ok(best.expect("connected network has at least one spanning tree"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeInit;
    use crate::tree::{validate_tree, EnergyModel};

    fn em_2_2_1() -> EnergyModel {
        EnergyModel::new(2, 2, 1).unwrap()
    }

    fn path3() -> Network {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: 1 },
            NodeInit { x: 2.0, y: 0.0, energy: 100, rho: 2 },
        ];
        Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap()
    }

    fn triangle(rhos: [u64; 3]) -> Network {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: rhos[0] },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: rhos[1] },
            NodeInit { x: 0.5, y: 0.5, energy: 100, rho: rhos[2] },
        ];
        Network::new(1.5, (10.0, 10.0), NodeId(0), &nodes).unwrap()
    }

    /// Square sink(0)-x(1)-v(2)-u(3); x poor, u a heavy source behind it.
    fn square_net() -> Network {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 1000, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 50, rho: 1 },
            NodeInit { x: 0.0, y: 1.0, energy: 1000, rho: 0 },
            NodeInit { x: 1.0, y: 1.0, energy: 1000, rho: 4 },
        ];
        Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap()
    }

    fn k4() -> Network {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: 1 },
            NodeInit { x: 0.0, y: 1.0, energy: 100, rho: 1 },
            NodeInit { x: 1.0, y: 1.0, energy: 100, rho: 1 },
        ];
        Network::new(2.0, (10.0, 10.0), NodeId(0), &nodes).unwrap()
    }

    #[test]
    fn known_tree_counts() {
        assert_eq!(count_spanning_trees(&path3(), DEFAULT_NODE_CAP).unwrap(), 1);
        assert_eq!(
            count_spanning_trees(&triangle([0, 1, 2]), DEFAULT_NODE_CAP).unwrap(),
            3
        );
        assert_eq!(count_spanning_trees(&square_net(), DEFAULT_NODE_CAP).unwrap(), 4);
        // Complete graph on 4 nodes: 4^2 trees.
        assert_eq!(count_spanning_trees(&k4(), DEFAULT_NODE_CAP).unwrap(), 16);
    }

    #[test]
    fn single_node_has_one_empty_tree() {
        let nodes = [NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 }];
        let net = Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap();
        let trees = enumerate_spanning_trees(&net, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].participant_count(), 1);
    }

    #[test]
    fn enumerated_trees_are_valid_distinct_and_rooted() {
        let net = k4();
        let trees = enumerate_spanning_trees(&net, DEFAULT_NODE_CAP).unwrap();
        for t in &trees {
            assert!(validate_tree(&net, t).is_empty());
            assert_eq!(t.participant_count(), net.len());
            assert_eq!(t.sink(), net.sink_id());
        }
        for i in 0..trees.len() {
            for j in (i + 1)..trees.len() {
                assert_ne!(trees[i], trees[j], "trees {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn square_lifetimes_and_optimum() {
        let net = square_net();
        let em = em_2_2_1();
        let mut lifetimes = Vec::new();
        for_each_spanning_tree(&net, DEFAULT_NODE_CAP, |t| {
            let stats = compute_stats_unchecked(&net, t, &em);
            lifetimes.push(tree_lifetime(&stats, net.sink_id()));
        })
        .unwrap();
        lifetimes.sort();
        assert_eq!(
            lifetimes,
            vec![
                Lifetime::Rounds(6),
                Lifetime::Rounds(6),
                Lifetime::Rounds(25),
                Lifetime::Rounds(25)
            ]
        );

        let (best, tree) = optimal_tree_lifetime(&net, &em, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(best, Lifetime::Rounds(25));
        assert_eq!(tree.parent(NodeId(3)), Some(NodeId(2)));
    }

    #[test]
    fn path_optimum_is_its_only_tree() {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: 1 },
            NodeInit { x: 2.0, y: 0.0, energy: 100, rho: 2 },
            NodeInit { x: 3.0, y: 0.0, energy: 100, rho: 3 },
        ];
        let net = Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap();
        let (best, _) = optimal_tree_lifetime(&net, &em_2_2_1(), DEFAULT_NODE_CAP).unwrap();
        assert_eq!(best, Lifetime::Rounds(11));
    }

    #[test]
    fn zero_source_optimum_is_unbounded() {
        let net = triangle([0, 0, 0]);
        let (best, _) = optimal_tree_lifetime(&net, &em_2_2_1(), DEFAULT_NODE_CAP).unwrap();
        assert_eq!(best, Lifetime::Unbounded);
    }

    #[test]
    fn cap_is_enforced() {
        let net = k4();
        assert!(matches!(
            count_spanning_trees(&net, 3),
            Err(OracleError::TooLarge { nodes: 4, cap: 3 })
        ));
    }
}
