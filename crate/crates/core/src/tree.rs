//! Aggregation trees and the per-round stats recursion.
//!
//! A tree is rooted at the sink and spans the participating nodes. Raw data
//! flows leaf-to-root: each node aggregates every `alpha` raw units it
//! generates or receives into one unit-size packet and forwards the packets
//! to its parent. The recursion computed here, per node and per round:
//!
//! - `tot`: raw-data units generated plus received (own rho + child tots)
//! - `delta`: packets forwarded, `ceil(tot / alpha)`
//! - `eng`: energy drained, `e_rx * (sum of child deltas) + e_tx * delta`
//! - `life`: whole rounds the residual energy funds, `floor(energy / eng)`,
//!   unbounded when `eng = 0`
//!
//! The tree's lifetime is the minimum `life` over its non-sink nodes. The
//! sink only collects: it is assigned `eng = 0`, unbounded life, and is
//! excluded from the minimum.

use std::fmt;

use thiserror::Error;

use crate::network::{Network, NodeId};

/// Rounds a node or tree can keep operating; unbounded when nothing drains.
///
/// Ordered by rounds, with `Unbounded` greater than every finite value, so
/// `min` over node lifetimes implements the tree-lifetime rule directly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Lifetime {
    Rounds(u64),
    Unbounded,
}

impl Lifetime {
    /// The finite round count, if any.
    pub fn rounds(self) -> Option<u64> {
        match self {
            Lifetime::Rounds(r) => Some(r),
            Lifetime::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Lifetime::Unbounded)
    }
}

impl fmt::Display for Lifetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lifetime::Rounds(r) => write!(f, "{r}"),
            Lifetime::Unbounded => write!(f, "inf"),
        }
    }
}

/// Radio energy constants and the aggregation ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnergyModel {
    alpha: u64,
    e_tx: u64,
    e_rx: u64,
}

impl EnergyModel {
    /// `alpha` must be at least 2; `e_tx` and `e_rx` must not both be zero.
    pub fn new(alpha: u64, e_tx: u64, e_rx: u64) -> Result<Self, TreeError> {
        if alpha < 2 {
            return Err(TreeError::BadEnergyModel(format!(
                "alpha must be >= 2, got {alpha}"
            )));
        }
        if e_tx == 0 && e_rx == 0 {
            return Err(TreeError::BadEnergyModel(
                "e_tx and e_rx must not both be zero".into(),
            ));
        }
        Ok(EnergyModel { alpha, e_tx, e_rx })
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn e_tx(&self) -> u64 {
        self.e_tx
    }

    pub fn e_rx(&self) -> u64 {
        self.e_rx
    }
}

impl Default for EnergyModel {
    /// Simulation constants: alpha 2, e_tx 2, e_rx 1.
    fn default() -> Self {
        EnergyModel {
            alpha: 2,
            e_tx: 2,
            e_rx: 1,
        }
    }
}

/// Per-node, per-round quantities for one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeStats {
    /// Raw-data units generated and received per round.
    pub tot: u64,
    /// Unit-size packets forwarded per round.
    pub delta: u64,
    /// Energy units drained per round.
    pub eng: u64,
    /// Whole rounds the residual energy funds.
    pub life: Lifetime,
}

/// Stats for every participant of one tree, keyed by node id.
#[derive(Clone, Debug)]
pub struct StatsMap {
    stats: Vec<Option<NodeStats>>,
}

impl StatsMap {
    pub fn get(&self, u: NodeId) -> Option<&NodeStats> {
        self.stats.get(u.idx()).and_then(Option::as_ref)
    }

    /// Participants in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &NodeStats)> {
        self.stats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (NodeId(i as u32), s)))
    }
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("invalid energy model: {0}")]
    BadEnergyModel(String),
    #[error("invalid tree: {}", fmt_violations(.0))]
    InvalidTree(Vec<Violation>),
    #[error("malformed tree structure: {0}")]
    Malformed(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One way a tree fails its structural invariants against a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Node lies on or below a parent-pointer cycle.
    Cycle { node: NodeId },
    /// Tree edge is not an edge of the network.
    NonEdge { child: NodeId, parent: NodeId },
    /// Non-sink participant without a participating parent.
    Orphan { node: NodeId },
    /// Hop count disagrees with the parent's hop + 1 (or sink hop != 0).
    BadHop { node: NodeId, expected: u32, actual: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { node } => write!(f, "cycle through node {node}"),
            Violation::NonEdge { child, parent } => {
                write!(f, "tree edge ({child}, {parent}) is not a network edge")
            }
            Violation::Orphan { node } => write!(f, "node {node} has no participating parent"),
            Violation::BadHop {
                node,
                expected,
                actual,
            } => write!(f, "node {node} has hop {actual}, expected {expected}"),
        }
    }
}

fn fmt_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A data aggregation tree rooted at the sink.
///
/// Participation may be a strict subset of the network (rebuilds drop
/// exhausted relays), but always includes the sink. Storage is indexed by
/// node id over the full network size; children lists are kept sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationTree {
    sink: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    hop: Vec<u32>,
    in_tree: Vec<bool>,
}

impl AggregationTree {
    /// Builds a tree from `(child, parent)` edges over `net`.
    ///
    /// Participants are the sink plus every edge endpoint. Hop counts are
    /// derived as depth in the tree. Fails if a child repeats, the sink
    /// appears as a child, an edge is not a network edge, or some
    /// participant is not connected to the sink through the edges.
    pub fn from_edges(
        net: &Network,
        sink: NodeId,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, TreeError> {
        let n = net.len();
        if sink.idx() >= n {
            return Err(TreeError::UnknownNode(sink));
        }
        let mut parent = vec![None; n];
        let mut in_tree = vec![false; n];
        in_tree[sink.idx()] = true;
        for &(c, p) in edges {
            if c.idx() >= n {
                return Err(TreeError::UnknownNode(c));
            }
            if p.idx() >= n {
                return Err(TreeError::UnknownNode(p));
            }
            if c == sink {
                return Err(TreeError::Malformed("sink cannot have a parent".into()));
            }
            if parent[c.idx()].is_some() {
                return Err(TreeError::Malformed(format!("node {c} has two parents")));
            }
            if net.adj(c).binary_search(&p).is_err() {
                return Err(TreeError::InvalidTree(vec![Violation::NonEdge {
                    child: c,
                    parent: p,
                }]));
            }
            parent[c.idx()] = Some(p);
            in_tree[c.idx()] = true;
            in_tree[p.idx()] = true;
        }
        let mut tree = AggregationTree {
            sink,
            children: derive_children(&parent, n),
            parent,
            hop: vec![0; n],
            in_tree,
        };
        // Depth-first from the sink assigns hops and detects nodes that the
        // edges fail to connect (dangling parents, cycles).
        let mut reached = vec![false; n];
        reached[sink.idx()] = true;
        let mut stack = vec![sink];
        while let Some(u) = stack.pop() {
            for &c in &tree.children[u.idx()] {
                tree.hop[c.idx()] = tree.hop[u.idx()] + 1;
                reached[c.idx()] = true;
                stack.push(c);
            }
        }
        for i in 0..n {
            if tree.in_tree[i] && !reached[i] {
                return Err(TreeError::Malformed(format!(
                    "node {} is not connected to the sink",
                    NodeId(i as u32)
                )));
            }
        }
        Ok(tree)
    }

    /// Assembles a tree from already-consistent arrays. Callers guarantee
    /// that parent edges exist in the network, hops are parent hop + 1, and
    /// every participant reaches the sink.
    pub(crate) fn from_parts(
        sink: NodeId,
        parent: Vec<Option<NodeId>>,
        hop: Vec<u32>,
        in_tree: Vec<bool>,
    ) -> Self {
        let n = parent.len();
        AggregationTree {
            sink,
            children: derive_children(&parent, n),
            parent,
            hop,
            in_tree,
        }
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    /// Storage width: the id space of the underlying network.
    pub fn id_space(&self) -> usize {
        self.parent.len()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u.idx() < self.in_tree.len() && self.in_tree[u.idx()]
    }

    /// Parent of `u`; `None` for the sink and non-participants.
    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.parent[u.idx()]
    }

    /// Children of `u` in ascending id order.
    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.children[u.idx()]
    }

    /// Hop count of `u` (depth below the sink).
    pub fn hop(&self, u: NodeId) -> u32 {
        self.hop[u.idx()]
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        self.children[u.idx()].is_empty()
    }

    /// Participants in ascending id order.
    pub fn participants(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.in_tree
            .iter()
            .enumerate()
            .filter_map(|(i, &in_t)| in_t.then_some(NodeId(i as u32)))
    }

    pub fn participant_count(&self) -> usize {
        self.in_tree.iter().filter(|&&b| b).count()
    }

    /// Participants ordered by ascending hop, ties by ascending id.
    pub fn bfs_order(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = self.participants().collect();
        order.sort_by_key(|&u| (self.hop[u.idx()], u));
        order
    }

    /// Moves `child` under `new_parent`, keeping children lists sorted.
    /// Hops are intentionally untouched; callers only move nodes between
    /// parents at the same hop level.
    pub(crate) fn reattach(&mut self, child: NodeId, new_parent: NodeId) {
        let old = self.parent[child.idx()].expect("reattach of a parentless node");
        let list = &mut self.children[old.idx()];
        let pos = list.binary_search(&child).expect("child list out of sync");
        list.remove(pos);
        let list = &mut self.children[new_parent.idx()];
        let pos = list.binary_search(&child).unwrap_err();
        list.insert(pos, child);
        self.parent[child.idx()] = Some(new_parent);
    }

    /// Serializes in the line-oriented text format, edges ordered by child.
    pub fn to_text(&self) -> String {
        let mut out = format!("tree {}\n", self.sink);
        for u in self.participants() {
            if let Some(p) = self.parent[u.idx()] {
                out.push_str(&format!("edge {u} {p}\n"));
            }
        }
        out
    }

    /// Parses the text format and validates the result against `net`.
    pub fn from_text(net: &Network, text: &str) -> Result<Self, TreeError> {
        let mut sink: Option<NodeId> = None;
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parse_id = |tok: &str| -> Result<NodeId, TreeError> {
                tok.parse::<u32>().map(NodeId).map_err(|_| TreeError::Parse {
                    line: lineno + 1,
                    msg: format!("bad node id: {tok}"),
                })
            };
            match tokens[0] {
                "tree" if tokens.len() == 2 => {
                    if sink.is_some() {
                        return Err(TreeError::Parse {
                            line: lineno + 1,
                            msg: "duplicate tree header".into(),
                        });
                    }
                    sink = Some(parse_id(tokens[1])?);
                }
                "edge" if tokens.len() == 3 => {
                    edges.push((parse_id(tokens[1])?, parse_id(tokens[2])?));
                }
                _ => {
                    return Err(TreeError::Parse {
                        line: lineno + 1,
                        msg: format!("expected `tree <sink>` or `edge <child> <parent>`: {line}"),
                    });
                }
            }
        }
        let sink = sink.ok_or(TreeError::Parse {
            line: 0,
            msg: "missing tree header".into(),
        })?;
        let tree = AggregationTree::from_edges(net, sink, &edges)?;
        let violations = validate_tree(net, &tree);
        if !violations.is_empty() {
            return Err(TreeError::InvalidTree(violations));
        }
        Ok(tree)
    }

    #[cfg(test)]
    fn corrupt_parent(&mut self, u: NodeId, p: Option<NodeId>) {
        self.parent[u.idx()] = p;
        self.children = derive_children(&self.parent, self.parent.len());
    }

    #[cfg(test)]
    fn corrupt_hop(&mut self, u: NodeId, h: u32) {
        self.hop[u.idx()] = h;
    }
}

fn derive_children(parent: &[Option<NodeId>], n: usize) -> Vec<Vec<NodeId>> {
    let mut children = vec![Vec::new(); n];
    for i in 0..n {
        if let Some(p) = parent[i] {
            // Ascending i keeps each list sorted.
            children[p.idx()].push(NodeId(i as u32));
        }
    }
    children
}

/// Checks the structural invariants of `tree` against `net` and lists every
/// violation found; an empty list means the tree is valid.
pub fn validate_tree(net: &Network, tree: &AggregationTree) -> Vec<Violation> {
    let mut violations = Vec::new();
    let sink = tree.sink;
    if tree.hop(sink) != 0 {
        violations.push(Violation::BadHop {
            node: sink,
            expected: 0,
            actual: tree.hop(sink),
        });
    }
    for u in tree.participants() {
        let Some(p) = tree.parent(u) else { continue };
        if net.adj(u).binary_search(&p).is_err() {
            violations.push(Violation::NonEdge { child: u, parent: p });
        }
        if tree.contains(p) && u != p {
            let expected = tree.hop(p) + 1;
            if tree.hop(u) != expected {
                violations.push(Violation::BadHop {
                    node: u,
                    expected,
                    actual: tree.hop(u),
                });
            }
        }
    }
    // Walk parent chains with memoization: Ok chains reach the sink, Bad
    // chains end in an orphan or loop back on themselves.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Unknown,
        Ok,
        Bad,
    }
    let n = tree.id_space();
    let mut mark = vec![Mark::Unknown; n];
    let mut on_path = vec![usize::MAX; n];
    let mut reported_cycle = vec![false; n];
    for start in tree.participants() {
        if mark[start.idx()] != Mark::Unknown {
            continue;
        }
        let mut path: Vec<NodeId> = Vec::new();
        let mut cur = start;
        let outcome = loop {
            if cur == sink || mark[cur.idx()] == Mark::Ok {
                break Mark::Ok;
            }
            if mark[cur.idx()] == Mark::Bad {
                break Mark::Bad;
            }
            if on_path[cur.idx()] != usize::MAX {
                for &c in &path[on_path[cur.idx()]..] {
                    if !reported_cycle[c.idx()] {
                        reported_cycle[c.idx()] = true;
                        violations.push(Violation::Cycle { node: c });
                    }
                }
                break Mark::Bad;
            }
            on_path[cur.idx()] = path.len();
            path.push(cur);
            match tree.parent(cur) {
                Some(p) if tree.contains(p) => cur = p,
                _ => {
                    violations.push(Violation::Orphan { node: cur });
                    break Mark::Bad;
                }
            }
        };
        for &c in &path {
            on_path[c.idx()] = usize::MAX;
            mark[c.idx()] = outcome;
        }
    }
    violations
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Evaluates the per-round recursion for every participant.
///
/// Bottom-up over the tree: `tot(u) = rho(u) + sum of child tots`,
/// `delta = ceil(tot / alpha)`, `eng = e_rx * (sum of child deltas) +
/// e_tx * delta`, `life = floor(energy / eng)` (unbounded when `eng = 0`).
/// The sink gets `tot`/`delta` per the formulas but `eng = 0` and unbounded
/// life: it only collects.
pub fn compute_stats(
    net: &Network,
    tree: &AggregationTree,
    em: &EnergyModel,
) -> Result<StatsMap, TreeError> {
    let violations = validate_tree(net, tree);
    if !violations.is_empty() {
        return Err(TreeError::InvalidTree(violations));
    }
    Ok(compute_stats_unchecked(net, tree, em))
}

/// `compute_stats` without the validity check, for callers that construct
/// trees through the crate's own builders.
pub(crate) fn compute_stats_unchecked(
    net: &Network,
    tree: &AggregationTree,
    em: &EnergyModel,
) -> StatsMap {
    let n = tree.id_space();
    let mut stats: Vec<Option<NodeStats>> = vec![None; n];
    // Deepest first, so children are final before their parent.
    let mut order: Vec<NodeId> = tree.participants().collect();
    order.sort_by_key(|&u| std::cmp::Reverse(tree.hop(u)));
    for u in order {
        let mut tot = net.rho(u);
        let mut child_delta = 0u64;
        for &c in tree.children(u) {
            let cs = stats[c.idx()].expect("child stats computed first");
            tot += cs.tot;
            child_delta += cs.delta;
        }
        let delta = ceil_div(tot, em.alpha());
        let (eng, life) = if u == tree.sink() {
            (0, Lifetime::Unbounded)
        } else {
            let eng = em.e_rx() * child_delta + em.e_tx() * delta;
            let life = if eng == 0 {
                Lifetime::Unbounded
            } else {
                Lifetime::Rounds(net.energy(u) / eng)
            };
            (eng, life)
        };
        stats[u.idx()] = Some(NodeStats {
            tot,
            delta,
            eng,
            life,
        });
    }
    StatsMap { stats }
}

/// Minimum node lifetime over all non-sink participants; unbounded when
/// there are none or all are unbounded.
pub fn tree_lifetime(stats: &StatsMap, sink: NodeId) -> Lifetime {
    stats
        .iter()
        .filter(|&(u, _)| u != sink)
        .map(|(_, s)| s.life)
        .min()
        .unwrap_or(Lifetime::Unbounded)
}

/// The lowest-id non-sink participant achieving the minimum lifetime;
/// `None` when the tree lifetime is unbounded (nothing constrains it).
pub fn bottleneck(stats: &StatsMap, sink: NodeId) -> Option<(NodeId, Lifetime)> {
    let min = tree_lifetime(stats, sink);
    if min.is_unbounded() {
        return None;
    }
    stats
        .iter()
        .find(|&(u, s)| u != sink && s.life == min)
        .map(|(u, _)| (u, min))
}
