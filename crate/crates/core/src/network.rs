//! Unit-disk network model: node records, random deployments, connectivity.
//!
//! A network is a set of nodes with planar positions, integer residual
//! energies, and integer per-round data rates. Two nodes are neighbors iff
//! their Euclidean distance is at most the shared communication range
//! (boundary inclusive). One node is the sink: it generates no data and
//! collects everything.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::seed::derive_seed;

/// Identifier of a node; ids are dense in `[0, node_count)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    /// The id as a vector index.
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Role of a node, derived from its data rate and the sink designation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    /// Generates `rho > 0` units of raw data per working round.
    Source,
    /// Generates nothing; only forwards.
    Relay,
    /// The collector; never a source or relay.
    Sink,
}

/// One sensor node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    /// Residual energy in energy units; only ever decreases.
    pub energy: u64,
    /// Raw data units generated per working round.
    pub rho: u64,
    pub kind: NodeKind,
}

/// Node description used when assembling a network by hand or from a file.
#[derive(Clone, Copy, Debug)]
pub struct NodeInit {
    pub x: f64,
    pub y: f64,
    pub energy: u64,
    pub rho: u64,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no connected deployment found after {attempts} attempts")]
    ConnectivityFailure { attempts: u32 },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("sink is not in the eligible set")]
    SinkNotEligible,
    #[error("network is not connected")]
    Disconnected,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters for a random deployment.
#[derive(Clone, Debug)]
pub struct DeploymentConfig {
    /// Number of non-sink nodes; the sink is placed in addition to these.
    pub n_total: u32,
    /// How many of the non-sink nodes are relays (`rho = 0`).
    pub n_relays: u32,
    /// Field dimensions `(width, height)`.
    pub field: (f64, f64),
    pub comm_range: f64,
    /// Initial energy assigned to every node.
    pub energy_init: u64,
    /// Inclusive interval from which source data rates are drawn.
    pub rho_range: (u64, u64),
    pub seed: u64,
}

impl DeploymentConfig {
    fn validate(&self) -> Result<(), NetworkError> {
        if self.n_relays > self.n_total {
            return Err(NetworkError::InvalidConfig(format!(
                "n_relays ({}) exceeds n_total ({})",
                self.n_relays, self.n_total
            )));
        }
        if !(self.comm_range > 0.0) {
            return Err(NetworkError::InvalidConfig(
                "comm_range must be positive".into(),
            ));
        }
        if !(self.field.0 > 0.0 && self.field.1 > 0.0) {
            return Err(NetworkError::InvalidConfig(
                "field dimensions must be positive".into(),
            ));
        }
        if self.rho_range.0 < 1 || self.rho_range.0 > self.rho_range.1 {
            return Err(NetworkError::InvalidConfig(format!(
                "rho_range [{}, {}] must satisfy 1 <= min <= max",
                self.rho_range.0, self.rho_range.1
            )));
        }
        Ok(())
    }
}

/// A wireless sensor network as a unit-disk graph.
///
/// Immutable after construction except for energy updates applied by the
/// round scheduler. The adjacency structure is precomputed from positions
/// and stays valid because positions never change.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<NodeRecord>,
    sink_id: NodeId,
    comm_range: f64,
    field: (f64, f64),
    /// Sorted neighbor lists, indexed by node id.
    adj: Vec<Vec<NodeId>>,
}

impl Network {
    /// Assembles a network from explicit node descriptions.
    ///
    /// Ids are assigned by position in `nodes`. Node kinds are derived:
    /// the node at `sink_id` must have `rho = 0`, every other node is a
    /// source iff its `rho > 0`. Connectivity is not checked here; loaders
    /// and generators verify it separately.
    pub fn new(
        comm_range: f64,
        field: (f64, f64),
        sink_id: NodeId,
        nodes: &[NodeInit],
    ) -> Result<Self, NetworkError> {
        if !(comm_range > 0.0) {
            return Err(NetworkError::InvalidConfig(
                "comm_range must be positive".into(),
            ));
        }
        if sink_id.idx() >= nodes.len() {
            return Err(NetworkError::UnknownNode(sink_id));
        }
        let records: Vec<NodeRecord> = nodes
            .iter()
            .enumerate()
            .map(|(i, init)| {
                let id = NodeId(i as u32);
                let kind = if id == sink_id {
                    NodeKind::Sink
                } else if init.rho > 0 {
                    NodeKind::Source
                } else {
                    NodeKind::Relay
                };
                NodeRecord {
                    id,
                    x: init.x,
                    y: init.y,
                    energy: init.energy,
                    rho: init.rho,
                    kind,
                }
            })
            .collect();
        if records[sink_id.idx()].rho != 0 {
            return Err(NetworkError::InvalidConfig(format!(
                "sink {} must have rho = 0",
                sink_id
            )));
        }
        let adj = build_adjacency(&records, comm_range);
        Ok(Network {
            nodes: records,
            sink_id,
            comm_range,
            field,
            adj,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink_id(&self) -> NodeId {
        self.sink_id
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn field(&self) -> (f64, f64) {
        self.field
    }

    pub fn node(&self, u: NodeId) -> Result<&NodeRecord, NetworkError> {
        self.nodes.get(u.idx()).ok_or(NetworkError::UnknownNode(u))
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    /// Residual energy of `u`. Panics on an unknown id; use [`Network::node`]
    /// for checked access.
    pub fn energy(&self, u: NodeId) -> u64 {
        self.nodes[u.idx()].energy
    }

    /// Data rate of `u`.
    pub fn rho(&self, u: NodeId) -> u64 {
        self.nodes[u.idx()].rho
    }

    /// All nodes within communication range of `u` (boundary inclusive),
    /// sorted by id.
    pub fn neighbors(&self, u: NodeId) -> Result<&[NodeId], NetworkError> {
        self.adj
            .get(u.idx())
            .map(Vec::as_slice)
            .ok_or(NetworkError::UnknownNode(u))
    }

    /// Unchecked neighbor access for hot paths where `u` is known valid.
    pub(crate) fn adj(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u.idx()]
    }

    /// Subtracts `amount` from the energy of `u`.
    pub(crate) fn debit_energy(&mut self, u: NodeId, amount: u64) {
        let e = &mut self.nodes[u.idx()].energy;
        *e = e.checked_sub(amount).expect("energy drained below zero");
    }

    /// True iff every node in `eligible` is reachable from the sink through
    /// edges whose endpoints are both eligible.
    pub fn is_connected(&self, eligible: &BTreeSet<NodeId>) -> Result<bool, NetworkError> {
        if !eligible.contains(&self.sink_id) {
            return Err(NetworkError::SinkNotEligible);
        }
        for &u in eligible {
            if u.idx() >= self.nodes.len() {
                return Err(NetworkError::UnknownNode(u));
            }
        }
        let reached = self.reachable_from_sink(eligible);
        Ok(reached.len() == eligible.len())
    }

    /// Nodes of `eligible` reachable from the sink inside the eligible
    /// subgraph, as a sorted set. The sink must be eligible.
    pub(crate) fn reachable_from_sink(&self, eligible: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut in_set = vec![false; self.nodes.len()];
        for &u in eligible {
            in_set[u.idx()] = true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[self.sink_id.idx()] = true;
        queue.push_back(self.sink_id);
        let mut reached = BTreeSet::new();
        reached.insert(self.sink_id);
        while let Some(u) = queue.pop_front() {
            for &v in self.adj(u) {
                if in_set[v.idx()] && !seen[v.idx()] {
                    seen[v.idx()] = true;
                    reached.insert(v);
                    queue.push_back(v);
                }
            }
        }
        reached
    }

    /// The set of all node ids.
    pub fn all_nodes(&self) -> BTreeSet<NodeId> {
        (0..self.nodes.len() as u32).map(NodeId).collect()
    }

    /// Serializes the network in the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "net {} {} {} {}\n",
            self.comm_range, self.field.0, self.field.1, self.sink_id
        ));
        for n in &self.nodes {
            out.push_str(&format!(
                "node {} {} {} {} {}\n",
                n.id, n.x, n.y, n.energy, n.rho
            ));
        }
        out
    }

    /// Parses the text format, validating node invariants and connectivity.
    pub fn from_text(text: &str) -> Result<Self, NetworkError> {
        let mut header: Option<(f64, f64, f64, NodeId)> = None;
        let mut nodes: Vec<(NodeId, NodeInit)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parse = |tok: &str, what: &str| -> Result<f64, NetworkError> {
                tok.parse::<f64>().map_err(|_| NetworkError::Parse {
                    line: lineno + 1,
                    msg: format!("bad {what}: {tok}"),
                })
            };
            let parse_int = |tok: &str, what: &str| -> Result<u64, NetworkError> {
                tok.parse::<u64>().map_err(|_| NetworkError::Parse {
                    line: lineno + 1,
                    msg: format!("bad {what}: {tok}"),
                })
            };
            match tokens[0] {
                "net" => {
                    if tokens.len() != 5 {
                        return Err(NetworkError::Parse {
                            line: lineno + 1,
                            msg: "expected: net <comm_range> <field_w> <field_h> <sink_id>"
                                .into(),
                        });
                    }
                    if header.is_some() {
                        return Err(NetworkError::Parse {
                            line: lineno + 1,
                            msg: "duplicate net header".into(),
                        });
                    }
                    header = Some((
                        parse(tokens[1], "comm_range")?,
                        parse(tokens[2], "field width")?,
                        parse(tokens[3], "field height")?,
                        NodeId(parse_int(tokens[4], "sink id")? as u32),
                    ));
                }
                "node" => {
                    if tokens.len() != 6 {
                        return Err(NetworkError::Parse {
                            line: lineno + 1,
                            msg: "expected: node <id> <x> <y> <energy> <rho>".into(),
                        });
                    }
                    let id = NodeId(parse_int(tokens[1], "node id")? as u32);
                    nodes.push((
                        id,
                        NodeInit {
                            x: parse(tokens[2], "x")?,
                            y: parse(tokens[3], "y")?,
                            energy: parse_int(tokens[4], "energy")?,
                            rho: parse_int(tokens[5], "rho")?,
                        },
                    ));
                }
                other => {
                    return Err(NetworkError::Parse {
                        line: lineno + 1,
                        msg: format!("unknown record type: {other}"),
                    });
                }
            }
        }
        let (comm_range, w, h, sink_id) = header.ok_or(NetworkError::Parse {
            line: 0,
            msg: "missing net header".into(),
        })?;
        let mut inits = vec![None; nodes.len()];
        for (id, init) in nodes {
            if id.idx() >= inits.len() || inits[id.idx()].is_some() {
                return Err(NetworkError::Parse {
                    line: 0,
                    msg: format!("node ids must be unique and dense in [0, n); offending id {id}"),
                });
            }
            inits[id.idx()] = Some(init);
        }
        let inits: Vec<NodeInit> = inits.into_iter().map(Option::unwrap).collect();
        let net = Network::new(comm_range, (w, h), sink_id, &inits)?;
        if !net.is_connected(&net.all_nodes())? {
            return Err(NetworkError::Disconnected);
        }
        Ok(net)
    }
}

fn build_adjacency(nodes: &[NodeRecord], comm_range: f64) -> Vec<Vec<NodeId>> {
    let n = nodes.len();
    let r2 = comm_range * comm_range;
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = nodes[i].x - nodes[j].x;
            let dy = nodes[i].y - nodes[j].y;
            if dx * dx + dy * dy <= r2 {
                adj[i].push(NodeId(j as u32));
                adj[j].push(NodeId(i as u32));
            }
        }
    }
    // Lists are already sorted: j grows within each i, and pushes into
    // adj[j] happen in increasing i order.
    adj
}

/// Generates a random connected deployment.
///
/// The sink gets id 0 at the field center. Ids `1..=n_total` are the
/// non-sink nodes: sources first, then relays. Positions, then the data
/// rate for sources, are drawn per node in id order from a `ChaCha8Rng`.
/// Attempt 0 seeds the generator with `cfg.seed` itself; if the draw is
/// disconnected, attempt `i > 0` reseeds with `derive_seed(cfg.seed, [i])`,
/// up to 1000 attempts.
pub fn generate_network(cfg: &DeploymentConfig) -> Result<Network, NetworkError> {
    cfg.validate()?;
    const MAX_ATTEMPTS: u32 = 1000;
    let n_sources = cfg.n_total - cfg.n_relays;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = if attempt == 0 {
            cfg.seed
        } else {
            derive_seed(cfg.seed, &[attempt as u64])
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inits = Vec::with_capacity(cfg.n_total as usize + 1);
        inits.push(NodeInit {
            x: cfg.field.0 / 2.0,
            y: cfg.field.1 / 2.0,
            energy: cfg.energy_init,
            rho: 0,
        });
        for i in 0..cfg.n_total {
            let x = rng.random_range(0.0..cfg.field.0);
            let y = rng.random_range(0.0..cfg.field.1);
            let rho = if i < n_sources {
                rng.random_range(cfg.rho_range.0..=cfg.rho_range.1)
            } else {
                0
            };
            inits.push(NodeInit {
                x,
                y,
                energy: cfg.energy_init,
                rho,
            });
        }
        let net = Network::new(cfg.comm_range, cfg.field, NodeId(0), &inits)?;
        if net.is_connected(&net.all_nodes())? {
            return Ok(net);
        }
    }
    Err(NetworkError::ConnectivityFailure {
        attempts: MAX_ATTEMPTS,
    })
}
