//! Lifetime-maximizing tree construction.
//!
//! Two refinement steps run on top of the shortest path tree:
//!
//! 1. Leafification: internal nodes with little residual energy are turned
//!    into leaves by reattaching their children to better-provisioned
//!    neighbors at the same hop level.
//! 2. Local adjustment: each node may switch its parent to another neighbor
//!    one hop closer to the sink when that strictly raises the minimum
//!    lifetime among the nodes the switch affects.
//!
//! Both steps preserve hop counts, so every intermediate tree stays a
//! shortest-path tree, and both only ever accept changes that keep the
//! tree lifetime from decreasing.
//!
//! A parent switch changes stats only along the old and new parent's
//! ancestor chains up to their lowest common ancestor, so moves are
//! evaluated incrementally in O(depth) rather than recomputing the tree.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::network::{Network, NetworkError, NodeId};
use crate::spt::build_spt;
use crate::tree::{validate_tree, AggregationTree, EnergyModel, Lifetime, TreeError};

/// Tuning knobs for the refinement steps.
#[derive(Clone, Copy, Debug)]
pub struct HeuristicParams {
    theta: f64,
    max_passes: u32,
}

impl HeuristicParams {
    /// `theta` is the low-energy threshold as a fraction of the median
    /// residual energy, in `[0, 1]`; `max_passes` bounds adjustment sweeps.
    pub fn new(theta: f64, max_passes: u32) -> Result<Self, HeuristicError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(HeuristicError::InvalidParams(format!(
                "theta must be in [0, 1], got {theta}"
            )));
        }
        if max_passes < 1 {
            return Err(HeuristicError::InvalidParams(
                "max_passes must be at least 1".into(),
            ));
        }
        Ok(HeuristicParams { theta, max_passes })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn max_passes(&self) -> u32 {
        self.max_passes
    }
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            theta: 0.1,
            max_passes: 10,
        }
    }
}

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("invalid heuristic params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Tree plus per-node stats kept consistent under parent switches.
struct TreeState<'a> {
    net: &'a Network,
    em: &'a EnergyModel,
    tree: AggregationTree,
    tot: Vec<u64>,
    delta: Vec<u64>,
    /// Sum of children's delta, the receive half of the energy formula.
    child_delta: Vec<u64>,
    life: Vec<Lifetime>,
}

impl<'a> TreeState<'a> {
    fn new(net: &'a Network, em: &'a EnergyModel, tree: AggregationTree) -> Self {
        let n = tree.id_space();
        let mut st = TreeState {
            net,
            em,
            tree,
            tot: vec![0; n],
            delta: vec![0; n],
            child_delta: vec![0; n],
            life: vec![Lifetime::Unbounded; n],
        };
        let mut order: Vec<NodeId> = st.tree.participants().collect();
        order.sort_by_key(|&u| std::cmp::Reverse(st.tree.hop(u)));
        for u in order {
            let mut tot = net.rho(u);
            let mut cd = 0u64;
            for &c in st.tree.children(u) {
                tot += st.tot[c.idx()];
                cd += st.delta[c.idx()];
            }
            st.tot[u.idx()] = tot;
            st.child_delta[u.idx()] = cd;
            st.delta[u.idx()] = tot.div_ceil(em.alpha());
            st.life[u.idx()] = st.life_of(u, cd, st.delta[u.idx()]);
        }
        st
    }

    fn into_tree(self) -> AggregationTree {
        self.tree
    }

    /// Lifetime of `u` given its receive load and packet count.
    fn life_of(&self, u: NodeId, child_delta: u64, delta: u64) -> Lifetime {
        if u == self.tree.sink() {
            return Lifetime::Unbounded;
        }
        let eng = self.em.e_rx() * child_delta + self.em.e_tx() * delta;
        if eng == 0 {
            Lifetime::Unbounded
        } else {
            Lifetime::Rounds(self.net.energy(u) / eng)
        }
    }

    /// Minimum lifetime over non-sink participants.
    fn tree_min(&self) -> Lifetime {
        let sink = self.tree.sink();
        self.tree
            .participants()
            .filter(|&u| u != sink)
            .map(|u| self.life[u.idx()])
            .min()
            .unwrap_or(Lifetime::Unbounded)
    }

    /// `a`'s lifetime before and after receiving load changes (`dtot` raw
    /// units, `dcd` child packets), plus the change in `a`'s own delta that
    /// the level above must absorb.
    fn preview(&self, a: NodeId, dtot: i64, dcd: i64) -> (Lifetime, Lifetime, i64) {
        let new_tot = (self.tot[a.idx()] as i64 + dtot) as u64;
        let new_cd = (self.child_delta[a.idx()] as i64 + dcd) as u64;
        let new_delta = new_tot.div_ceil(self.em.alpha());
        let new_life = self.life_of(a, new_cd, new_delta);
        (
            self.life[a.idx()],
            new_life,
            new_delta as i64 - self.delta[a.idx()] as i64,
        )
    }

    fn write_node(&mut self, a: NodeId, dtot: i64, dcd: i64) -> i64 {
        let new_tot = (self.tot[a.idx()] as i64 + dtot) as u64;
        let new_cd = (self.child_delta[a.idx()] as i64 + dcd) as u64;
        let new_delta = new_tot.div_ceil(self.em.alpha());
        let dd = new_delta as i64 - self.delta[a.idx()] as i64;
        self.tot[a.idx()] = new_tot;
        self.child_delta[a.idx()] = new_cd;
        self.delta[a.idx()] = new_delta;
        self.life[a.idx()] = self.life_of(a, new_cd, new_delta);
        dd
    }

    /// Evaluates moving `u` from its parent to `v` (same hop level as the
    /// parent). Returns the minimum lifetime over all affected nodes (both
    /// ancestor chains up to and including their lowest common ancestor)
    /// before and after the move. No mutation.
    fn eval_parent_switch(&self, u: NodeId, v: NodeId) -> (Lifetime, Lifetime) {
        let x = self.tree.parent(u).expect("switch of a parentless node");
        debug_assert_ne!(v, x);
        debug_assert_eq!(self.tree.hop(v), self.tree.hop(x));
        let tot_u = self.tot[u.idx()] as i64;
        let delta_u = self.delta[u.idx()] as i64;
        let mut min_before = Lifetime::Unbounded;
        let mut min_after = Lifetime::Unbounded;
        let (mut ax, mut av) = (x, v);
        let (mut cd_x, mut cd_v) = (-delta_u, delta_u);
        loop {
            if ax == av {
                // LCA: subtree totals cancel, only child deltas shift.
                let (before, after, _) = self.preview(ax, 0, cd_x + cd_v);
                min_before = min_before.min(before);
                min_after = min_after.min(after);
                return (min_before, min_after);
            }
            let (before, after, dd) = self.preview(ax, -tot_u, cd_x);
            min_before = min_before.min(before);
            min_after = min_after.min(after);
            cd_x = dd;
            let (before, after, dd) = self.preview(av, tot_u, cd_v);
            min_before = min_before.min(before);
            min_after = min_after.min(after);
            cd_v = dd;
            // Chains share a hop level, so they reach the LCA in lockstep.
            ax = self.tree.parent(ax).expect("chain left the tree");
            av = self.tree.parent(av).expect("chain left the tree");
        }
    }

    /// Commits the move evaluated by `eval_parent_switch`.
    fn apply_parent_switch(&mut self, u: NodeId, v: NodeId) {
        let x = self.tree.parent(u).expect("switch of a parentless node");
        self.tree.reattach(u, v);
        let tot_u = self.tot[u.idx()] as i64;
        let delta_u = self.delta[u.idx()] as i64;
        let (mut ax, mut av) = (x, v);
        let (mut cd_x, mut cd_v) = (-delta_u, delta_u);
        loop {
            if ax == av {
                let dd = self.write_node(ax, 0, cd_x + cd_v);
                debug_assert_eq!(dd, 0, "LCA delta must not change");
                return;
            }
            cd_x = self.write_node(ax, -tot_u, cd_x);
            cd_v = self.write_node(av, tot_u, cd_v);
            ax = self.tree.parent(ax).expect("chain left the tree");
            av = self.tree.parent(av).expect("chain left the tree");
        }
    }

    /// `w`'s lifetime if `c` were attached under it, with current stats.
    fn post_attach_life(&self, w: NodeId, c: NodeId) -> Lifetime {
        let new_tot = self.tot[w.idx()] + self.tot[c.idx()];
        let new_cd = self.child_delta[w.idx()] + self.delta[c.idx()];
        let new_delta = new_tot.div_ceil(self.em.alpha());
        self.life_of(w, new_cd, new_delta)
    }

    /// Turns low-energy internal nodes into leaves where possible.
    ///
    /// Candidates are non-sink internal nodes with residual energy at most
    /// `theta` times the median over non-sink participants, processed
    /// poorest first (ties by id). A candidate is committed only if every
    /// child finds an alternative parent at its own hop level and the tree
    /// lifetime does not drop; otherwise the candidate is fully reverted.
    fn leafify(&mut self, p: &HeuristicParams) {
        let sink = self.tree.sink();
        let mut energies: Vec<u64> = self
            .tree
            .participants()
            .filter(|&u| u != sink)
            .map(|u| self.net.energy(u))
            .collect();
        if energies.is_empty() {
            return;
        }
        energies.sort_unstable();
        let median = energies[(energies.len() - 1) / 2];
        let threshold = p.theta() * median as f64;
        let mut candidates: Vec<(u64, NodeId)> = self
            .tree
            .participants()
            .filter(|&u| u != sink && !self.tree.is_leaf(u))
            .map(|u| (self.net.energy(u), u))
            .filter(|&(e, _)| e as f64 <= threshold)
            .collect();
        candidates.sort_unstable();
        for (_, u) in candidates {
            if self.tree.is_leaf(u) {
                continue;
            }
            let before = self.tree_min();
            let kids: Vec<NodeId> = self.tree.children(u).to_vec();
            let mut moved: Vec<NodeId> = Vec::with_capacity(kids.len());
            let mut all_placed = true;
            for c in kids {
                let mut best: Option<(Lifetime, NodeId)> = None;
                for &w in self.net.adj(c) {
                    if w == u || !self.tree.contains(w) || self.tree.hop(w) + 1 != self.tree.hop(c)
                    {
                        continue;
                    }
                    let life_w = self.post_attach_life(w, c);
                    // Adjacency is id-ascending; strict gt keeps the lowest
                    // id among ties.
                    if best.map_or(true, |(bl, _)| life_w > bl) {
                        best = Some((life_w, w));
                    }
                }
                match best {
                    Some((_, w)) => {
                        self.apply_parent_switch(c, w);
                        moved.push(c);
                    }
                    None => {
                        all_placed = false;
                        break;
                    }
                }
            }
            if !(all_placed && self.tree_min() >= before) {
                for &c in moved.iter().rev() {
                    self.apply_parent_switch(c, u);
                }
            }
        }
    }

    /// Parent-switch sweeps in BFS order until a sweep changes nothing or
    /// the pass budget runs out. A switch is accepted only if the minimum
    /// lifetime over the affected nodes strictly increases; among accepted
    /// candidates the largest post-move minimum wins, ties to the lowest id.
    fn adjust(&mut self, p: &HeuristicParams) {
        let sink = self.tree.sink();
        let order = self.tree.bfs_order();
        for _ in 0..p.max_passes() {
            let mut changed = false;
            for &u in &order {
                if u == sink {
                    continue;
                }
                let x = self.tree.parent(u).expect("non-sink participant has a parent");
                let hop_u = self.tree.hop(u);
                let mut best: Option<(Lifetime, NodeId)> = None;
                for &v in self.net.adj(u) {
                    if v == x || !self.tree.contains(v) || self.tree.hop(v) + 1 != hop_u {
                        continue;
                    }
                    let (min_before, min_after) = self.eval_parent_switch(u, v);
                    if min_after > min_before && best.map_or(true, |(ba, _)| min_after > ba) {
                        best = Some((min_after, v));
                    }
                }
                if let Some((_, v)) = best {
                    self.apply_parent_switch(u, v);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
}

fn ensure_valid(net: &Network, tree: &AggregationTree) -> Result<(), HeuristicError> {
    let violations = validate_tree(net, tree);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TreeError::InvalidTree(violations).into())
    }
}

/// Reattaches the children of low-energy internal nodes so those nodes
/// become leaves; see [`TreeState::leafify`] for the exact rule.
pub fn leafify_low_energy(
    net: &Network,
    tree: &AggregationTree,
    em: &EnergyModel,
    p: &HeuristicParams,
) -> Result<AggregationTree, HeuristicError> {
    ensure_valid(net, tree)?;
    let mut st = TreeState::new(net, em, tree.clone());
    st.leafify(p);
    Ok(st.into_tree())
}

/// Applies lifetime-improving parent switches until a fixed point or the
/// pass budget; see [`TreeState::adjust`] for the exact rule.
pub fn local_adjust(
    net: &Network,
    tree: &AggregationTree,
    em: &EnergyModel,
    p: &HeuristicParams,
) -> Result<AggregationTree, HeuristicError> {
    ensure_valid(net, tree)?;
    let mut st = TreeState::new(net, em, tree.clone());
    st.adjust(p);
    Ok(st.into_tree())
}

/// Full pipeline: shortest path tree, leafification, local adjustment.
///
/// The result's lifetime is never below the plain SPT's lifetime on the
/// same inputs: both refinement steps only accept non-worsening changes.
pub fn build_max_lifetime_tree(
    net: &Network,
    em: &EnergyModel,
    p: &HeuristicParams,
    eligible: &BTreeSet<NodeId>,
) -> Result<AggregationTree, HeuristicError> {
    let spt = build_spt(net, eligible)?;
    let mut st = TreeState::new(net, em, spt);
    st.leafify(p);
    st.adjust(p);
    Ok(st.into_tree())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_network, DeploymentConfig, NodeInit};
    use crate::tree::{compute_stats, tree_lifetime};

    fn em_2_2_1() -> EnergyModel {
        EnergyModel::new(2, 2, 1).unwrap()
    }

    /// Square sink(0)-x(1)-v(2)-u(3); edges 0-1, 0-2, 1-3, 2-3.
    /// x is poor (energy 50), u is a heavy source behind it.
    fn square_net(energy_x: u64) -> Network {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 1000, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: energy_x, rho: 1 },
            NodeInit { x: 0.0, y: 1.0, energy: 1000, rho: 0 },
            NodeInit { x: 1.0, y: 1.0, energy: 1000, rho: 4 },
        ];
        Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap()
    }

    fn lifetime_of(net: &Network, tree: &AggregationTree) -> Lifetime {
        let stats = compute_stats(net, tree, &em_2_2_1()).unwrap();
        tree_lifetime(&stats, net.sink_id())
    }

    #[test]
    fn params_validation() {
        assert!(HeuristicParams::new(0.1, 10).is_ok());
        assert!(HeuristicParams::new(-0.1, 10).is_err());
        assert!(HeuristicParams::new(1.5, 10).is_err());
        assert!(HeuristicParams::new(f64::NAN, 10).is_err());
        assert!(HeuristicParams::new(0.1, 0).is_err());
    }

    #[test]
    fn adjust_switches_loaded_source_away_from_poor_parent() {
        let net = square_net(50);
        let em = em_2_2_1();
        let spt = build_spt(&net, &net.all_nodes()).unwrap();
        assert_eq!(spt.parent(NodeId(3)), Some(NodeId(1)));
        assert_eq!(lifetime_of(&net, &spt), Lifetime::Rounds(6));

        let adjusted = local_adjust(&net, &spt, &em, &HeuristicParams::default()).unwrap();
        assert_eq!(adjusted.parent(NodeId(3)), Some(NodeId(2)));
        assert_eq!(lifetime_of(&net, &adjusted), Lifetime::Rounds(25));
        assert!(validate_tree(&net, &adjusted).is_empty());
        // Hop counts survive the switch.
        for u in net.all_nodes() {
            assert_eq!(adjusted.hop(u), spt.hop(u));
        }
    }

    #[test]
    fn adjust_is_idempotent_at_fixed_point() {
        let net = square_net(50);
        let em = em_2_2_1();
        let spt = build_spt(&net, &net.all_nodes()).unwrap();
        let p = HeuristicParams::default();
        let once = local_adjust(&net, &spt, &em, &p).unwrap();
        let twice = local_adjust(&net, &once, &em, &p).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn leafify_moves_child_off_poor_internal_node() {
        // x has energy 1, well under a tenth of the median of (1, 1000, 1000).
        let net = square_net(1);
        let em = em_2_2_1();
        let spt = build_spt(&net, &net.all_nodes()).unwrap();
        assert_eq!(spt.parent(NodeId(3)), Some(NodeId(1)));

        let leafed = leafify_low_energy(&net, &spt, &em, &HeuristicParams::default()).unwrap();
        assert_eq!(leafed.parent(NodeId(3)), Some(NodeId(2)));
        assert!(leafed.is_leaf(NodeId(1)));
        assert!(validate_tree(&net, &leafed).is_empty());
    }

    #[test]
    fn leafify_reverts_when_child_has_no_alternative() {
        // Path sink-a-b: b's only hop-1 neighbor is a.
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 1000, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 1, rho: 1 },
            NodeInit { x: 2.0, y: 0.0, energy: 1000, rho: 1 },
        ];
        let net = Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap();
        let em = em_2_2_1();
        let spt = build_spt(&net, &net.all_nodes()).unwrap();
        let leafed = leafify_low_energy(&net, &spt, &em, &HeuristicParams::default()).unwrap();
        assert_eq!(leafed, spt);
    }

    #[test]
    fn leafify_without_candidates_is_identity() {
        let net = square_net(1000);
        let em = em_2_2_1();
        let spt = build_spt(&net, &net.all_nodes()).unwrap();
        let leafed = leafify_low_energy(&net, &spt, &em, &HeuristicParams::default()).unwrap();
        assert_eq!(leafed, spt);
    }

    #[test]
    fn pipeline_on_unique_tree_is_the_spt() {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: 1 },
            NodeInit { x: 2.0, y: 0.0, energy: 100, rho: 2 },
        ];
        let net = Network::new(1.0, (10.0, 10.0), NodeId(0), &nodes).unwrap();
        let em = em_2_2_1();
        let built =
            build_max_lifetime_tree(&net, &em, &HeuristicParams::default(), &net.all_nodes())
                .unwrap();
        assert_eq!(built, build_spt(&net, &net.all_nodes()).unwrap());
    }

    #[test]
    fn pipeline_beats_spt_on_square() {
        let net = square_net(50);
        let em = em_2_2_1();
        let built =
            build_max_lifetime_tree(&net, &em, &HeuristicParams::default(), &net.all_nodes())
                .unwrap();
        assert_eq!(lifetime_of(&net, &built), Lifetime::Rounds(25));
    }

    #[test]
    fn pipeline_preserves_unbounded_lifetime() {
        let nodes = [
            NodeInit { x: 0.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 0.0, energy: 100, rho: 0 },
            NodeInit { x: 1.0, y: 1.0, energy: 100, rho: 0 },
        ];
        let net = Network::new(1.5, (10.0, 10.0), NodeId(0), &nodes).unwrap();
        let em = em_2_2_1();
        let built =
            build_max_lifetime_tree(&net, &em, &HeuristicParams::default(), &net.all_nodes())
                .unwrap();
        assert_eq!(lifetime_of(&net, &built), Lifetime::Unbounded);
    }

    #[test]
    fn incremental_stats_agree_with_full_recompute() {
        let net = generate_network(&DeploymentConfig {
            n_total: 80,
            n_relays: 20,
            field: (10.0, 10.0),
            comm_range: 2.0,
            energy_init: 500,
            rho_range: (1, 10),
            seed: 17,
        })
        .unwrap();
        let em = em_2_2_1();
        let built =
            build_max_lifetime_tree(&net, &em, &HeuristicParams::default(), &net.all_nodes())
                .unwrap();
        assert!(validate_tree(&net, &built).is_empty());
        // State rebuilt from scratch must agree with the incrementally
        // maintained lifetime.
        let st = TreeState::new(&net, &em, built.clone());
        let stats = compute_stats(&net, &built, &em).unwrap();
        for (u, s) in stats.iter() {
            assert_eq!(st.tot[u.idx()], s.tot);
            assert_eq!(st.delta[u.idx()], s.delta);
            assert_eq!(st.life[u.idx()], s.life);
        }
    }

    #[test]
    fn heuristic_never_loses_to_spt_on_random_nets() {
        let em = em_2_2_1();
        for seed in 0..20 {
            let net = generate_network(&DeploymentConfig {
                n_total: 50,
                n_relays: 12,
                field: (10.0, 10.0),
                comm_range: 2.5,
                energy_init: 1000,
                rho_range: (1, 10),
                seed,
            })
            .unwrap();
            let spt = build_spt(&net, &net.all_nodes()).unwrap();
            let built =
                build_max_lifetime_tree(&net, &em, &HeuristicParams::default(), &net.all_nodes())
                    .unwrap();
            assert!(
                lifetime_of(&net, &built) >= lifetime_of(&net, &spt),
                "heuristic lost to SPT at seed {seed}"
            );
            for u in net.all_nodes() {
                assert_eq!(built.hop(u), spt.hop(u), "hop changed at seed {seed}");
            }
        }
    }
}
