//! Shared helpers for integration tests: independent re-implementations
//! (naive replay, matrix-tree counting, rank correlation) used to
//! cross-check the library, plus small random instance generators.
//!
//! These deliberately avoid the library's own computation paths wherever
//! they serve as oracles.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use aggsim::{AggregationTree, EnergyModel, Network, NodeId, NodeInit, Schedule};

/// Random connected unit-disk network: node 0 is the sink at the center,
/// others are placed within range of an already-placed node so the graph
/// is connected by construction. Energies are uniform in `[1, max_energy]`;
/// each non-sink node is a relay with probability ~0.3, otherwise a source
/// with rho in `[1, 10]`.
pub fn random_connected_net(
    rng: &mut ChaCha8Rng,
    n_min: usize,
    n_max: usize,
    max_energy: u64,
    comm_range: f64,
) -> Network {
    let n = rng.random_range(n_min..=n_max);
    let field = 10.0;
    let mut nodes: Vec<NodeInit> = Vec::with_capacity(n);
    nodes.push(NodeInit {
        x: field / 2.0,
        y: field / 2.0,
        energy: rng.random_range(1..=max_energy),
        rho: 0,
    });
    for _ in 1..n {
        let anchor = nodes[rng.random_range(0..nodes.len())];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = rng.random_range(0.0..comm_range * 0.9);
        let x = (anchor.x + dist * angle.cos()).clamp(0.0, field);
        let y = (anchor.y + dist * angle.sin()).clamp(0.0, field);
        let rho = if rng.random_bool(0.3) {
            0
        } else {
            rng.random_range(1..=10)
        };
        nodes.push(NodeInit {
            x,
            y,
            energy: rng.random_range(1..=max_energy),
            rho,
        });
    }
    let net = Network::new(comm_range, (field, field), NodeId(0), &nodes)
        .expect("constructive placement is valid");
    assert!(net.is_connected(&net.all_nodes()).unwrap());
    net
}

/// Per-round drain of every node, from scratch: repeated full subtree
/// walks instead of the library's single bottom-up pass.
pub fn naive_drains(net: &Network, tree: &AggregationTree, em: &EnergyModel) -> Vec<u64> {
    fn subtree_raw(net: &Network, tree: &AggregationTree, u: NodeId) -> u64 {
        let mut sum = net.rho(u);
        for &c in tree.children(u) {
            sum += subtree_raw(net, tree, c);
        }
        sum
    }
    let packets = |u: NodeId| subtree_raw(net, tree, u).div_ceil(em.alpha());
    let mut drains = vec![0u64; net.len()];
    for u in tree.participants() {
        if u == tree.sink() {
            continue;
        }
        let received: u64 = tree.children(u).iter().map(|&c| packets(c)).sum();
        drains[u.idx()] = em.e_rx() * received + em.e_tx() * packets(u);
    }
    drains
}

/// Replays a schedule one round at a time with independent arithmetic.
/// Returns final per-node energies and the replayed round total; panics if
/// any node would go negative mid-round.
pub fn naive_replay(net: &Network, schedule: &Schedule, em: &EnergyModel) -> (Vec<u64>, u64) {
    let mut energy: Vec<u64> = net.nodes().iter().map(|n| n.energy).collect();
    let mut rounds = 0u64;
    for entry in &schedule.entries {
        let drains = naive_drains(net, &entry.tree, em);
        for _ in 0..entry.duration {
            for u in entry.tree.participants() {
                let d = drains[u.idx()];
                if d > 0 {
                    assert!(
                        energy[u.idx()] >= d,
                        "node {u} would go negative during replay"
                    );
                    energy[u.idx()] -= d;
                }
            }
            rounds += 1;
        }
    }
    (energy, rounds)
}

/// Spanning tree count by the matrix-tree theorem: determinant of the
/// Laplacian minor, computed exactly with fraction-free elimination.
pub fn kirchhoff_count(net: &Network) -> i128 {
    let n = net.len();
    if n == 1 {
        return 1;
    }
    let dim = n - 1;
    // Laplacian with row/column 0 deleted.
    let mut m = vec![vec![0i128; dim]; dim];
    for u in net.all_nodes() {
        for &v in net.neighbors(u).unwrap() {
            if u < v {
                let (i, j) = (u.idx(), v.idx());
                if i > 0 {
                    m[i - 1][i - 1] += 1;
                }
                if j > 0 {
                    m[j - 1][j - 1] += 1;
                }
                if i > 0 && j > 0 {
                    m[i - 1][j - 1] -= 1;
                    m[j - 1][i - 1] -= 1;
                }
            }
        }
    }
    // Bareiss: every division below is exact.
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..dim {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..dim).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in (k + 1)..dim {
            for j in (k + 1)..dim {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[dim - 1][dim - 1]
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // 1-based ranks, averaged across the tie group.
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn spearman_of_monotone_sequences() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let down = [10.0, 8.0, 5.0, 4.0, 1.0];
        assert!((spearman(&x, &down) + 1.0).abs() < 1e-12);
        let up = [2.0, 3.0, 9.0, 11.0, 20.0];
        assert!((spearman(&x, &up) - 1.0).abs() < 1e-12);
    }
}
