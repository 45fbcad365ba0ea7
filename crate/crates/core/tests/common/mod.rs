//! Independent reference solutions shared by the integration tests.

#![allow(dead_code)]

use gifs_core::{Bounds, DiscreteMeasure};
use rand::Rng;

/// Brute-force optimal transport: every basic feasible coupling of a
/// balanced transportation problem is supported on a spanning tree of the
/// complete bipartite graph, and the flows on a tree are forced. This
/// enumerates all spanning trees (sink 0 is the root, every other node
/// picks a parent on the other side) and returns the cheapest feasible one.
pub fn brute_force_transport(supply: &[f64], demand: &[f64], cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    let (a, b) = (supply.len(), demand.len());
    let n = a + b;
    // node i < a is source i, node a + j is sink j; root is node a
    let mut parent = vec![usize::MAX; n];
    let mut best = f64::INFINITY;
    let order: Vec<usize> = (0..n).filter(|&v| v != a).collect();
    let net: Vec<f64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
    let table: Vec<f64> = (0..a).flat_map(|i| (0..b).map(move |j| (i, j))).map(|(i, j)| cost(i, j)).collect();

    fn creates_cycle(parent: &[usize], v: usize, p: usize) -> bool {
        let mut u = p;
        while u != usize::MAX {
            if u == v {
                return true;
            }
            u = parent[u];
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        order: &[usize],
        parent: &mut [usize],
        sub: &mut [f64],
        a: usize,
        b: usize,
        net: &[f64],
        table: &[f64],
        best: &mut f64,
    ) {
        if k == order.len() {
            if let Some(c) = tree_cost(parent, sub, a, b, net, table) {
                *best = best.min(c);
            }
            return;
        }
        let v = order[k];
        let candidates = if v < a { a..a + b } else { 0..a };
        for p in candidates {
            if creates_cycle(parent, v, p) {
                continue;
            }
            parent[v] = p;
            rec(k + 1, order, parent, sub, a, b, net, table, best);
            parent[v] = usize::MAX;
        }
    }

    let mut sub = vec![0.0; n];
    rec(0, &order, &mut parent, &mut sub, a, b, &net, &table, &mut best);
    best
}

/// Cost of the forced flow on a spanning tree, or `None` if some flow
/// would be negative. `sub` is scratch space for subtree sums.
fn tree_cost(
    parent: &[usize],
    sub: &mut [f64],
    a: usize,
    b: usize,
    net: &[f64],
    table: &[f64],
) -> Option<f64> {
    sub.fill(0.0);
    for (v, &x) in net.iter().enumerate() {
        let mut u = v;
        while u != usize::MAX {
            sub[u] += x;
            u = parent[u];
        }
    }
    let mut total = 0.0;
    for (v, &p) in parent.iter().enumerate() {
        if p == usize::MAX {
            continue;
        }
        // mass sent from the source end of the edge to the sink end
        let (flow, i, j) = if v < a { (sub[v], v, p - a) } else { (-sub[v], p, v - a) };
        if flow < -1e-12 {
            return None;
        }
        total += flow.max(0.0) * table[i * b + j];
    }
    Some(total)
}

/// `max_blocks |x − y|₂`, written out independently of the library.
pub fn block_sup(x: &[f64], y: &[f64], block: usize) -> f64 {
    x.chunks(block)
        .zip(y.chunks(block))
        .map(|(p, q)| p.iter().zip(q).map(|(s, t)| (s - t) * (s - t)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

pub fn brute_force_w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let k = mu.block_dim();
    brute_force_transport(mu.weights(), nu.weights(), &|i, j| block_sup(mu.point(i), nu.point(j), k))
}

/// Random probability vector with entries bounded away from zero.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

pub fn random_measure<R: Rng>(rng: &mut R, dim: usize, block_dim: usize, atoms: usize) -> DiscreteMeasure {
    let points: Vec<f64> = (0..dim * atoms).map(|_| rng.gen::<f64>()).collect();
    DiscreteMeasure::new(Bounds::unit(dim), block_dim, points, random_weights(rng, atoms)).unwrap()
}
