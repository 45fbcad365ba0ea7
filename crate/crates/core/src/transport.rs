//! Exact 1-Wasserstein distance between discrete measures.
//!
//! The ground metric is the max over blocks of the block Euclidean distance,
//! which is plain `|x − y|` on a line. One-dimensional pairs use the sorted
//! quantile coupling; everything else is solved as a transportation problem
//! by successive shortest paths with Dijkstra on reduced costs.

use serde::{Deserialize, Serialize};

use crate::defaults::TRANSPORT_CAP;
use crate::error::{Error, Result};
use crate::geometry::sup_blocks;
use crate::measure::DiscreteMeasure;

/// Residual masses below this are treated as exhausted.
const MASS_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<Flow>,
    pub cost: f64,
}

impl TransportPlan {
    /// Mass leaving each source and entering each target.
    pub fn marginals(&self, sources: usize, targets: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; sources];
        let mut b = vec![0.0; targets];
        for f in &self.flows {
            a[f.source] += f.mass;
            b[f.target] += f.mass;
        }
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub distance: f64,
    pub plan: TransportPlan,
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.ambient() != nu.ambient() || mu.block_dim() != nu.block_dim() {
        return Err(Error::Mismatch);
    }
    Ok(())
}

pub fn ground_distance(mu: &DiscreteMeasure, i: usize, nu: &DiscreteMeasure, j: usize) -> f64 {
    sup_blocks(mu.point(i), nu.point(j), mu.block_dim())
}

/// `W_1(μ, ν)` with the optimal plan; quantile coupling on a line, min-cost
/// flow otherwise (at most [`TRANSPORT_CAP`] atoms per side).
pub fn wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Transport> {
    wasserstein_with_cap(mu, nu, TRANSPORT_CAP)
}

pub fn wasserstein_with_cap(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<Transport> {
    check_pair(mu, nu)?;
    if mu.dim() == 1 {
        quantile_coupling(mu, nu)
    } else {
        min_cost_flow(mu, nu, cap)
    }
}

/// Monotone coupling of two measures on a line.
pub fn quantile_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Transport> {
    check_pair(mu, nu)?;
    if mu.dim() != 1 {
        return Err(Error::invalid("quantile coupling needs a one-dimensional ambient"));
    }
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.point(a)[0].total_cmp(&m.point(b)[0]).then(a.cmp(&b)));
        idx
    };
    let (oa, ob) = (order(mu), order(nu));
    let (mut ia, mut ib) = (0, 0);
    let mut ra = oa.first().map_or(0.0, |&i| mu.weights()[i]);
    let mut rb = ob.first().map_or(0.0, |&j| nu.weights()[j]);
    let mut plan = TransportPlan::default();
    while ia < oa.len() && ib < ob.len() {
        let (i, j) = (oa[ia], ob[ib]);
        let mass = ra.min(rb);
        if mass > 0.0 {
            let c = (mu.point(i)[0] - nu.point(j)[0]).abs();
            plan.cost += mass * c;
            plan.flows.push(Flow {
                source: i,
                target: j,
                mass,
            });
        }
        ra -= mass;
        rb -= mass;
        // advance whichever side is exhausted; on a tie both move
        if ra <= MASS_EPS {
            ia += 1;
            ra = oa.get(ia).map_or(0.0, |&k| mu.weights()[k]);
        }
        if rb <= MASS_EPS {
            ib += 1;
            rb = ob.get(ib).map_or(0.0, |&k| nu.weights()[k]);
        }
    }
    Ok(Transport {
        distance: plan.cost,
        plan,
    })
}

/// Transportation problem solved by successive shortest paths.
///
/// Nodes are the atoms of `μ` (sources) and `ν` (sinks), joined by a
/// virtual source and sink. Potentials keep reduced costs non-negative, so
/// each augmenting path is found by a dense Dijkstra in `O((a+b)²)`.
pub fn min_cost_flow(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<Transport> {
    check_pair(mu, nu)?;
    let (a, b) = (mu.len(), nu.len());
    if a.max(b) > cap {
        return Err(Error::SupportTooLarge { atoms: a.max(b), cap });
    }
    let cost: Vec<f64> = (0..a)
        .flat_map(|i| (0..b).map(move |j| (i, j)))
        .map(|(i, j)| ground_distance(mu, i, nu, j))
        .collect();
    let mut supply = mu.weights().to_vec();
    let mut demand = nu.weights().to_vec();
    let mut flow = vec![0.0; a * b];
    // node v < a is source v, node a + j is sink j
    let nodes = a + b;
    let mut pot = vec![0.0; nodes];
    let mut pot_t = 0.0;
    let mut dist = vec![f64::INFINITY; nodes];
    let mut pred = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    loop {
        if !supply.iter().any(|&s| s > MASS_EPS) || !demand.iter().any(|&d| d > MASS_EPS) {
            break;
        }
        dist.fill(f64::INFINITY);
        pred.fill(usize::MAX);
        done.fill(false);
        for i in 0..a {
            if supply[i] > MASS_EPS {
                dist[i] = -pot[i];
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < a {
                let row = &cost[u * b..(u + 1) * b];
                for j in 0..b {
                    let v = a + j;
                    let nd = best + row[j] + pot[u] - pot[v];
                    if !done[v] && nd < dist[v] {
                        dist[v] = nd;
                        pred[v] = u;
                    }
                }
            } else {
                let j = u - a;
                for i in 0..a {
                    if !done[i] && flow[i * b + j] > MASS_EPS {
                        let nd = best - cost[i * b + j] + pot[u] - pot[i];
                        if nd < dist[i] {
                            dist[i] = nd;
                            pred[i] = u;
                        }
                    }
                }
            }
        }
        // cheapest sink with demand left closes the path to the virtual sink
        let mut end = usize::MAX;
        let mut dt = f64::INFINITY;
        for j in 0..b {
            if demand[j] > MASS_EPS {
                let v = a + j;
                let d = dist[v] + pot[v] - pot_t;
                if d < dt {
                    dt = d;
                    end = v;
                }
            }
        }
        if end == usize::MAX {
            break;
        }
        for v in 0..nodes {
            pot[v] += dist[v].min(dt);
        }
        pot_t += dt;

        let mut push = demand[end - a];
        let mut v = end;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u >= a {
                // backward edge: sink u cancels flow from source v
                push = push.min(flow[v * b + (u - a)]);
            }
            v = u;
        }
        push = push.min(supply[v]);
        supply[v] -= push;
        demand[end - a] -= push;
        let mut v = end;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u < a {
                flow[u * b + (v - a)] += push;
            } else {
                let f = &mut flow[v * b + (u - a)];
                *f = (*f - push).max(0.0);
            }
            v = u;
        }
    }

    let mut plan = TransportPlan::default();
    for i in 0..a {
        for j in 0..b {
            let m = flow[i * b + j];
            if m > MASS_EPS {
                plan.cost += m * cost[i * b + j];
                plan.flows.push(Flow {
                    source: i,
                    target: j,
                    mass: m,
                });
            }
        }
    }
    Ok(Transport {
        distance: plan.cost,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bounds;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(Bounds::unit(1), 1, points.to_vec(), weights.to_vec()).unwrap()
    }

    fn plane(points: &[[f64; 2]], weights: &[f64]) -> DiscreteMeasure {
        let flat = points.iter().flatten().copied().collect();
        DiscreteMeasure::new(Bounds::unit(2), 1, flat, weights.to_vec()).unwrap()
    }

    #[test]
    fn diracs_and_self() {
        let d0 = line(&[0.0], &[1.0]);
        let d1 = line(&[1.0], &[1.0]);
        assert_eq!(wasserstein(&d0, &d1).unwrap().distance, 1.0);
        let mu = line(&[0.1, 0.4, 0.9], &[0.2, 0.3, 0.5]);
        assert_eq!(wasserstein(&mu, &mu).unwrap().distance, 0.0);
    }

    #[test]
    fn shifted_pair() {
        let mu = line(&[0.0, 0.5], &[0.5, 0.5]);
        let nu = line(&[0.5, 1.0], &[0.5, 0.5]);
        assert!((wasserstein(&mu, &nu).unwrap().distance - 0.5).abs() < 1e-15);
        let flow = min_cost_flow(&mu, &nu, 8).unwrap();
        assert!((flow.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn flow_on_the_plane() {
        // pairing (0,0)->(0,1) and (1,0)->(1,1) costs 1 under the block metric
        let mu = plane(&[[0.0, 0.0], [1.0, 0.0]], &[0.5, 0.5]);
        let nu = plane(&[[1.0, 1.0], [0.0, 1.0]], &[0.5, 0.5]);
        let t = wasserstein(&mu, &nu).unwrap();
        assert!((t.distance - 1.0).abs() < 1e-12);
        let (ra, rb) = t.plan.marginals(2, 2);
        assert!((ra[0] - 0.5).abs() < 1e-12 && (rb[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uses_backward_edges() {
        // greedy nearest matching is suboptimal here
        let mu = plane(&[[0.2, 0.0], [0.6, 0.0]], &[0.5, 0.5]);
        let nu = plane(&[[0.5, 0.0], [0.0, 0.0]], &[0.5, 0.5]);
        let t = min_cost_flow(&mu, &nu, 8).unwrap();
        assert!((t.distance - 0.5 * (0.2 + 0.1)).abs() < 1e-12, "{}", t.distance);
    }

    #[test]
    fn support_cap() {
        let n = 5;
        let pts: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 / n as f64, 0.0]).collect();
        let mu = plane(&pts, &vec![1.0 / n as f64; n]);
        assert_eq!(
            wasserstein_with_cap(&mu, &mu, 4),
            Err(Error::SupportTooLarge { atoms: 5, cap: 4 })
        );
    }

    #[test]
    fn ambient_mismatch() {
        let a = line(&[0.0], &[1.0]);
        let b = plane(&[[0.0, 0.0]], &[1.0]);
        assert_eq!(wasserstein(&a, &b), Err(Error::Mismatch));
    }
}
