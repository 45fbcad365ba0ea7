//! Finitely supported probability measures and the Markov operators that
//! act on them.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults::{ATOM_BUDGET, SUM_TOL};
use crate::error::{Error, Result};
use crate::extension::ExtendedIfs;
use crate::geometry::Bounds;
use crate::system::GifsSystem;
use crate::transport::wasserstein;
use crate::weights::WeightSystem;

/// Tuples handled per parallel work item.
const CHUNK: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    ambient: Bounds,
    block_dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Atoms are flat `points` (one per weight). Zero-weight atoms are dropped.
    pub fn new(ambient: Bounds, block_dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let dim = ambient.dim();
        if block_dim == 0 || dim % block_dim != 0 {
            return Err(Error::invalid(format!("block dimension {block_dim} does not divide {dim}")));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::invalid(format!(
                "{} coordinates for {} atoms of dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("atom weight {w} is not a finite non-negative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::SumNotOne { sum });
        }
        if let Some(p) = points.chunks(dim).find(|p| !ambient.contains(p)) {
            return Err(Error::PointOutsideDomain { point: p.to_vec() });
        }
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let (points, weights) = if keep.len() == weights.len() {
            (points, weights)
        } else {
            (
                keep.iter().flat_map(|&i| points[i * dim..(i + 1) * dim].iter().copied()).collect(),
                keep.iter().map(|&i| weights[i]).collect(),
            )
        };
        Ok(DiscreteMeasure {
            ambient,
            block_dim,
            points,
            weights,
        })
    }

    pub fn dirac(ambient: Bounds, block_dim: usize, point: Vec<f64>) -> Result<Self> {
        DiscreteMeasure::new(ambient, block_dim, point, vec![1.0])
    }

    /// Equal weights on the given points.
    pub fn uniform(ambient: Bounds, block_dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = points.len() / ambient.dim().max(1);
        DiscreteMeasure::new(ambient, block_dim, points, vec![1.0 / n as f64; n])
    }

    /// Product of `m` measures on `X`, as a measure on `X^m` (first factor
    /// in the oldest block).
    pub fn product(factors: &[DiscreteMeasure]) -> Result<Self> {
        let first = factors.first().ok_or(Error::EmptySet)?;
        if factors.iter().any(|f| f.ambient != first.ambient || f.dim() != f.block_dim) {
            return Err(Error::Mismatch);
        }
        let d = first.dim();
        let total: usize = factors.iter().map(DiscreteMeasure::len).product();
        let mut points = Vec::with_capacity(total * d * factors.len());
        let mut weights = Vec::with_capacity(total);
        for t in 0..total {
            let mut rest = t;
            let mut w = 1.0;
            for f in factors {
                let i = rest % f.len();
                rest /= f.len();
                points.extend_from_slice(f.point(i));
                w *= f.weights[i];
            }
            weights.push(w);
        }
        Ok(DiscreteMeasure {
            ambient: first.ambient.power(factors.len()),
            block_dim: d,
            points,
            weights,
        })
    }

    pub fn ambient(&self) -> &Bounds {
        &self.ambient
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * f(self.point(i)))
            .sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.integrate(|p| p[k])).collect()
    }

    /// `E[x_k]` under keys `"x<k>"` and `E[x_k x_l]` (k ≤ l) under `"x<k>*x<l>"`.
    pub fn moments(&self) -> BTreeMap<String, f64> {
        let dim = self.dim();
        let mut out = BTreeMap::new();
        for k in 0..dim {
            out.insert(format!("x{k}"), self.integrate(|p| p[k]));
            for l in k..dim {
                out.insert(format!("x{k}*x{l}"), self.integrate(|p| p[k] * p[l]));
            }
        }
        out
    }

    /// Pushforward under projection onto block `block`.
    pub fn marginal(&self, block: usize) -> Result<DiscreteMeasure> {
        let d = self.block_dim;
        let blocks = self.dim() / d;
        if block >= blocks {
            return Err(Error::IndexOutOfRange { index: block, len: blocks });
        }
        let points = (0..self.len())
            .flat_map(|i| self.point(i)[block * d..(block + 1) * d].iter().copied())
            .collect();
        Ok(DiscreteMeasure {
            ambient: self.ambient.slice(block * d, d),
            block_dim: d,
            points,
            weights: self.weights.clone(),
        })
    }

    pub fn prune(&self, rule: PruneRule) -> Result<DiscreteMeasure> {
        match rule {
            PruneRule::Off => Ok(self.clone()),
            PruneRule::Grid { eps } => self.collapse(eps),
        }
    }

    /// Merges atoms sharing a grid cell into their mass-weighted centroid;
    /// output is ordered by cell index (axis 0 fastest).
    fn collapse(&self, eps: f64) -> Result<DiscreteMeasure> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!("prune resolution must be positive, got {eps}")));
        }
        let dim = self.dim();
        let shape: Vec<u64> = (0..dim)
            .map(|k| ((self.ambient.side(k) / eps) - 1e-9).ceil().max(1.0) as u64)
            .collect();
        shape
            .iter()
            .try_fold(1u64, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::invalid(format!("prune grid {shape:?} overflows")))?;
        let key = |p: &[f64]| {
            let mut k = 0u64;
            for a in (0..dim).rev() {
                let c = ((p[a] - self.ambient.lo()[a]) / eps).floor().max(0.0) as u64;
                k = k * shape[a] + c.min(shape[a] - 1);
            }
            k
        };
        let mut order: Vec<(u64, usize)> = (0..self.len()).map(|i| (key(self.point(i)), i)).collect();
        order.sort_unstable();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut acc = vec![0.0; dim];
        let mut g = 0;
        while g < order.len() {
            let cell = order[g].0;
            let mut mass = 0.0;
            acc.fill(0.0);
            while g < order.len() && order[g].0 == cell {
                let i = order[g].1;
                let w = self.weights[i];
                mass += w;
                for (a, x) in acc.iter_mut().zip(self.point(i)) {
                    *a += w * x;
                }
                g += 1;
            }
            points.extend(acc.iter().map(|a| a / mass));
            weights.push(mass);
        }
        Ok(DiscreteMeasure {
            ambient: self.ambient.clone(),
            block_dim: self.block_dim,
            points,
            weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PruneRule {
    Off,
    /// Collapse atoms sharing a cell of side `eps`.
    Grid { eps: f64 },
}

fn check_weights(sys: &GifsSystem, ws: &WeightSystem) -> Result<()> {
    if ws.len() != sys.len() || ws.degree() != sys.degree() {
        return Err(Error::Mismatch);
    }
    Ok(())
}

/// `Σ_j p_j(w) f(φ_j(w))`.
pub fn transfer_apply(
    sys: &GifsSystem,
    ws: &WeightSystem,
    f: impl Fn(&[f64]) -> f64,
    window: &[f64],
) -> Result<f64> {
    check_weights(sys, ws)?;
    sys.check_window(window)?;
    let mut p = vec![0.0; sys.len()];
    ws.eval_all(window, &mut p)?;
    let mut img = vec![0.0; sys.dim()];
    let mut sum = 0.0;
    for (map, pj) in sys.maps().iter().zip(&p) {
        map.apply(window, &mut img);
        sum += pj * f(&img);
    }
    Ok(sum)
}

/// `Σ_i p_i(x) g(φ̂_i(x))` for an observable `g` on `X^m`.
pub fn extended_transfer_apply(
    ext: &ExtendedIfs,
    ws: &WeightSystem,
    g: impl Fn(&[f64]) -> f64,
    x: &[f64],
) -> Result<f64> {
    check_weights(ext.base(), ws)?;
    ext.base().check_window(x)?;
    let mut p = vec![0.0; ext.len()];
    ws.eval_all(x, &mut p)?;
    let mut img = vec![0.0; x.len()];
    let mut sum = 0.0;
    for (i, pi) in p.iter().enumerate() {
        ext.apply(i, x, &mut img);
        sum += pi * g(&img);
    }
    Ok(sum)
}

/// Pushes the product of `mus` through every map with place-dependent
/// weights: `∫ f dL_S(μ_1,…,μ_m) = ∫ B_S f d(μ_1×⋯×μ_m)`.
pub fn markov_step(sys: &GifsSystem, ws: &WeightSystem, mus: &[DiscreteMeasure]) -> Result<DiscreteMeasure> {
    markov_step_with(sys, ws, mus, ATOM_BUDGET)
}

pub fn markov_step_with(
    sys: &GifsSystem,
    ws: &WeightSystem,
    mus: &[DiscreteMeasure],
    budget: usize,
) -> Result<DiscreteMeasure> {
    check_weights(sys, ws)?;
    let (m, d, n) = (sys.degree(), sys.dim(), sys.len());
    if mus.len() != m {
        return Err(Error::invalid(format!("{} measures given for degree {m}", mus.len())));
    }
    if mus.iter().any(|mu| mu.ambient() != sys.domain() || mu.block_dim() != d) {
        return Err(Error::Mismatch);
    }
    let tuples: u128 = mus.iter().map(|mu| mu.len() as u128).product();
    let atoms = tuples * n as u128;
    if atoms > budget as u128 {
        return Err(Error::AtomBudgetExceeded { atoms, cap: budget });
    }
    let tuples = tuples as usize;
    // the product of m masses compounds rounding from step to step, so each
    // factor is taken at unit mass
    let totals: Vec<f64> = mus.iter().map(|mu| mu.mass()).collect();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..tuples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(tuples);
            let mut pts = Vec::with_capacity(range.len() * n * d);
            let mut wts = Vec::with_capacity(range.len() * n);
            let mut window = vec![0.0; m * d];
            let mut p = vec![0.0; n];
            let mut img = vec![0.0; d];
            for t in range {
                let mut rest = t;
                let mut mass = 1.0;
                for (k, mu) in mus.iter().enumerate() {
                    let i = rest % mu.len();
                    rest /= mu.len();
                    window[k * d..(k + 1) * d].copy_from_slice(mu.point(i));
                    mass *= mu.weights[i] / totals[k];
                }
                ws.eval_all(&window, &mut p)?;
                for (map, pj) in sys.maps().iter().zip(&p) {
                    map.apply(&window, &mut img);
                    if !sys.domain().contains(&img) {
                        return Err(Error::PointOutsideDomain { point: img });
                    }
                    pts.extend_from_slice(&img);
                    wts.push(pj * mass);
                }
            }
            Ok((pts, wts))
        })
        .collect::<Result<_>>()?;
    Ok(concat(sys.domain().clone(), d, parts))
}

/// `∫ g dL_Ŝ(α) = ∫ B_Ŝ g dα` on `X^m`.
pub fn extended_markov_step(ext: &ExtendedIfs, ws: &WeightSystem, alpha: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    extended_markov_step_with(ext, ws, alpha, ATOM_BUDGET)
}

pub fn extended_markov_step_with(
    ext: &ExtendedIfs,
    ws: &WeightSystem,
    alpha: &DiscreteMeasure,
    budget: usize,
) -> Result<DiscreteMeasure> {
    check_weights(ext.base(), ws)?;
    if alpha.ambient() != ext.domain() || alpha.block_dim() != ext.base().dim() {
        return Err(Error::Mismatch);
    }
    let n = ext.len();
    let atoms = alpha.len() as u128 * n as u128;
    if atoms > budget as u128 {
        return Err(Error::AtomBudgetExceeded { atoms, cap: budget });
    }
    let dim = ext.state_dim();
    let domain = ext.domain();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..alpha.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(alpha.len());
            let mut pts = Vec::with_capacity(range.len() * n * dim);
            let mut wts = Vec::with_capacity(range.len() * n);
            let mut p = vec![0.0; n];
            let mut img = vec![0.0; dim];
            for t in range {
                let x = alpha.point(t);
                ws.eval_all(x, &mut p)?;
                for (i, pi) in p.iter().enumerate() {
                    ext.apply(i, x, &mut img);
                    if !domain.contains(&img) {
                        return Err(Error::PointOutsideDomain { point: img });
                    }
                    pts.extend_from_slice(&img);
                    wts.push(pi * alpha.weights[t]);
                }
            }
            Ok((pts, wts))
        })
        .collect::<Result<_>>()?;
    Ok(concat(domain.clone(), ext.base().dim(), parts))
}

fn concat(ambient: Bounds, block_dim: usize, parts: Vec<(Vec<f64>, Vec<f64>)>) -> DiscreteMeasure {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (p, w) in parts {
        points.extend(p);
        weights.extend(w);
    }
    DiscreteMeasure {
        ambient,
        block_dim,
        points,
        weights,
    }
}

#[derive(Debug, Clone)]
pub struct MeasureRun {
    pub measure: DiscreteMeasure,
    /// Wasserstein distance between each iterate and its predecessor.
    pub gaps: Vec<f64>,
}

impl MeasureRun {
    pub fn steps(&self) -> usize {
        self.gaps.len()
    }
}

/// `μ_{j+m} = L_S(μ_j, …, μ_{j+m−1})` from `m` seeds (oldest first), pruning
/// each iterate, until the successive Wasserstein gap has stayed at most
/// `tol` for `m` consecutive steps.
pub fn iterate_measure(
    sys: &GifsSystem,
    ws: &WeightSystem,
    seeds: &[DiscreteMeasure],
    tol: f64,
    max_iter: usize,
    prune: PruneRule,
) -> Result<MeasureRun> {
    if seeds.len() != sys.degree() {
        return Err(Error::invalid(format!(
            "{} seed measures given for degree {}",
            seeds.len(),
            sys.degree()
        )));
    }
    check_tol(tol)?;
    let mut window: VecDeque<DiscreteMeasure> = seeds.iter().cloned().collect();
    let mut gaps = Vec::new();
    let mut settled = 0;
    for _ in 0..max_iter {
        let args: Vec<DiscreteMeasure> = window.iter().cloned().collect();
        let next = markov_step(sys, ws, &args)?.prune(prune)?;
        let gap = wasserstein(&next, window.back().expect("degree ≥ 2"))?.distance;
        gaps.push(gap);
        window.pop_front();
        window.push_back(next);
        settled = if gap <= tol { settled + 1 } else { 0 };
        if settled == sys.degree() {
            return Ok(MeasureRun {
                measure: window.pop_back().expect("non-empty"),
                gaps,
            });
        }
    }
    Err(no_convergence(max_iter, &gaps, tol))
}

/// `α_{j+1} = L_Ŝ(α_j)` with pruning until the successive gap is at most `tol`.
pub fn iterate_extended_measure(
    ext: &ExtendedIfs,
    ws: &WeightSystem,
    seed: &DiscreteMeasure,
    tol: f64,
    max_iter: usize,
    prune: PruneRule,
) -> Result<MeasureRun> {
    check_tol(tol)?;
    let mut cur = seed.clone();
    let mut gaps = Vec::new();
    for _ in 0..max_iter {
        let next = extended_markov_step(ext, ws, &cur)?.prune(prune)?;
        let gap = wasserstein(&next, &cur)?.distance;
        gaps.push(gap);
        cur = next;
        if gap <= tol {
            return Ok(MeasureRun { measure: cur, gaps });
        }
    }
    Err(no_convergence(max_iter, &gaps, tol))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn no_convergence(iterations: usize, gaps: &[f64], tol: f64) -> Error {
    Error::NoConvergence {
        iterations,
        gap: gaps.last().copied().unwrap_or(f64::INFINITY),
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::extension::build_extension;

    fn line(points: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(Bounds::unit(1), 1, points.to_vec()).unwrap()
    }

    #[test]
    fn construction_checks() {
        let b = Bounds::unit(1);
        assert!(matches!(
            DiscreteMeasure::new(b.clone(), 1, vec![0.1, 0.2], vec![0.5, 0.4]),
            Err(Error::SumNotOne { .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(b.clone(), 1, vec![1.5], vec![1.0]),
            Err(Error::PointOutsideDomain { .. })
        ));
        assert!(DiscreteMeasure::new(b.clone(), 1, vec![0.1], vec![-1.0]).is_err());
        let mu = DiscreteMeasure::new(b, 1, vec![0.1, 0.2], vec![1.0, 0.0]).unwrap();
        assert_eq!(mu.len(), 1);
    }

    #[test]
    fn transfer_of_identity_on_doubling() {
        let (sys, ws) = examples::doubling();
        for (x, y) in [(0.0, 0.3), (0.7, 0.1), (1.0, 1.0)] {
            let v = transfer_apply(&sys, &ws, |p| p[0], &[x, y]).unwrap();
            assert!((v - (x / 2.0 + 0.25)).abs() < 1e-15);
            assert!((transfer_apply(&sys, &ws, |_| 1.0, &[x, y]).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn extended_transfer_of_last_block() {
        let (sys, ws) = examples::fde();
        let ext = build_extension(&sys).unwrap();
        let f = |p: &[f64]| p[0] * p[0] - p[0];
        let w = [0.2, 0.9];
        let a = extended_transfer_apply(&ext, &ws, |p| f(&p[1..]), &w).unwrap();
        let b = transfer_apply(&sys, &ws, f, &w).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn dirac_product_step() {
        let (sys, ws) = examples::fde();
        let mus = [line(&[0.2]), line(&[0.6])];
        let out = markov_step(&sys, &ws, &mus).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.point(0)[0] - 0.2).abs() < 1e-15);
        assert!((out.point(1)[0] - 0.7).abs() < 1e-15);
        assert_eq!(out.weights(), &[1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn doubling_first_moment_enumerated() {
        let (sys, ws) = examples::doubling();
        let mu = line(&[0.0, 0.5, 1.0]);
        let out = markov_step(&sys, &ws, &[mu.clone(), mu]).unwrap();
        assert_eq!(out.len(), 18);
        let mut brute = 0.0;
        for x in [0.0, 0.5, 1.0] {
            for _y in [0.0, 0.5, 1.0] {
                for i in [0.0, 1.0] {
                    brute += (x / 2.0 + i / 2.0) / 18.0;
                }
            }
        }
        assert!((out.mean()[0] - brute).abs() < 1e-15);
        assert!((brute - 0.5).abs() < 1e-15);
        assert!((out.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extended_step_of_dirac() {
        let (sys, ws) = examples::fde();
        let ext = build_extension(&sys).unwrap();
        let a = DiscreteMeasure::dirac(ext.domain().clone(), 1, vec![0.2, 0.6]).unwrap();
        let out = extended_markov_step(&ext, &ws, &a).unwrap();
        let want = [0.6, 0.2, 0.6, 0.7];
        assert!(out.points().iter().zip(want).all(|(x, y)| (x - y).abs() < 1e-15));
        assert_eq!(out.weights(), &[1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn budget_is_enforced() {
        let (sys, ws) = examples::doubling();
        let mu = line(&[0.0, 0.5, 1.0]);
        assert_eq!(
            markov_step_with(&sys, &ws, &[mu.clone(), mu], 17).unwrap_err(),
            Error::AtomBudgetExceeded { atoms: 18, cap: 17 }
        );
    }

    #[test]
    fn marginals_and_product() {
        let b = Bounds::unit(1);
        let prod = DiscreteMeasure::product(&[
            DiscreteMeasure::dirac(b.clone(), 1, vec![0.1]).unwrap(),
            DiscreteMeasure::dirac(b.clone(), 1, vec![0.8]).unwrap(),
        ])
        .unwrap();
        assert_eq!(prod.marginal(0).unwrap().points(), &[0.1]);
        assert_eq!(prod.marginal(1).unwrap().points(), &[0.8]);
        assert!(prod.marginal(2).is_err());
        let anti = DiscreteMeasure::uniform(Bounds::unit(2), 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (mx, my) = (anti.marginal(0).unwrap(), anti.marginal(1).unwrap());
        assert_eq!(mx.mean(), my.mean());
        assert_eq!(mx.len(), 2);
    }

    #[test]
    fn prune_collapses_by_cell() {
        let mu = DiscreteMeasure::new(
            Bounds::unit(1),
            1,
            vec![0.6, 0.1, 0.15, 0.9],
            vec![0.25, 0.25, 0.25, 0.25],
        )
        .unwrap();
        let p = mu.prune(PruneRule::Grid { eps: 0.25 }).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.25, 0.25]);
        assert!((p.point(0)[0] - 0.125).abs() < 1e-15);
        assert_eq!(p.point(1)[0], 0.6);
        assert_eq!(mu.prune(PruneRule::Off).unwrap(), mu);
    }

    #[test]
    fn constant_map_fixed_point_is_dirac() {
        let (sys, ws) = examples::constant(0.3);
        let seeds = [line(&[0.0, 1.0]), line(&[0.5])];
        let run = iterate_measure(&sys, &ws, &seeds, 1e-9, 20, PruneRule::Off).unwrap();
        assert!(run.measure.points().iter().all(|&x| x == 0.3));
        let pruned = run.measure.prune(PruneRule::Grid { eps: 1.0 / 512.0 }).unwrap();
        assert_eq!(pruned.points(), &[0.3]);
        assert_eq!(pruned.weights(), &[1.0]);
    }
}
