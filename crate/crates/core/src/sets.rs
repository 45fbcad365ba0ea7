//! Hutchinson operators on grid sets and their fixed-point iteration.
//!
//! Each step evaluates the maps at every tuple of occupied cell centers. A
//! window inside a cell tuple is within `eps·√d/2` of the centers in every
//! block, so `φ_j` of it lies within `ρ_j = Lip_j·eps·√d/2` of the image of
//! the centers; every cell meeting that box is marked, and the result
//! encloses the exact image. Under the extension the shifted blocks are
//! exact cell copies and only the new block is widened.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defaults::{CELL_BUDGET, TUPLE_BUDGET};
use crate::error::{Error, Result};
use crate::extension::ExtendedIfs;
use crate::grid::{hausdorff_distance, BitSet, GridSet};
use crate::system::GifsSystem;

/// Tuples evaluated per parallel work item.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetBudget {
    /// Cap on `n · Π |K_i|` map evaluations per step.
    pub max_tuples: u64,
    /// Cap on occupied cells in any iterate.
    pub max_cells: usize,
}

impl Default for SetBudget {
    fn default() -> Self {
        SetBudget {
            max_tuples: TUPLE_BUDGET,
            max_cells: CELL_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub gap: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub iterations: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct AttractorRun {
    pub attractor: GridSet,
    pub trace: ConvergenceTrace,
}

/// Image enclosure radius of each map at resolution `eps`.
pub fn enclosure_radii(sys: &GifsSystem, eps: f64) -> Vec<f64> {
    let half_diag = eps * (sys.dim() as f64).sqrt() / 2.0;
    sys.maps().iter().map(|m| m.lip_sum() * half_diag).collect()
}

fn finish(grid: &GridSet, images: BitSet, budget: &SetBudget) -> Result<GridSet> {
    let out = grid.with_bits(images);
    let cells = out.count();
    if cells > budget.max_cells {
        return Err(Error::CellBudgetExceeded {
            tuples: cells as u128,
            cap: budget.max_cells as u64,
        });
    }
    Ok(out)
}

/// Marks the images of a range of work items; `eval(t, bits)` handles item `t`.
fn par_mark<F>(grid: &GridSet, items: u64, eval: F) -> Result<BitSet>
where
    F: Fn(u64, &mut BitSet) -> Result<()> + Sync,
{
    let chunks = items.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut bits = BitSet::new(grid.total_cells());
            for t in c * CHUNK..((c + 1) * CHUNK).min(items) {
                eval(t, &mut bits)?;
            }
            Ok(bits)
        })
        .try_reduce(
            || BitSet::new(grid.total_cells()),
            |mut a, b| {
                a.union_with(&b);
                Ok(a)
            },
        )
}

/// `F_S(K_0,…,K_{m−1}) = ⋃_j φ_j(K_0 × ⋯ × K_{m−1})` as a grid outer cover.
pub fn hutchinson_step(sys: &GifsSystem, ks: &[GridSet]) -> Result<GridSet> {
    hutchinson_step_with(sys, ks, &SetBudget::default())
}

pub fn hutchinson_step_with(sys: &GifsSystem, ks: &[GridSet], budget: &SetBudget) -> Result<GridSet> {
    let m = sys.degree();
    let d = sys.dim();
    if ks.len() != m {
        return Err(Error::invalid(format!("{} sets given for degree {m}", ks.len())));
    }
    let grid = &ks[0];
    if grid.bounds() != sys.domain() || ks.iter().any(|k| !k.same_grid(grid)) {
        return Err(Error::Mismatch);
    }
    if ks.iter().any(GridSet::is_empty) {
        return Err(Error::EmptySet);
    }
    let centers: Vec<Vec<f64>> = ks.iter().map(GridSet::centers).collect();
    let counts: Vec<u64> = ks.iter().map(|k| k.count() as u64).collect();
    let tuples: u128 = counts.iter().map(|&c| c as u128).product();
    let evals = tuples * sys.len() as u128;
    if evals > budget.max_tuples as u128 {
        return Err(Error::CellBudgetExceeded {
            tuples: evals,
            cap: budget.max_tuples,
        });
    }
    let domain = sys.domain();
    let radii = enclosure_radii(sys, grid.eps());
    let images = par_mark(grid, tuples as u64, |t, bits| {
        let mut window = vec![0.0; m * d];
        let mut rest = t;
        for (k, c) in counts.iter().enumerate() {
            let i = (rest % c) as usize;
            rest /= c;
            window[k * d..(k + 1) * d].copy_from_slice(&centers[k][i * d..(i + 1) * d]);
        }
        let mut img = vec![0.0; d];
        for (map, &rho) in sys.maps().iter().zip(&radii) {
            map.apply(&window, &mut img);
            if !domain.contains(&img) {
                return Err(Error::PointOutsideDomain { point: img });
            }
            grid.mark_box(bits, &[], &img, rho);
        }
        Ok(())
    })?;
    finish(grid, images, budget)
}

/// `F_Ŝ(K) = ⋃_i φ̂_i(K)` on a grid over `X^m`.
pub fn extended_step(ext: &ExtendedIfs, k: &GridSet) -> Result<GridSet> {
    extended_step_with(ext, k, &SetBudget::default())
}

pub fn extended_step_with(ext: &ExtendedIfs, k: &GridSet, budget: &SetBudget) -> Result<GridSet> {
    if k.bounds() != ext.domain() || k.block_dim() != ext.base().dim() {
        return Err(Error::Mismatch);
    }
    if k.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = ext.state_dim();
    let d = ext.base().dim();
    let cells: Vec<usize> = k.cells().collect();
    let centers = k.centers();
    let radii = enclosure_radii(ext.base(), k.eps());
    let count = k.count() as u64;
    let evals = count as u128 * ext.len() as u128;
    if evals > budget.max_tuples as u128 {
        return Err(Error::CellBudgetExceeded {
            tuples: evals,
            cap: budget.max_tuples,
        });
    }
    let domain = ext.domain();
    let images = par_mark(k, count, |t, bits| {
        let t = t as usize;
        let x = &centers[t * dim..(t + 1) * dim];
        let mut coords = vec![0; dim];
        k.coords_of(cells[t], &mut coords);
        let mut img = vec![0.0; dim];
        for (i, &rho) in radii.iter().enumerate() {
            ext.apply(i, x, &mut img);
            if !domain.contains(&img) {
                return Err(Error::PointOutsideDomain { point: img });
            }
            k.mark_box(bits, &coords[d..], &img[dim - d..], rho);
        }
        Ok(())
    })?;
    finish(k, images, budget)
}

/// `H_{j+m} = F_S(H_j, …, H_{j+m−1})` from `m` seed sets (oldest first) until
/// the Hausdorff gap between successive iterates has stayed at most `tol` for
/// `m` consecutive steps, so that every argument of the next step has settled.
pub fn iterate_attractor(
    sys: &GifsSystem,
    seeds: &[GridSet],
    tol: f64,
    max_iter: usize,
) -> Result<AttractorRun> {
    iterate_attractor_with(sys, seeds, tol, max_iter, &SetBudget::default())
}

pub fn iterate_attractor_with(
    sys: &GifsSystem,
    seeds: &[GridSet],
    tol: f64,
    max_iter: usize,
    budget: &SetBudget,
) -> Result<AttractorRun> {
    if seeds.len() != sys.degree() {
        return Err(Error::invalid(format!(
            "{} seed sets given for degree {}",
            seeds.len(),
            sys.degree()
        )));
    }
    check_tol(tol, seeds[0].eps())?;
    let mut window: VecDeque<GridSet> = seeds.iter().cloned().collect();
    let mut trace = ConvergenceTrace::default();
    let mut gap = f64::INFINITY;
    let mut settled = 0;
    for step in 1..=max_iter {
        let args: Vec<GridSet> = window.iter().cloned().collect();
        let next = hutchinson_step_with(sys, &args, budget)?;
        gap = hausdorff_distance(&next, window.back().expect("degree ≥ 2"))?;
        trace.iterations.push(TraceStep {
            step,
            gap,
            cells: next.count(),
        });
        window.pop_front();
        window.push_back(next);
        settled = if gap <= tol { settled + 1 } else { 0 };
        if settled == sys.degree() {
            return Ok(AttractorRun {
                attractor: window.pop_back().expect("non-empty"),
                trace,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        gap,
        tol,
    })
}

/// `Ĥ_{j+1} = F_Ŝ(Ĥ_j)` until successive iterates are within `tol`.
pub fn iterate_extended_attractor(
    ext: &ExtendedIfs,
    seed: &GridSet,
    tol: f64,
    max_iter: usize,
) -> Result<AttractorRun> {
    iterate_extended_attractor_with(ext, seed, tol, max_iter, &SetBudget::default())
}

pub fn iterate_extended_attractor_with(
    ext: &ExtendedIfs,
    seed: &GridSet,
    tol: f64,
    max_iter: usize,
    budget: &SetBudget,
) -> Result<AttractorRun> {
    check_tol(tol, seed.eps())?;
    let mut cur = seed.clone();
    let mut trace = ConvergenceTrace::default();
    let mut gap = f64::INFINITY;
    for step in 1..=max_iter {
        let next = extended_step_with(ext, &cur, budget)?;
        gap = hausdorff_distance(&next, &cur)?;
        trace.iterations.push(TraceStep {
            step,
            gap,
            cells: next.count(),
        });
        cur = next;
        if gap <= tol {
            return Ok(AttractorRun {
                attractor: cur,
                trace,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        gap,
        tol,
    })
}

fn check_tol(tol: f64, eps: f64) -> Result<()> {
    if !(tol >= eps) {
        return Err(Error::invalid(format!(
            "tolerance {tol} is below the grid resolution {eps}"
        )));
    }
    Ok(())
}
