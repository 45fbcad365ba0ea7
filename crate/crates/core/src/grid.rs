//! Outer approximations of compact sets as occupied cells of a uniform grid.
//!
//! A point belongs to the cell `floor((x − lo)/eps)` on every axis (clamped
//! into the grid). Cells are numbered with axis 0 varying fastest. Distances
//! between cells are measured between their centers with the `d_∞`-of-blocks
//! metric, so a grid over `X^m` uses the same metric as the extended system.

use std::fmt::Write as _;

use crate::defaults::GRID_BITS_CAP;
use crate::error::{Error, Result};
use crate::geometry::Bounds;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + t)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    bounds: Bounds,
    eps: f64,
    block_dim: usize,
    shape: Vec<usize>,
    strides: Vec<usize>,
    bits: BitSet,
}

impl GridSet {
    /// Empty grid over `bounds` with cell side `eps`; `block_dim` is the
    /// dimension `d` of one block (`bounds.dim()` for a set in `X`).
    pub fn new(bounds: Bounds, eps: f64, block_dim: usize) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!("cell side must be positive, got {eps}")));
        }
        if block_dim == 0 || bounds.dim() % block_dim != 0 {
            return Err(Error::invalid(format!(
                "block dimension {block_dim} does not divide {}",
                bounds.dim()
            )));
        }
        let shape: Vec<usize> = (0..bounds.dim())
            .map(|k| ((bounds.side(k) / eps) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        let total = shape
            .iter()
            .try_fold(1u64, |acc, &s| acc.checked_mul(s as u64))
            .filter(|t| *t <= GRID_BITS_CAP)
            .ok_or_else(|| Error::invalid(format!("grid {shape:?} exceeds {GRID_BITS_CAP} cells")))?;
        let mut strides = Vec::with_capacity(shape.len());
        let mut s = 1;
        for &n in &shape {
            strides.push(s);
            s *= n;
        }
        Ok(GridSet {
            bounds,
            eps,
            block_dim,
            shape,
            strides,
            bits: BitSet::new(total as usize),
        })
    }

    pub fn full(bounds: Bounds, eps: f64, block_dim: usize) -> Result<Self> {
        let mut g = GridSet::new(bounds, eps, block_dim)?;
        for i in 0..g.bits.len() {
            g.bits.insert(i);
        }
        Ok(g)
    }

    /// Cells meeting the closed box `region`; a cell that only touches the
    /// region at its lower face is left out.
    pub fn cover_region(bounds: Bounds, eps: f64, block_dim: usize, region: &Bounds) -> Result<Self> {
        let mut g = GridSet::new(bounds, eps, block_dim)?;
        if region.dim() != g.dim() {
            return Err(Error::Mismatch);
        }
        let ranges: Vec<(usize, usize)> = (0..g.dim())
            .map(|k| {
                let lo = g.bounds.lo()[k];
                let a = ((region.lo()[k] - lo) / eps).floor().max(0.0) as usize;
                let b = (((region.hi()[k] - lo) / eps).ceil() as isize - 1).max(a as isize) as usize;
                (a.min(g.shape[k] - 1), b.min(g.shape[k] - 1))
            })
            .collect();
        let mut coords: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            let idx = g.index_of(&coords);
            g.bits.insert(idx);
            for k in 0..coords.len() {
                if coords[k] < ranges[k].1 {
                    coords[k] += 1;
                    continue 'outer;
                }
                coords[k] = ranges[k].0;
            }
            break;
        }
        Ok(g)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn total_cells(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &BitSet {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter()
    }

    pub fn same_grid(&self, other: &GridSet) -> bool {
        self.eps == other.eps && self.bounds == other.bounds && self.block_dim == other.block_dim
    }

    /// An empty set on the same grid.
    pub fn empty_like(&self) -> GridSet {
        GridSet {
            bits: BitSet::new(self.bits.len()),
            ..self.clone()
        }
    }

    pub(crate) fn with_bits(&self, bits: BitSet) -> GridSet {
        GridSet { bits, ..self.clone() }
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn coords_of(&self, mut index: usize, out: &mut [usize]) {
        for (k, &n) in self.shape.iter().enumerate() {
            out[k] = index % n;
            index /= n;
        }
    }

    /// Clamped cell coordinate of `x` along `axis`.
    #[inline]
    pub fn axis_cell(&self, axis: usize, x: f64) -> usize {
        let c = ((x - self.bounds.lo()[axis]) / self.eps).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.shape[axis] - 1)
        }
    }

    /// Marks every cell whose leading coordinates are `lead` and whose
    /// remaining axes meet the box of half-width `rho` around `center`.
    pub(crate) fn mark_box(&self, bits: &mut BitSet, lead: &[usize], center: &[f64], rho: f64) {
        let k0 = lead.len();
        let base: usize = lead.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
        let lo: Vec<usize> = center
            .iter()
            .enumerate()
            .map(|(k, x)| self.axis_cell(k0 + k, x - rho))
            .collect();
        let hi: Vec<usize> = center
            .iter()
            .enumerate()
            .map(|(k, x)| self.axis_cell(k0 + k, x + rho))
            .collect();
        let mut cur = lo.clone();
        loop {
            let off: usize = cur.iter().zip(&self.strides[k0..]).map(|(c, s)| c * s).sum();
            bits.insert(base + off);
            let mut k = 0;
            loop {
                if k == cur.len() {
                    return;
                }
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
                k += 1;
            }
        }
    }

    /// Index of the cell containing `p` (clamped into the grid).
    #[inline]
    pub fn cell_of(&self, p: &[f64]) -> usize {
        let mut idx = 0;
        for (k, x) in p.iter().enumerate() {
            let c = ((x - self.bounds.lo()[k]) / self.eps).floor();
            let c = if c < 0.0 {
                0
            } else {
                (c as usize).min(self.shape[k] - 1)
            };
            idx += c * self.strides[k];
        }
        idx
    }

    pub fn center_of(&self, index: usize, out: &mut [f64]) {
        let mut rest = index;
        for (k, &n) in self.shape.iter().enumerate() {
            let c = rest % n;
            rest /= n;
            out[k] = self.bounds.lo()[k] + (c as f64 + 0.5) * self.eps;
        }
    }

    /// Flat list of occupied cell centers.
    pub fn centers(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.count() * d];
        for (i, idx) in self.cells().enumerate() {
            self.center_of(idx, &mut out[i * d..(i + 1) * d]);
        }
        out
    }

    pub fn insert_point(&mut self, p: &[f64]) {
        let idx = self.cell_of(p);
        self.bits.insert(idx);
    }

    pub fn insert_cell(&mut self, index: usize) {
        self.bits.insert(index);
    }

    pub fn contains_cell(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.bounds.contains(p) && self.bits.contains(self.cell_of(p))
    }

    pub fn union_with(&mut self, other: &GridSet) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::Mismatch);
        }
        self.bits.union_with(&other.bits);
        Ok(())
    }

    /// Cellwise inclusion; sets on different grids are never subsets.
    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.same_grid(other) && self.bits.is_subset_of(&other.bits)
    }

    /// Adds every cell within Chebyshev distance `r` (in cells) of an occupied one.
    pub fn dilate(&self, r: usize) -> GridSet {
        if r == 0 {
            return self.clone();
        }
        let mut cur = self.bits.clone();
        let mut coords = vec![0usize; self.dim()];
        for axis in 0..self.dim() {
            let mut next = cur.clone();
            let n = self.shape[axis];
            let stride = self.strides[axis];
            for idx in cur.iter() {
                self.coords_of(idx, &mut coords);
                let c = coords[axis];
                let base = idx - c * stride;
                for t in c.saturating_sub(r)..=(c + r).min(n - 1) {
                    next.insert(base + t * stride);
                }
            }
            cur = next;
        }
        self.with_bits(cur)
    }

    /// Squared `d_∞`-of-blocks distance between two cells, in cell units.
    fn cell_dist_sq(&self, a: &[usize], b: &[usize]) -> u64 {
        a.chunks(self.block_dim)
            .zip(b.chunks(self.block_dim))
            .map(|(u, v)| {
                u.iter()
                    .zip(v)
                    .map(|(x, y)| {
                        let t = x.abs_diff(*y) as u64;
                        t * t
                    })
                    .sum::<u64>()
            })
            .max()
            .unwrap_or(0)
    }

    /// Visits every cell at Chebyshev offset exactly `r` from `center`.
    fn for_each_shell(&self, center: &[usize], r: usize, mut f: impl FnMut(&[usize])) {
        if r == 0 {
            f(center);
            return;
        }
        let dim = self.dim();
        let mut cell = vec![0usize; dim];
        let mut lo = vec![0usize; dim];
        let mut hi = vec![0usize; dim];
        for axis in 0..dim {
            for side in [false, true] {
                let c = center[axis];
                let fixed = if side {
                    if c + r >= self.shape[axis] {
                        continue;
                    }
                    c + r
                } else {
                    if c < r {
                        continue;
                    }
                    c - r
                };
                for k in 0..dim {
                    if k == axis {
                        lo[k] = fixed;
                        hi[k] = fixed;
                        continue;
                    }
                    // axes before `axis` stay strictly inside the shell so
                    // that each shell cell is visited once
                    let reach = if k < axis { r - 1 } else { r };
                    lo[k] = center[k].saturating_sub(reach);
                    hi[k] = (center[k] + reach).min(self.shape[k] - 1);
                }
                cell.copy_from_slice(&lo);
                'odometer: loop {
                    f(&cell);
                    for k in 0..dim {
                        if cell[k] < hi[k] {
                            cell[k] += 1;
                            continue 'odometer;
                        }
                        cell[k] = lo[k];
                    }
                    break;
                }
            }
        }
    }

    /// `max_{a∈self} min_{b∈other} dist(a,b)` in squared cell units.
    fn directed_sq(&self, other: &GridSet) -> u64 {
        let dim = self.dim();
        let max_r = self.shape.iter().copied().max().unwrap_or(1);
        let mut coords = vec![0usize; dim];
        let mut worst: u64 = 0;
        for idx in self.cells() {
            if other.bits.contains(idx) {
                continue;
            }
            self.coords_of(idx, &mut coords);
            let mut best = u64::MAX;
            for r in 1..=max_r {
                let lower = (r as u64) * (r as u64);
                if lower >= best || best <= worst {
                    break;
                }
                self.for_each_shell(&coords, r, |cell| {
                    if other.bits.contains(self.index_of(cell)) {
                        best = best.min(self.cell_dist_sq(&coords, cell));
                    }
                });
            }
            if best != u64::MAX {
                worst = worst.max(best);
            }
        }
        worst
    }
}

/// Exact Hausdorff distance between the occupied cell centers of two sets
/// on the same grid.
pub fn hausdorff_distance(a: &GridSet, b: &GridSet) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::Mismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let sq = a.directed_sq(b).max(b.directed_sq(a));
    Ok((sq as f64).sqrt() * a.eps)
}

/// Projects a set on `X^m` onto coordinate block `block`.
pub fn project_set(k: &GridSet, block: usize) -> Result<GridSet> {
    let d = k.block_dim;
    let blocks = k.dim() / d;
    if block >= blocks {
        return Err(Error::IndexOutOfRange {
            index: block,
            len: blocks,
        });
    }
    let mut out = GridSet::new(k.bounds.slice(block * d, d), k.eps, d)?;
    let mut coords = vec![0usize; k.dim()];
    for idx in k.cells() {
        k.coords_of(idx, &mut coords);
        let j = out.index_of(&coords[block * d..(block + 1) * d]);
        out.bits.insert(j);
    }
    Ok(out)
}

/// Binary PBM (P4) for sets of dimension 1 or 2; occupied cells are black.
/// Row 0 of the image is the top (largest second coordinate).
pub fn to_pbm(set: &GridSet, comment: &str) -> Result<Vec<u8>> {
    let (w, h) = match set.shape.as_slice() {
        [w] => (*w, 1),
        [w, h] => (*w, *h),
        _ => return Err(Error::invalid("PBM output needs a 1- or 2-dimensional grid")),
    };
    let mut out = Vec::new();
    out.extend_from_slice(b"P4\n");
    for line in comment.lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    out.extend_from_slice(format!("{w} {h}\n").as_bytes());
    let row_bytes = w.div_ceil(8);
    for row in 0..h {
        let y = h - 1 - row;
        let mut bytes = vec![0u8; row_bytes];
        for x in 0..w {
            if set.bits.contains(x + y * w) {
                bytes[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&bytes);
    }
    Ok(out)
}

/// CSV of occupied cell centers, header `x0,…,x{D−1}`.
pub fn to_csv(set: &GridSet) -> String {
    let d = set.dim();
    let mut s = (0..d).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    let mut c = vec![0.0; d];
    for idx in set.cells() {
        set.center_of(idx, &mut c);
        let row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}
