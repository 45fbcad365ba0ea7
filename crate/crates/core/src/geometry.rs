//! Axis-aligned boxes and the metrics used throughout the crate.
//!
//! Points of `X ⊂ R^d` are `&[f64]` of length `d`. A window of `m` points
//! (an element of `X^m`) is stored flat as `m·d` reals, oldest point first,
//! so block `k` occupies `window[k*d..(k+1)*d]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing containment of computed points.
pub const CONTAINMENT_SLACK: f64 = 1e-12;

/// A compact box `[lo_0, hi_0] × … × [lo_{d-1}, hi_{d-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::invalid("box needs at least one coordinate"));
        }
        if lo.len() != hi.len() {
            return Err(Error::invalid(format!(
                "box bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::invalid(format!(
                    "box coordinate {k} has lo={a}, hi={b}"
                )));
            }
        }
        Ok(Bounds { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(vec![lo], vec![hi])
    }

    pub fn unit(dim: usize) -> Self {
        Bounds {
            lo: vec![0.0; dim.max(1)],
            hi: vec![1.0; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Closed containment with [`CONTAINMENT_SLACK`].
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| {
                *x >= a - CONTAINMENT_SLACK && *x <= b + CONTAINMENT_SLACK
            })
    }

    /// True when every point of `X^m` window blocks lies in this box.
    pub fn contains_window(&self, window: &[f64]) -> bool {
        let d = self.dim();
        window.len() % d == 0 && window.chunks(d).all(|p| self.contains(p))
    }

    /// `X^m` as a box in `R^{m·d}`.
    pub fn power(&self, m: usize) -> Bounds {
        let mut lo = Vec::with_capacity(m * self.dim());
        let mut hi = Vec::with_capacity(m * self.dim());
        for _ in 0..m {
            lo.extend_from_slice(&self.lo);
            hi.extend_from_slice(&self.hi);
        }
        Bounds { lo, hi }
    }

    /// Axes `[start, start+len)` as a box of their own.
    pub fn slice(&self, start: usize, len: usize) -> Bounds {
        Bounds {
            lo: self.lo[start..start + len].to_vec(),
            hi: self.hi[start..start + len].to_vec(),
        }
    }

    pub fn is_subset_of(&self, other: &Bounds) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|k| self.lo[k] >= other.lo[k] && self.hi[k] <= other.hi[k])
    }

    /// Fills `out` with a uniform sample from the box.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (k, x) in out.iter_mut().enumerate() {
            let a = self.lo[k % self.dim()];
            let b = self.hi[k % self.dim()];
            *x = a + (b - a) * rng.gen::<f64>();
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `d_∞` on `X^m`: the largest Euclidean distance between matching blocks.
pub fn sup_blocks(a: &[f64], b: &[f64], block_dim: usize) -> f64 {
    a.chunks(block_dim)
        .zip(b.chunks(block_dim))
        .map(|(u, v)| euclidean(u, v))
        .fold(0.0, f64::max)
}
