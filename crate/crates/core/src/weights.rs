//! Place-dependent probabilities `p_j : X^m → [0,1]`.
//!
//! Raw weight values are clipped to `[0,1]`; the sum-to-one and lower-bound
//! checks are applied to the clipped values and are never repaired by
//! renormalization.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::defaults::SUM_TOL;
use crate::error::{Error, Result};

pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `p(window) = offset + gradient · window`, clipped to `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineWeight {
    pub offset: f64,
    /// One entry per window coordinate, `m·d` in total, oldest block first.
    pub gradient: Vec<f64>,
}

#[derive(Clone)]
pub enum WeightKind {
    Constant(Vec<f64>),
    Affine(Vec<AffineWeight>),
    Opaque(Vec<WeightFn>),
}

impl fmt::Debug for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            WeightKind::Affine(v) => f.debug_tuple("Affine").field(v).finish(),
            WeightKind::Opaque(v) => write!(f, "Opaque({} weights)", v.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightSystem {
    kind: WeightKind,
    delta: f64,
    /// Per-weight, per-block Lipschitz coefficients.
    lip: Vec<Vec<f64>>,
}

fn check_lip(lip: &[Vec<f64>], n: usize) -> Result<()> {
    if lip.len() != n {
        return Err(Error::invalid(format!(
            "{} Lipschitz vectors for {n} weights",
            lip.len()
        )));
    }
    let degree = lip[0].len();
    for l in lip {
        if l.len() != degree || l.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("weight Lipschitz vectors must share a length and be non-negative"));
        }
    }
    Ok(())
}

impl WeightSystem {
    /// Constant weights. `delta` defaults to the smallest value.
    pub fn constant(values: Vec<f64>, degree: usize, delta: Option<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("no weights given"));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let delta = delta.unwrap_or(min);
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("weight lower bound must be positive, got {delta}")));
        }
        for (j, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("constant weight {j} = {v} lies outside [0,1]")));
            }
            if v < delta {
                return Err(Error::WeightBelowDelta { index: j, value: v, delta });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::SumNotOne { sum });
        }
        let n = values.len();
        Ok(WeightSystem {
            kind: WeightKind::Constant(values),
            delta,
            lip: vec![vec![0.0; degree]; n],
        })
    }

    pub fn uniform(n: usize, degree: usize) -> Self {
        WeightSystem {
            kind: WeightKind::Constant(vec![1.0 / n as f64; n]),
            delta: 1.0 / n as f64,
            lip: vec![vec![0.0; degree]; n],
        }
    }

    /// Affine weights over windows of `degree` blocks in `R^dim`. Missing
    /// Lipschitz vectors default to the Euclidean norms of the gradient blocks.
    pub fn affine(
        terms: Vec<AffineWeight>,
        degree: usize,
        dim: usize,
        delta: f64,
        lip: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("no weights given"));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("weight lower bound must be positive, got {delta}")));
        }
        for (j, t) in terms.iter().enumerate() {
            if t.gradient.len() != degree * dim {
                return Err(Error::invalid(format!(
                    "weight {j} gradient has {} entries, expected {}",
                    t.gradient.len(),
                    degree * dim
                )));
            }
        }
        let lip = match lip {
            Some(l) => l,
            None => terms
                .iter()
                .map(|t| {
                    t.gradient
                        .chunks(dim)
                        .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
                        .collect()
                })
                .collect(),
        };
        check_lip(&lip, terms.len())?;
        Ok(WeightSystem {
            kind: WeightKind::Affine(terms),
            delta,
            lip,
        })
    }

    pub fn opaque(fns: Vec<WeightFn>, delta: f64, lip: Vec<Vec<f64>>) -> Result<Self> {
        if fns.is_empty() {
            return Err(Error::invalid("no weights given"));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("weight lower bound must be positive, got {delta}")));
        }
        check_lip(&lip, fns.len())?;
        Ok(WeightSystem {
            kind: WeightKind::Opaque(fns),
            delta,
            lip,
        })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.lip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lip.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lip(&self) -> &[Vec<f64>] {
        &self.lip
    }

    pub fn degree(&self) -> usize {
        self.lip[0].len()
    }

    pub fn lip_sum(&self, j: usize) -> f64 {
        self.lip[j].iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, WeightKind::Constant(_))
    }

    /// Clipped value of `p_j`, no hypothesis checks.
    pub fn raw(&self, j: usize, window: &[f64]) -> f64 {
        let v = match &self.kind {
            WeightKind::Constant(v) => v[j],
            WeightKind::Affine(t) => {
                let t = &t[j];
                t.offset + t.gradient.iter().zip(window).map(|(g, x)| g * x).sum::<f64>()
            }
            WeightKind::Opaque(f) => f[j](window),
        };
        v.clamp(0.0, 1.0)
    }

    /// All `n` weights at `window`, checking `p_j ≥ δ` and `Σ p_j = 1`.
    pub fn eval_all(&self, window: &[f64], out: &mut [f64]) -> Result<()> {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.raw(j, window);
        }
        self.check_values(out)
    }

    pub(crate) fn check_values(&self, values: &[f64]) -> Result<()> {
        for (j, &v) in values.iter().enumerate() {
            if v < self.delta {
                return Err(Error::WeightBelowDelta {
                    index: j,
                    value: v,
                    delta: self.delta,
                });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::SumNotOne { sum });
        }
        Ok(())
    }

    /// `p_j(window)` after checking the whole weight vector at `window`.
    pub fn eval_weight(&self, j: usize, window: &[f64]) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.len(),
            });
        }
        let mut values = vec![0.0; self.len()];
        self.eval_all(window, &mut values)?;
        Ok(values[j])
    }
}
