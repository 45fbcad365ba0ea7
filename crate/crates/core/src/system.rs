//! Generalized IFS of degree `m`: `n` maps `X^m → X` on a box `X ⊂ R^d`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Bounds;

/// Declared Lipschitz coefficients of an affine map must match the block
/// operator norms this closely.
pub const AFFINE_LIP_TOL: f64 = 1e-12;

/// `f(window, out)` with `window.len() == m·d` and `out.len() == d`.
pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum MapKind {
    /// `φ(x_0,…,x_{m-1}) = Σ_k blocks[k]·x_k + offset`; blocks are row-major `d×d`.
    Affine {
        blocks: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Opaque(MapFn),
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Affine { blocks, offset } => f
                .debug_struct("Affine")
                .field("blocks", blocks)
                .field("offset", offset)
                .finish(),
            MapKind::Opaque(_) => f.write_str("Opaque"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GifsMap {
    kind: MapKind,
    lip: Vec<f64>,
    dim: usize,
}

/// Spectral norm of a row-major `d×d` block, the Lipschitz constant of
/// `x ↦ B·x` for the Euclidean metric.
pub fn block_norm(block: &[f64], d: usize) -> f64 {
    if d == 1 {
        return block[0].abs();
    }
    DMatrix::from_row_slice(d, d, block)
        .singular_values()
        .iter()
        .fold(0.0, |a, &s| f64::max(a, s))
}

impl GifsMap {
    /// Affine map from `m` row-major `d×d` blocks. When `lip` is `None` the
    /// coefficients are the block norms; a declared `lip` must agree with
    /// them to [`AFFINE_LIP_TOL`].
    pub fn affine(blocks: Vec<Vec<f64>>, offset: Vec<f64>, lip: Option<Vec<f64>>) -> Result<Self> {
        let d = offset.len();
        if d == 0 {
            return Err(Error::invalid("affine map has an empty offset"));
        }
        if blocks.is_empty() {
            return Err(Error::invalid("affine map has no blocks"));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.len() != d * d {
                return Err(Error::invalid(format!(
                    "block {k} has {} entries, expected {}",
                    b.len(),
                    d * d
                )));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("block {k} has non-finite entries")));
            }
        }
        if offset.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("offset has non-finite entries"));
        }
        let norms: Vec<f64> = blocks.iter().map(|b| block_norm(b, d)).collect();
        let lip = match lip {
            None => norms,
            Some(declared) => {
                if declared.len() != norms.len() {
                    return Err(Error::invalid(format!(
                        "declared {} Lipschitz coefficients for {} blocks",
                        declared.len(),
                        norms.len()
                    )));
                }
                for (k, (a, b)) in declared.iter().zip(&norms).enumerate() {
                    if (a - b).abs() > AFFINE_LIP_TOL {
                        return Err(Error::invalid(format!(
                            "declared Lipschitz coefficient {a} for block {k} differs from its norm {b}"
                        )));
                    }
                }
                declared
            }
        };
        Ok(GifsMap {
            kind: MapKind::Affine { blocks, offset },
            lip,
            dim: d,
        })
    }

    /// Scalar affine map `Σ_k coeffs[k]·x_k + offset` on `X ⊂ R`.
    pub fn scalar(coeffs: &[f64], offset: f64) -> Result<Self> {
        GifsMap::affine(coeffs.iter().map(|&c| vec![c]).collect(), vec![offset], None)
    }

    pub fn constant(value: Vec<f64>, degree: usize) -> Result<Self> {
        let d = value.len();
        GifsMap::affine(vec![vec![0.0; d * d]; degree], value, None)
    }

    /// Map given by a closure. The Lipschitz vector is trusted as declared;
    /// validation can refute it but not prove it.
    pub fn opaque(dim: usize, lip: Vec<f64>, f: MapFn) -> Result<Self> {
        if dim == 0 || lip.is_empty() {
            return Err(Error::invalid("opaque map needs a dimension and Lipschitz vector"));
        }
        if lip.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("Lipschitz coefficients must be finite and non-negative"));
        }
        Ok(GifsMap {
            kind: MapKind::Opaque(f),
            lip,
            dim,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn lip(&self) -> &[f64] {
        &self.lip
    }

    pub fn lip_sum(&self) -> f64 {
        self.lip.iter().sum()
    }

    pub fn degree(&self) -> usize {
        self.lip.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates without any domain checks.
    pub fn apply(&self, window: &[f64], out: &mut [f64]) {
        match &self.kind {
            MapKind::Affine { blocks, offset } => {
                let d = offset.len();
                out.copy_from_slice(offset);
                for (k, b) in blocks.iter().enumerate() {
                    let x = &window[k * d..(k + 1) * d];
                    for (r, o) in out.iter_mut().enumerate() {
                        let row = &b[r * d..(r + 1) * d];
                        *o += row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
                    }
                }
            }
            MapKind::Opaque(f) => f(window, out),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GifsSystem {
    domain: Bounds,
    degree: usize,
    maps: Vec<GifsMap>,
}

impl GifsSystem {
    /// Checks the structural invariants only. The contraction hypothesis is
    /// reported by `validate_system` and enforced where it is needed.
    pub fn new(domain: Bounds, degree: usize, maps: Vec<GifsMap>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::invalid(format!("degree must be at least 2, got {degree}")));
        }
        if maps.is_empty() {
            return Err(Error::invalid("system needs at least one map"));
        }
        for (j, map) in maps.iter().enumerate() {
            if map.degree() != degree {
                return Err(Error::invalid(format!(
                    "map {j} has {} Lipschitz coefficients, degree is {degree}",
                    map.degree()
                )));
            }
            if map.dim() != domain.dim() {
                return Err(Error::invalid(format!(
                    "map {j} acts on R^{}, domain is R^{}",
                    map.dim(),
                    domain.dim()
                )));
            }
        }
        Ok(GifsSystem {
            domain,
            degree,
            maps,
        })
    }

    pub fn domain(&self) -> &Bounds {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Dimension `d` of `X ⊂ R^d`.
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Length `m·d` of a flat window.
    pub fn window_len(&self) -> usize {
        self.degree * self.dim()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[GifsMap] {
        &self.maps
    }

    pub fn map(&self, j: usize) -> Result<&GifsMap> {
        self.maps.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.maps.len(),
        })
    }

    /// `λ = max_j Σ_k lip[j][k]`.
    pub fn lambda(&self) -> f64 {
        self.maps.iter().map(GifsMap::lip_sum).fold(0.0, f64::max)
    }

    /// First map whose Lipschitz sum is not below one.
    pub fn e1_violation(&self) -> Option<(usize, f64)> {
        self.maps
            .iter()
            .enumerate()
            .map(|(j, m)| (j, m.lip_sum()))
            .find(|(_, s)| !(*s < 1.0))
    }

    /// `φ_j(window)` with the window given flat, oldest point first.
    pub fn eval_map(&self, j: usize, window: &[f64]) -> Result<Vec<f64>> {
        let map = self.map(j)?;
        self.check_window(window)?;
        let mut out = vec![0.0; self.dim()];
        map.apply(window, &mut out);
        Ok(out)
    }

    pub(crate) fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.window_len() {
            return Err(Error::invalid(format!(
                "window has {} coordinates, expected {}",
                window.len(),
                self.window_len()
            )));
        }
        if !self.domain.contains_window(window) {
            return Err(Error::PointOutsideDomain {
                point: window.to_vec(),
            });
        }
        Ok(())
    }
}
