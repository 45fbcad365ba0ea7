//! Finite difference equations `x_{j+m} = f(x_j, …, x_{j+m−1}, a_j)` with a
//! finite control alphabet, compiled to one GIFS map per control value.
//!
//! State arguments are oldest first throughout.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::defaults::{SEED, VALIDATION_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::Bounds;
use crate::system::{GifsMap, GifsSystem, MapFn};

/// `(state, control) ↦ next`, state flat and oldest first.
pub type RhsFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Rhs {
    /// `κ + γ·a + Σ_k (c_k + a·s_k)·x_{j+k}`, evaluated in exactly that order
    /// (constant part first, then state terms oldest first).
    Linear {
        coeffs: Vec<f64>,
        control_coeff: f64,
        /// `s_k`; absent means zero.
        control_state_coeffs: Option<Vec<f64>>,
        constant: f64,
    },
    /// Scalar closure; `lip[k]` bounds the dependence on `x_{j+k}` for every
    /// control value, or is estimated by sampling when absent.
    Custom { f: RhsFn, lip: Option<Vec<f64>> },
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Linear {
                coeffs,
                control_coeff,
                control_state_coeffs,
                constant,
            } => f
                .debug_struct("Linear")
                .field("coeffs", coeffs)
                .field("control_coeff", control_coeff)
                .field("control_state_coeffs", control_state_coeffs)
                .field("constant", constant)
                .finish(),
            Rhs::Custom { lip, .. } => f.debug_struct("Custom").field("lip", lip).finish_non_exhaustive(),
        }
    }
}

impl Rhs {
    /// Per-argument coefficients and offset of the affine map for control `a`.
    fn affine_parts(&self, a: f64) -> Option<(Vec<f64>, f64)> {
        match self {
            Rhs::Linear {
                coeffs,
                control_coeff,
                control_state_coeffs,
                constant,
            } => {
                let c = match control_state_coeffs {
                    Some(s) => coeffs.iter().zip(s).map(|(c, s)| c + a * s).collect(),
                    None => coeffs.clone(),
                };
                Some((c, constant + control_coeff * a))
            }
            Rhs::Custom { .. } => None,
        }
    }

    pub fn eval(&self, state: &[f64], a: f64) -> f64 {
        match self {
            Rhs::Custom { f, .. } => f(state, a),
            Rhs::Linear { .. } => {
                let (c, offset) = self.affine_parts(a).expect("linear");
                let mut x = offset;
                for (ck, xk) in c.iter().zip(state) {
                    x += ck * xk;
                }
                x
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdeSpec {
    pub order: usize,
    pub alphabet: Vec<f64>,
    pub rhs: Rhs,
    /// One-dimensional state box.
    pub domain: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipSource {
    /// Read off the affine coefficients.
    Exact,
    /// Supplied with a custom right-hand side.
    Declared,
    /// Estimated from samples; a lower bound, not a certificate.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct CompiledFde {
    pub system: GifsSystem,
    pub lip_source: LipSource,
}

impl CompiledFde {
    pub fn lip_certified(&self) -> bool {
        self.lip_source == LipSource::Exact
    }
}

fn check_spec(spec: &FdeSpec) -> Result<()> {
    if spec.alphabet.is_empty() {
        return Err(Error::invalid("control alphabet is empty"));
    }
    if spec.alphabet.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("control alphabet has non-finite values"));
    }
    if spec.domain.dim() != 1 {
        return Err(Error::invalid(format!(
            "difference equations need a scalar domain, got dimension {}",
            spec.domain.dim()
        )));
    }
    let arity = |v: &[f64], what: &str| {
        if v.len() != spec.order {
            Err(Error::invalid(format!(
                "{what} has {} entries for order {}",
                v.len(),
                spec.order
            )))
        } else {
            Ok(())
        }
    };
    match &spec.rhs {
        Rhs::Linear {
            coeffs,
            control_state_coeffs,
            ..
        } => {
            arity(coeffs, "coeffs")?;
            if let Some(s) = control_state_coeffs {
                arity(s, "control_state_coeffs")?;
            }
        }
        Rhs::Custom { lip: Some(l), .. } => arity(l, "lip")?,
        Rhs::Custom { lip: None, .. } => {}
    }
    Ok(())
}

/// `φ_j(y_0, …, y_{m−1}) = f(y_0, …, y_{m−1}, a_j)` for each control value
/// `a_j`, oldest argument first. Contraction is not checked here.
pub fn compile_fde(spec: &FdeSpec) -> Result<CompiledFde> {
    check_spec(spec)?;
    let (maps, lip_source) = match &spec.rhs {
        Rhs::Linear { .. } => {
            let maps = spec
                .alphabet
                .iter()
                .map(|&a| {
                    let (c, offset) = spec.rhs.affine_parts(a).expect("linear");
                    GifsMap::scalar(&c, offset)
                })
                .collect::<Result<Vec<_>>>()?;
            (maps, LipSource::Exact)
        }
        Rhs::Custom { f, lip } => {
            let (lip, source) = match lip {
                Some(l) => (l.clone(), LipSource::Declared),
                None => (sampled_lip(spec, f), LipSource::Sampled),
            };
            let maps = spec
                .alphabet
                .iter()
                .map(|&a| {
                    let f = Arc::clone(f);
                    let g: MapFn = Arc::new(move |w: &[f64], out: &mut [f64]| out[0] = f(w, a));
                    GifsMap::opaque(1, lip.clone(), g)
                })
                .collect::<Result<Vec<_>>>()?;
            (maps, source)
        }
    };
    Ok(CompiledFde {
        system: GifsSystem::new(spec.domain.clone(), spec.order, maps)?,
        lip_source,
    })
}

/// Largest sampled ratio `|f(u) − f(v)| / |u_k − v_k|` over pairs that
/// differ only in argument `k`, across all control values.
fn sampled_lip(spec: &FdeSpec, f: &RhsFn) -> Vec<f64> {
    let m = spec.order;
    let window = spec.domain.power(m);
    let line = spec.domain.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut u = vec![0.0; m];
    let mut t = [0.0];
    let mut lip = vec![0.0f64; m];
    for _ in 0..VALIDATION_SAMPLES / m.max(1) {
        window.sample_into(&mut rng, &mut u);
        for k in 0..m {
            line.sample_into(&mut rng, &mut t);
            let dx = (t[0] - u[k]).abs();
            if dx == 0.0 {
                continue;
            }
            let mut v = u.clone();
            v[k] = t[0];
            for &a in &spec.alphabet {
                lip[k] = lip[k].max((f(&u, a) - f(&v, a)).abs() / dx);
            }
        }
    }
    lip
}

/// Direct iteration of the equation: returns `x_0, …, x_{m−1+controls.len()}`.
pub fn iterate_fde(spec: &FdeSpec, init: &[f64], controls: &[f64]) -> Result<Vec<f64>> {
    check_spec(spec)?;
    if init.len() != spec.order {
        return Err(Error::invalid(format!(
            "{} initial values for order {}",
            init.len(),
            spec.order
        )));
    }
    let m = spec.order;
    let mut xs = init.to_vec();
    for (j, &a) in controls.iter().enumerate() {
        let next = spec.rhs.eval(&xs[j..j + m], a);
        xs.push(next);
    }
    Ok(xs)
}

/// `b_0, …, b_{n−1}` with `b_0 = b_1 = 1`, `b_{k+1} = b_k + 4·b_{k−1}`: the
/// series of `1/(1 − w − 4w²)`.
pub fn coefficients(n: usize) -> Vec<BigUint> {
    let mut b: Vec<BigUint> = Vec::with_capacity(n);
    for k in 0..n {
        let next = if k < 2 {
            BigUint::one()
        } else {
            &b[k - 1] + (&b[k - 2] << 2u32)
        };
        b.push(next);
    }
    b
}

/// Roots of `1 − w − 4w²` and the closed form they give for `b_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientOracle {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for CoefficientOracle {
    fn default() -> Self {
        let r = 17f64.sqrt();
        CoefficientOracle {
            lambda1: (-1.0 - r) / 8.0,
            lambda2: (-1.0 + r) / 8.0,
        }
    }
}

impl CoefficientOracle {
    /// `(λ_2^{−n−1} − λ_1^{−n−1}) / √17`.
    pub fn closed_form(&self, n: u32) -> f64 {
        let e = -(n as i32) - 1;
        (self.lambda2.powi(e) - self.lambda1.powi(e)) / 17f64.sqrt()
    }
}

fn ratio(b: &BigUint, k: usize) -> f64 {
    // b_k / 4^k without overflowing either side
    let shift = 2 * k as u64;
    let bits = b.bits();
    if bits > 1000 {
        let drop = bits - 1000;
        (b >> drop).to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(drop as i32 - shift as i32)
    } else {
        b.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-(shift as i32))
    }
}

/// Explicit solution of `x_{k+2} = x_{k+1}/4 + x_k/4 + a_k/2`:
/// `x_{n+2} = b_n/4^{n+1}·x_0 + b_{n+1}/4^{n+1}·x_1 + Σ_{j≤n} b_j/(2·4^j)·a_{n−j}`.
pub fn closed_form_orbit(x0: f64, x1: f64, controls: &[f64], n: usize) -> Result<f64> {
    if controls.len() < n + 1 {
        return Err(Error::invalid(format!(
            "{} controls given, {} needed",
            controls.len(),
            n + 1
        )));
    }
    let b = coefficients(n + 2);
    let c: Vec<f64> = b.iter().enumerate().map(|(k, bk)| ratio(bk, k)).collect();
    let mut x = c[n] / 4.0 * x0 + c[n + 1] * x1;
    for j in 0..=n {
        x += c[j] / 2.0 * controls[n - j];
    }
    Ok(x)
}

/// Coefficient of `x_0` in `x_{n+2}` for the worked example, `b_n/4^{n+1}`.
pub fn x0_coefficient(n: usize) -> f64 {
    ratio(&coefficients(n + 1)[n], n) / 4.0
}

/// Order-2 linear equation `x_{k+2} = α·x_{k+1} + β·x_k + γ·a_k + κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOrder2 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl LinearOrder2 {
    /// Reads `x_{k+2} = coeffs[1]·x_{k+1} + coeffs[0]·x_k + …` off a linear
    /// order-2 equation whose controls do not multiply the state.
    pub fn from_spec(spec: &FdeSpec) -> Option<Self> {
        match &spec.rhs {
            Rhs::Linear {
                coeffs,
                control_coeff,
                control_state_coeffs: None,
                constant,
            } if spec.order == 2 && coeffs.len() == 2 => Some(LinearOrder2 {
                alpha: coeffs[1],
                beta: coeffs[0],
                gamma: *control_coeff,
                kappa: *constant,
            }),
            _ => None,
        }
    }

    /// `c_0, …, c_{n−1}`.
    pub fn series(&self, n: usize) -> Vec<f64> {
        let mut c = Vec::with_capacity(n.max(2));
        c.extend([1.0, self.alpha]);
        for k in 1..n.saturating_sub(1) {
            c.push(self.alpha * c[k] + self.beta * c[k - 1]);
        }
        c.truncate(n);
        c
    }

    /// Explicit solution via `c_0 = 1`, `c_1 = α`, `c_{k+1} = α·c_k + β·c_{k−1}`:
    /// `x_{n+2} = β·c_n·x_0 + c_{n+1}·x_1 + Σ_{j≤n} c_j·(γ·a_{n−j} + κ)`.
    pub fn closed_form(&self, x0: f64, x1: f64, controls: &[f64], n: usize) -> Result<f64> {
        if controls.len() < n + 1 {
            return Err(Error::invalid(format!(
                "{} controls given, {} needed",
                controls.len(),
                n + 1
            )));
        }
        let c = self.series(n + 2);
        let mut x = self.beta * c[n] * x0 + c[n + 1] * x1;
        for j in 0..=n {
            x += c[j] * (self.gamma * controls[n - j] + self.kappa);
        }
        Ok(x)
    }
}
