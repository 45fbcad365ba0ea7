//! The extended IFS `Ŝ` on `X^m` and its powers.
//!
//! `φ̂_i(x_0,…,x_{m−1}) = (x_1,…,x_{m−1}, φ_i(x_0,…,x_{m−1}))`: drop the
//! oldest block, append the image. Reading the last block of an `Ŝ` orbit
//! reproduces the GIFS recurrence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::defaults::WORD_CAP;
use crate::error::{Error, Result};
use crate::geometry::{sup_blocks, Bounds};
use crate::system::GifsSystem;
use crate::weights::WeightSystem;

#[derive(Debug, Clone)]
pub struct ExtendedIfs {
    base: GifsSystem,
    lambda: f64,
    domain: Bounds,
}

/// Builds `Ŝ`; fails when some map has Lipschitz sum `≥ 1`.
pub fn build_extension(sys: &GifsSystem) -> Result<ExtendedIfs> {
    if let Some((map, sum)) = sys.e1_violation() {
        return Err(Error::E1Violation { map, sum });
    }
    Ok(ExtendedIfs::new_unchecked(sys))
}

impl ExtendedIfs {
    /// `Ŝ` without the contraction check, for probing bad systems.
    pub fn new_unchecked(sys: &GifsSystem) -> Self {
        ExtendedIfs {
            base: sys.clone(),
            lambda: sys.lambda(),
            domain: sys.domain().power(sys.degree()),
        }
    }

    pub fn base(&self) -> &GifsSystem {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `m·d`.
    pub fn state_dim(&self) -> usize {
        self.base.window_len()
    }

    /// `X^m`.
    pub fn domain(&self) -> &Bounds {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `φ̂_i(x)` into `out`, unchecked.
    pub fn apply(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let d = self.base.dim();
        let split = x.len() - d;
        out[..split].copy_from_slice(&x[d..]);
        self.base.maps()[i].apply(x, &mut out[split..]);
    }

    pub fn eval(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.base.map(i)?;
        self.base.check_window(x)?;
        let mut out = vec![0.0; x.len()];
        self.apply(i, x, &mut out);
        Ok(out)
    }
}

/// `Ŝ^k`: all `n^k` words `i_1…i_k`, applied `i_1` first, in lexicographic order.
#[derive(Debug, Clone)]
pub struct PowerSystem {
    ext: ExtendedIfs,
    weights: Option<WeightSystem>,
    k: usize,
    words: Vec<Vec<usize>>,
    lip_words: Vec<f64>,
}

/// Per-word Lipschitz bound for `d_∞`: tracks, for every output block, the
/// coefficients with which each input block enters.
fn word_lip_bound(ext: &ExtendedIfs, word: &[usize]) -> f64 {
    let m = ext.base.degree();
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|b| (0..m).map(|k| if k == b { 1.0 } else { 0.0 }).collect())
        .collect();
    for &i in word {
        let lip = ext.base.maps()[i].lip();
        let mut new_row = vec![0.0; m];
        for (c, row) in lip.iter().zip(&rows) {
            for (acc, r) in new_row.iter_mut().zip(row) {
                *acc += c * r;
            }
        }
        rows.remove(0);
        rows.push(new_row);
    }
    rows.iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn power_system(ext: &ExtendedIfs, ws: Option<&WeightSystem>, k: usize) -> Result<PowerSystem> {
    power_system_with_cap(ext, ws, k, WORD_CAP)
}

pub fn power_system_with_cap(
    ext: &ExtendedIfs,
    ws: Option<&WeightSystem>,
    k: usize,
    cap: usize,
) -> Result<PowerSystem> {
    if k == 0 {
        return Err(Error::invalid("power must be at least 1"));
    }
    if let Some(w) = ws {
        if w.len() != ext.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} maps",
                w.len(),
                ext.len()
            )));
        }
    }
    let n = ext.len();
    let count = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::WordSpaceTooLarge { words: count, cap });
    }
    let mut words = Vec::with_capacity(count as usize);
    let mut word = vec![0usize; k];
    for _ in 0..count {
        words.push(word.clone());
        for pos in (0..k).rev() {
            word[pos] += 1;
            if word[pos] < n {
                break;
            }
            word[pos] = 0;
        }
    }
    let lip_words = words.iter().map(|w| word_lip_bound(ext, w)).collect();
    Ok(PowerSystem {
        ext: ext.clone(),
        weights: ws.cloned(),
        k,
        words,
        lip_words,
    })
}

impl PowerSystem {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn lip_words(&self) -> &[f64] {
        &self.lip_words
    }

    pub fn extension(&self) -> &ExtendedIfs {
        &self.ext
    }

    pub fn weights(&self) -> Option<&WeightSystem> {
        self.weights.as_ref()
    }

    /// `f_{i_k} ∘ ⋯ ∘ f_{i_1}(z)` for word index `w`.
    pub fn eval_word(&self, w: usize, z: &[f64]) -> Vec<f64> {
        let mut cur = z.to_vec();
        let mut next = vec![0.0; z.len()];
        for &i in &self.words[w] {
            self.ext.apply(i, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Product of the weights along the intermediate orbit:
    /// `p_{i_1}(z) · p_{i_2}(f_{i_1} z) ⋯`. `None` without weights.
    pub fn word_weight(&self, w: usize, z: &[f64]) -> Option<f64> {
        let ws = self.weights.as_ref()?;
        let mut cur = z.to_vec();
        let mut next = vec![0.0; z.len()];
        let mut p = 1.0;
        for &i in &self.words[w] {
            p *= ws.raw(i, &cur);
            self.ext.apply(i, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Some(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contractivity {
    pub k_star: usize,
    pub lambda_measured: f64,
}

/// Largest sampled `d_∞` stretch ratio over all words of `Ŝ^k`.
pub fn sampled_word_lipschitz(ps: &PowerSystem, samples: usize, seed: u64) -> f64 {
    let ext = &ps.ext;
    let d = ext.base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; ext.state_dim()];
    let mut v = vec![0.0; ext.state_dim()];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        ext.domain.sample_into(&mut rng, &mut u);
        ext.domain.sample_into(&mut rng, &mut v);
        let base = sup_blocks(&u, &v, d);
        if base == 0.0 {
            continue;
        }
        for w in 0..ps.words.len() {
            let fu = ps.eval_word(w, &u);
            let fv = ps.eval_word(w, &v);
            worst = worst.max(sup_blocks(&fu, &fv, d) / base);
        }
    }
    worst
}

/// Smallest `k ≤ m` whose sampled word stretch ratios are all `< 1`.
pub fn certify_contractivity(ext: &ExtendedIfs, samples: usize, seed: u64) -> Result<Contractivity> {
    let m = ext.base.degree();
    let mut worst_seen = 0.0f64;
    for k in 1..=m {
        let ps = power_system(ext, None, k)?;
        let ratio = sampled_word_lipschitz(&ps, samples.max(1), seed);
        if ratio < 1.0 {
            return Ok(Contractivity {
                k_star: k,
                lambda_measured: ratio,
            });
        }
        worst_seen = ratio;
    }
    Err(Error::NotEventuallyContractive {
        worst_ratio: worst_seen,
    })
}

/// Largest sampled `|p_w(u) − p_w(v)| / d_∞(u, v)` over all words.
pub fn power_weight_modulus(ps: &PowerSystem, samples: usize, seed: u64) -> f64 {
    let Some(ws) = ps.weights.as_ref() else {
        return 0.0;
    };
    if ws.is_constant() {
        return 0.0;
    }
    let ext = &ps.ext;
    let d = ext.base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![0.0; ext.state_dim()];
    let mut v = vec![0.0; ext.state_dim()];
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        ext.domain.sample_into(&mut rng, &mut u);
        ext.domain.sample_into(&mut rng, &mut v);
        let base = sup_blocks(&u, &v, d);
        if base == 0.0 {
            continue;
        }
        for w in 0..ps.words.len() {
            let a = ps.word_weight(w, &u).unwrap_or(0.0);
            let b = ps.word_weight(w, &v).unwrap_or(0.0);
            worst = worst.max((a - b).abs() / base);
        }
    }
    worst
}
