//! Seeded chaos-game orbits.
//!
//! Symbols are drawn with ChaCha8 (`rand_chacha`) seeded through
//! `seed_from_u64`: one uniform `u ∈ [0,1)` per step, and the symbol is the
//! lowest index `i` with `u < p_0 + … + p_i` for the weights at the current
//! window. The same seed therefore reproduces the same orbit on every
//! platform and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::system::GifsSystem;
use crate::weights::WeightSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum History {
    /// Keep every point and symbol.
    Full,
    /// Keep only the current window.
    Windowed,
}

/// Incremental orbit `x_{j+m} = φ_{a_j}(x_j, …, x_{j+m−1})`.
#[derive(Debug, Clone)]
pub struct OrbitStream<'a> {
    sys: &'a GifsSystem,
    ws: &'a WeightSystem,
    seed: u64,
    rng: ChaCha8Rng,
    history: History,
    window: Vec<f64>,
    points: Vec<f64>,
    symbols: Vec<usize>,
    steps: usize,
    probs: Vec<f64>,
    img: Vec<f64>,
}

impl<'a> OrbitStream<'a> {
    /// `init` holds the first `m` points, oldest first.
    pub fn new(
        sys: &'a GifsSystem,
        ws: &'a WeightSystem,
        init: &[f64],
        seed: u64,
        history: History,
    ) -> Result<Self> {
        if ws.len() != sys.len() || ws.degree() != sys.degree() {
            return Err(Error::Mismatch);
        }
        sys.check_window(init)?;
        Ok(OrbitStream {
            sys,
            ws,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history,
            window: init.to_vec(),
            points: if history == History::Full { init.to_vec() } else { Vec::new() },
            symbols: Vec::new(),
            steps: 0,
            probs: vec![0.0; sys.len()],
            img: vec![0.0; sys.dim()],
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Current window `(x_j, …, x_{j+m−1})`, flat.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Newest point.
    pub fn current(&self) -> &[f64] {
        &self.window[self.window.len() - self.sys.dim()..]
    }

    /// All points so far (empty in windowed mode).
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Draws a symbol from the weights at the current window, applies its
    /// map, and shifts the window. Returns the symbol.
    pub fn step(&mut self) -> Result<usize> {
        self.ws.eval_all(&self.window, &mut self.probs)?;
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut sym = self.probs.len() - 1;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                sym = i;
                break;
            }
        }
        self.sys.maps()[sym].apply(&self.window, &mut self.img);
        if !self.sys.domain().contains(&self.img) {
            return Err(Error::PointOutsideDomain { point: self.img.clone() });
        }
        let d = self.sys.dim();
        self.window.copy_within(d.., 0);
        let n = self.window.len();
        self.window[n - d..].copy_from_slice(&self.img);
        if self.history == History::Full {
            self.points.extend_from_slice(&self.img);
            self.symbols.push(sym);
        }
        self.steps += 1;
        Ok(sym)
    }

    pub fn into_orbit(self, burn_in: usize) -> Orbit {
        Orbit {
            dim: self.sys.dim(),
            degree: self.sys.degree(),
            seed: self.seed,
            burn_in,
            points: self.points,
            symbols: self.symbols,
        }
    }
}

/// A finished orbit `x_0, …, x_{m+burn_in+steps−1}` with its symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub dim: usize,
    pub degree: usize,
    pub seed: u64,
    /// Points and windows with index below this are left out of statistics.
    pub burn_in: usize,
    /// Flat points, `dim` coordinates each.
    pub points: Vec<f64>,
    /// `symbols[j]` produced point `j + degree`.
    pub symbols: Vec<usize>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n * self.dim..(n + 1) * self.dim]
    }

    /// Number of windows `(x_n, …, x_{n+m−1})`.
    pub fn windows(&self) -> usize {
        self.len() + 1 - self.degree
    }

    pub fn window(&self, n: usize) -> &[f64] {
        &self.points[n * self.dim..(n + self.degree) * self.dim]
    }

    /// Points available after burn-in.
    pub fn post_points(&self) -> usize {
        self.len().saturating_sub(self.burn_in)
    }

    /// Windows available after burn-in.
    pub fn post_windows(&self) -> usize {
        self.windows().saturating_sub(self.burn_in)
    }

    /// The symbol that produced point `n`, if any.
    pub fn symbol_of(&self, n: usize) -> Option<usize> {
        n.checked_sub(self.degree).map(|j| self.symbols[j])
    }
}

/// Runs `burn_in + steps` chaos-game steps from `init`, keeping everything.
pub fn chaos_orbit(
    sys: &GifsSystem,
    ws: &WeightSystem,
    init: &[f64],
    steps: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Orbit> {
    if steps == 0 {
        return Err(Error::invalid("an orbit needs at least one step"));
    }
    let mut s = OrbitStream::new(sys, ws, init, seed, History::Full)?;
    for _ in 0..burn_in + steps {
        s.step()?;
    }
    Ok(s.into_orbit(burn_in))
}

/// Independent orbits for each seed, in seed-sorted order.
pub fn chaos_ensemble(
    sys: &GifsSystem,
    ws: &WeightSystem,
    init: &[f64],
    steps: usize,
    seeds: &[u64],
    burn_in: usize,
) -> Result<Vec<Orbit>> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds
        .par_iter()
        .map(|&s| chaos_orbit(sys, ws, init, steps, s, burn_in))
        .collect()
}

/// Grid cover of the windows `(x_n, …, x_{n+m−1})` for `tail_start ≤ n < end`,
/// on `domain^m` at resolution `eps`.
pub fn orbit_closure(
    orbit: &Orbit,
    sys: &GifsSystem,
    eps: f64,
    tail_start: usize,
    end: usize,
) -> Result<GridSet> {
    if orbit.dim != sys.dim() || orbit.degree != sys.degree() {
        return Err(Error::Mismatch);
    }
    let end = end.min(orbit.windows());
    if tail_start >= end {
        return Err(Error::invalid(format!(
            "tail start {tail_start} leaves no windows before {end}"
        )));
    }
    let mut g = GridSet::new(sys.domain().power(sys.degree()), eps, sys.dim())?;
    for n in tail_start..end {
        g.insert_point(orbit.window(n));
    }
    Ok(g)
}
