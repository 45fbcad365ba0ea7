//! Time averages along orbits.
//!
//! Point statistics use `x_{burn_in}, x_{burn_in+1}, …`; window statistics
//! use the windows starting at the same indices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Bounds;
use crate::orbit::Orbit;

pub type Observable<'a> = &'a dyn Fn(&[f64]) -> f64;

fn check_n(n: usize, available: usize) -> Result<()> {
    if n == 0 || n > available {
        return Err(Error::invalid(format!(
            "{n} samples requested, {available} available after burn-in"
        )));
    }
    Ok(())
}

/// Mean of `f` over the first `n` post-burn-in points.
pub fn ergodic_average(orbit: &Orbit, f: Observable, n: usize) -> Result<f64> {
    check_n(n, orbit.post_points())?;
    let s: f64 = (orbit.burn_in..orbit.burn_in + n).map(|k| f(orbit.point(k))).sum();
    Ok(s / n as f64)
}

/// Mean of `g` over the first `n` post-burn-in windows.
pub fn extended_ergodic_average(orbit: &Orbit, g: Observable, n: usize) -> Result<f64> {
    check_n(n, orbit.post_windows())?;
    let s: f64 = (orbit.burn_in..orbit.burn_in + n).map(|k| g(orbit.window(k))).sum();
    Ok(s / n as f64)
}

/// Closed box `[lo, hi]`; empty when `lo > hi` on some axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid(format!(
                "region bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().chain(&hi).any(|x| x.is_nan()) {
            return Err(Error::invalid("region bound is NaN"));
        }
        Ok(Region { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a > b)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

impl From<&Bounds> for Region {
    fn from(b: &Bounds) -> Self {
        Region {
            lo: b.lo().to_vec(),
            hi: b.hi().to_vec(),
        }
    }
}

/// Fraction of the first `n` post-burn-in points inside `b`.
pub fn visitation_frequency(orbit: &Orbit, b: &Region, n: usize) -> Result<f64> {
    if b.dim() != orbit.dim {
        return Err(Error::Mismatch);
    }
    check_n(n, orbit.post_points())?;
    let hits = (orbit.burn_in..orbit.burn_in + n)
        .filter(|&k| b.contains(orbit.point(k)))
        .count();
    Ok(hits as f64 / n as f64)
}

/// `|mean_{k<n} g(w_{k+1}) − mean_{k<n} g(w_k)|` over post-burn-in windows.
/// The two sums share their interior terms, so the value is
/// `|g(w_n) − g(w_0)| / n` up to one rounding.
pub fn holonomic_defect(orbit: &Orbit, g: Observable, n: usize) -> Result<f64> {
    check_n(n + 1, orbit.post_windows())?;
    let w = |k: usize| g(orbit.window(orbit.burn_in + k));
    let interior: f64 = (1..n).map(w).sum();
    let shifted = (interior + w(n)) / n as f64;
    let plain = (w(0) + interior) / n as f64;
    Ok((shifted - plain).abs())
}

/// Largest `|g|` over the windows a defect of length `n` touches.
pub fn window_sup(orbit: &Orbit, g: Observable, n: usize) -> Result<f64> {
    check_n(n + 1, orbit.post_windows())?;
    Ok((0..=n)
        .map(|k| g(orbit.window(orbit.burn_in + k)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub burn_in: usize,
    pub averages: BTreeMap<String, f64>,
    pub window_averages: BTreeMap<String, f64>,
    /// `3/√N`; a heuristic band, not a confidence interval.
    pub halfwidth: f64,
    pub band: String,
    pub visitation: BTreeMap<String, f64>,
    pub holonomic_defects: BTreeMap<String, f64>,
}

/// Named inputs for [`ergodic_report`].
#[derive(Default)]
pub struct ReportSpec<'a> {
    pub point_observables: Vec<(String, Observable<'a>)>,
    pub window_observables: Vec<(String, Observable<'a>)>,
    pub regions: Vec<(String, Region)>,
}

pub fn ergodic_report(orbit: &Orbit, spec: &ReportSpec, n: usize) -> Result<ErgodicReport> {
    let mut averages = BTreeMap::new();
    for (name, f) in &spec.point_observables {
        averages.insert(name.clone(), ergodic_average(orbit, *f, n)?);
    }
    let mut window_averages = BTreeMap::new();
    let mut holonomic_defects = BTreeMap::new();
    for (name, g) in &spec.window_observables {
        window_averages.insert(name.clone(), extended_ergodic_average(orbit, *g, n)?);
        holonomic_defects.insert(name.clone(), holonomic_defect(orbit, *g, n)?);
    }
    let mut visitation = BTreeMap::new();
    for (name, b) in &spec.regions {
        visitation.insert(name.clone(), visitation_frequency(orbit, b, n)?);
    }
    Ok(ErgodicReport {
        seed: orbit.seed,
        n,
        burn_in: orbit.burn_in,
        averages,
        window_averages,
        halfwidth: 3.0 / (n as f64).sqrt(),
        band: "heuristic 3/sqrt(N)".into(),
        visitation,
        holonomic_defects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::orbit::chaos_orbit;

    fn doubling_orbit(steps: usize) -> Orbit {
        let (sys, ws) = examples::doubling();
        chaos_orbit(&sys, &ws, &[0.3, 0.7], steps, 17, 100).unwrap()
    }

    #[test]
    fn constants_average_exactly() {
        let o = doubling_orbit(1000);
        for n in [1, 10, 1000] {
            assert_eq!(ergodic_average(&o, &|_| 7.0, n).unwrap(), 7.0);
            assert_eq!(extended_ergodic_average(&o, &|_| 1.0, n).unwrap(), 1.0);
            assert_eq!(holonomic_defect(&o, &|_| 3.0, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn sample_counts_are_checked() {
        let o = doubling_orbit(50);
        assert_eq!(o.post_points(), 52);
        assert!(ergodic_average(&o, &|x| x[0], 52).is_ok());
        assert!(ergodic_average(&o, &|x| x[0], 53).is_err());
        assert!(ergodic_average(&o, &|x| x[0], 0).is_err());
        assert!(holonomic_defect(&o, &|x| x[0], 50).is_ok());
        assert!(holonomic_defect(&o, &|x| x[0], 51).is_err());
    }

    #[test]
    fn averages_start_after_burn_in() {
        let o = doubling_orbit(10);
        let want = (100..105).map(|k| o.point(k)[0]).sum::<f64>() / 5.0;
        assert_eq!(ergodic_average(&o, &|x| x[0], 5).unwrap(), want);
    }

    #[test]
    fn visitation_of_whole_and_degenerate_boxes() {
        let o = doubling_orbit(1000);
        let whole = Region::from(&Bounds::unit(1));
        assert_eq!(visitation_frequency(&o, &whole, 1000).unwrap(), 1.0);
        let empty = Region::new(vec![0.6], vec![0.4]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(visitation_frequency(&o, &empty, 1000).unwrap(), 0.0);
        let plane = Region::from(&Bounds::unit(2));
        assert!(visitation_frequency(&o, &plane, 10).is_err());
    }

    #[test]
    fn defect_is_the_telescoped_difference() {
        let o = doubling_orbit(500);
        let g = |w: &[f64]| w[0] * w[1] - 0.3 * w[1];
        let n = 400;
        let direct = (g(o.window(100 + n)) - g(o.window(100))).abs() / n as f64;
        assert!((holonomic_defect(&o, &g, n).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn report_collects_everything() {
        let o = doubling_orbit(10_000);
        let id = |x: &[f64]| x[0];
        let xy = |w: &[f64]| w[0] * w[1];
        let spec = ReportSpec {
            point_observables: vec![("x".into(), &id)],
            window_observables: vec![("xy".into(), &xy)],
            regions: vec![("left".into(), Region::new(vec![0.0], vec![0.5]).unwrap())],
        };
        let r = ergodic_report(&o, &spec, 10_000).unwrap();
        assert_eq!(r.seed, 17);
        assert!((r.halfwidth - 0.03).abs() < 1e-15);
        assert!((r.averages["x"] - 0.5).abs() < r.halfwidth);
        assert!((r.window_averages["xy"] - 0.25).abs() < r.halfwidth);
        assert!((r.visitation["left"] - 0.5).abs() < r.halfwidth);
        assert!(r.holonomic_defects["xy"] <= 2.0 / 10_000.0);
    }
}
