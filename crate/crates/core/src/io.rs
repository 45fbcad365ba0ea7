//! Plain-text and image exports for orbits and measures.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::Bounds;
use crate::measure::DiscreteMeasure;
use crate::orbit::Orbit;

/// Greyscale PGM (P5) histogram of the windows `n ≥ from`, over the first two
/// window coordinates. Counts are log-scaled: the fullest pixel is black and
/// empty pixels are white. Row 0 is the top of the picture.
pub fn density_pgm(
    orbit: &Orbit,
    window_bounds: &Bounds,
    from: usize,
    width: usize,
    height: usize,
    comment: &str,
) -> Result<Vec<u8>> {
    if window_bounds.dim() != orbit.dim * orbit.degree || window_bounds.dim() < 2 {
        return Err(Error::invalid("density images need two window coordinates"));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("image size must be positive"));
    }
    let mut counts = vec![0u64; width * height];
    let pixel = |axis: usize, x: f64, n: usize| {
        let t = (x - window_bounds.lo()[axis]) / window_bounds.side(axis);
        ((t * n as f64).floor().max(0.0) as usize).min(n - 1)
    };
    for k in from..orbit.windows() {
        let w = orbit.window(k);
        let (px, py) = (pixel(0, w[0], width), pixel(1, w[1], height));
        counts[px + (height - 1 - py) * width] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let scale = (1.0 + max as f64).ln();
    let mut out = Vec::with_capacity(width * height + 64);
    out.extend_from_slice(b"P5\n");
    for line in comment.lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    out.extend_from_slice(format!("{width} {height}\n255\n").as_bytes());
    out.extend(counts.iter().map(|&c| {
        if c == 0 {
            255
        } else {
            (254.0 * (1.0 - (1.0 + c as f64).ln() / scale)).round() as u8
        }
    }));
    Ok(out)
}

/// `n,symbol,x0,…`; the symbol column is empty for the initial points.
pub fn orbit_csv(orbit: &Orbit) -> String {
    let mut s = String::from("n,symbol");
    for k in 0..orbit.dim {
        let _ = write!(s, ",x{k}");
    }
    s.push('\n');
    for n in 0..orbit.len() {
        let _ = write!(s, "{n},");
        if let Some(a) = orbit.symbol_of(n) {
            let _ = write!(s, "{a}");
        }
        for x in orbit.point(n) {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

/// `x0,…,weight`, one atom per row.
pub fn measure_csv(mu: &DiscreteMeasure) -> String {
    let mut s = String::new();
    for k in 0..mu.dim() {
        let _ = write!(s, "x{k},");
    }
    s.push_str("weight\n");
    for (i, w) in mu.weights().iter().enumerate() {
        for x in mu.point(i) {
            let _ = write!(s, "{x},");
        }
        let _ = writeln!(s, "{w}");
    }
    s
}
