//! Observables and regions given on the command line.
//!
//! An observable is a product of factors separated by `*`, each either a
//! number or a coordinate `x<k>`: `x0`, `x0*x1`, `0.5*x1*x1`, `7`.
//! A region is `lo0,lo1,…:hi0,hi1,…`, optionally prefixed by `name=`.

use gifs_core::ergodic::Region;

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub name: String,
    pub coeff: f64,
    pub coords: Vec<usize>,
}

impl Monomial {
    pub fn parse(text: &str, dim: usize) -> Result<Self, String> {
        let mut coeff = 1.0;
        let mut coords = Vec::new();
        for factor in text.split('*').map(str::trim) {
            if let Some(k) = factor.strip_prefix('x') {
                let k: usize = k
                    .parse()
                    .map_err(|_| format!("bad coordinate `{factor}` in `{text}`"))?;
                if k >= dim {
                    return Err(format!("`{factor}` out of range for {dim} coordinates"));
                }
                coords.push(k);
            } else {
                let c: f64 = factor
                    .parse()
                    .map_err(|_| format!("bad factor `{factor}` in `{text}`"))?;
                if !c.is_finite() {
                    return Err(format!("non-finite factor in `{text}`"));
                }
                coeff *= c;
            }
        }
        Ok(Monomial {
            name: text.to_string(),
            coeff,
            coords,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coords.iter().fold(self.coeff, |acc, &k| acc * x[k])
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}`")))
        .collect()
}

pub fn parse_region(text: &str, dim: usize) -> Result<(String, Region), String> {
    let (name, body) = match text.split_once('=') {
        Some((n, b)) => (n.to_string(), b),
        None => (text.to_string(), text),
    };
    let (lo, hi) = body
        .split_once(':')
        .ok_or_else(|| format!("region `{text}` needs the form lo:hi"))?;
    let region = Region::new(parse_list(lo)?, parse_list(hi)?).map_err(|e| e.to_string())?;
    if region.dim() != dim {
        return Err(format!("region `{text}` has {} coordinates, points have {dim}", region.dim()));
    }
    Ok((name, region))
}

pub fn parse_point(text: &str, len: usize) -> Result<Vec<f64>, String> {
    let v = parse_list(text)?;
    if v.len() != len {
        return Err(format!("expected {len} numbers, got {}", v.len()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials() {
        let m = Monomial::parse("0.5*x1*x1", 2).unwrap();
        assert_eq!(m.eval(&[3.0, 2.0]), 2.0);
        assert_eq!(Monomial::parse("7", 1).unwrap().eval(&[0.1]), 7.0);
        assert!(Monomial::parse("x2", 2).is_err());
        assert!(Monomial::parse("y0", 2).is_err());
        assert!(Monomial::parse("inf", 2).is_err());
    }

    #[test]
    fn regions() {
        let (n, r) = parse_region("left=0:0.5", 1).unwrap();
        assert_eq!(n, "left");
        assert!(r.contains(&[0.5]) && !r.contains(&[0.6]));
        let (n, _) = parse_region("0,0:1,1", 2).unwrap();
        assert_eq!(n, "0,0:1,1");
        assert!(parse_region("0:1", 2).is_err());
        assert!(parse_region("0;1", 1).is_err());
    }
}
