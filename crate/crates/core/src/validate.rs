//! Sampled checks of the contraction hypothesis on the maps and the
//! positivity/Lipschitz hypothesis on the weights.
//!
//! Sampling can refute a declared Lipschitz bound but never certify it, so
//! every report is labelled `"sampled"`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::defaults::{LIP_SLACK, SUM_TOL};
use crate::geometry::euclidean;
use crate::system::GifsSystem;
use crate::weights::WeightSystem;

/// Corner enumeration is skipped above this many window coordinates.
const MAX_CORNER_COORDS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Sampled stretch exceeds the declared per-argument bound.
    Lipschitz,
    /// `Σ_k lip[j][k] ≥ 1`.
    LipSum,
    /// Map image leaves the domain.
    Containment,
    WeightBelowDelta,
    WeightSum,
    WeightLipschitz,
    WeightLipSum,
    /// Weight system does not match the map system's shape.
    WeightShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
    /// Worst offending window (flat, oldest block first); empty when not sampled.
    pub point: Vec<f64>,
    /// Worst measured value: stretch ratio, weight value, sum, or excursion.
    pub value: f64,
    /// How many samples violated this check.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub e1_ok: bool,
    /// `None` when no weights were supplied.
    pub e2_ok: Option<bool>,
    pub containment_ok: bool,
    pub lambda: f64,
    pub samples: usize,
    pub seed: u64,
    pub certification: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// E1, containment, and E2 when weights were checked.
    pub fn ok(&self) -> bool {
        self.e1_ok && self.containment_ok && self.e2_ok.unwrap_or(true)
    }
}

#[derive(Default)]
struct Recorder {
    worst: BTreeMap<(ViolationKind, usize), Violation>,
}

impl Recorder {
    fn record(&mut self, kind: ViolationKind, index: usize, point: &[f64], value: f64) {
        let entry = self.worst.entry((kind, index)).or_insert_with(|| Violation {
            kind,
            index,
            point: point.to_vec(),
            value,
            count: 0,
        });
        entry.count += 1;
        if value > entry.value {
            entry.value = value;
            entry.point = point.to_vec();
        }
    }

    fn any(&self, pred: impl Fn(ViolationKind) -> bool) -> bool {
        self.worst.keys().any(|(k, _)| pred(*k))
    }
}

/// Sum of per-block distances weighted by `lip`.
fn lip_bound(lip: &[f64], u: &[f64], v: &[f64], d: usize) -> f64 {
    lip.iter()
        .zip(u.chunks(d).zip(v.chunks(d)))
        .map(|(c, (a, b))| c * euclidean(a, b))
        .sum()
}

fn outside_by(sys: &GifsSystem, p: &[f64]) -> f64 {
    let dom = sys.domain();
    p.iter()
        .enumerate()
        .map(|(k, x)| (dom.lo()[k] - x).max(x - dom.hi()[k]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks the declared Lipschitz data, image containment, and (when `ws` is
/// given) the weight hypothesis on `samples` seeded random window pairs.
/// Affine containment is additionally checked at every corner of `X^m`
/// when there are at most 2^12 of them.
pub fn validate_system(
    sys: &GifsSystem,
    ws: Option<&WeightSystem>,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    let samples = samples.max(1);
    let d = sys.dim();
    let wl = sys.window_len();
    let mut rec = Recorder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (j, map) in sys.maps().iter().enumerate() {
        let s = map.lip_sum();
        if !(s < 1.0) {
            rec.record(ViolationKind::LipSum, j, &[], s);
        }
    }

    let weights = ws.and_then(|w| {
        if w.len() != sys.len() || w.degree() != sys.degree() {
            rec.record(ViolationKind::WeightShape, 0, &[], w.len() as f64);
            None
        } else {
            Some(w)
        }
    });
    if let Some(w) = weights {
        for j in 0..w.len() {
            let s = w.lip_sum(j);
            if !(s < 1.0) {
                rec.record(ViolationKind::WeightLipSum, j, &[], s);
            }
        }
    }

    let mut u = vec![0.0; wl];
    let mut v = vec![0.0; wl];
    let mut fu = vec![0.0; d];
    let mut fv = vec![0.0; d];
    let n = sys.len();
    let mut pu = vec![0.0; n];
    let mut pv = vec![0.0; n];
    let domain = sys.domain().power(sys.degree());

    let check_image = |rec: &mut Recorder, j: usize, w: &[f64], img: &[f64]| {
        if !sys.domain().contains(img) {
            rec.record(ViolationKind::Containment, j, w, outside_by(sys, img));
        }
    };

    for _ in 0..samples {
        domain.sample_into(&mut rng, &mut u);
        domain.sample_into(&mut rng, &mut v);
        for (j, map) in sys.maps().iter().enumerate() {
            map.apply(&u, &mut fu);
            map.apply(&v, &mut fv);
            check_image(&mut rec, j, &u, &fu);
            check_image(&mut rec, j, &v, &fv);
            let dist = euclidean(&fu, &fv);
            let bound = lip_bound(map.lip(), &u, &v, d);
            if dist > bound + LIP_SLACK {
                let ratio = if bound > 0.0 { dist / bound } else { f64::INFINITY };
                rec.record(ViolationKind::Lipschitz, j, &u, ratio);
            }
        }
        if let Some(w) = weights {
            for (x, p) in [(&u, &mut pu), (&v, &mut pv)] {
                for (j, o) in p.iter_mut().enumerate() {
                    *o = w.raw(j, x);
                    if *o < w.delta() {
                        // record the shortfall so larger is worse
                        rec.record(ViolationKind::WeightBelowDelta, j, x, w.delta() - *o);
                    }
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > SUM_TOL {
                    rec.record(ViolationKind::WeightSum, 0, x, (sum - 1.0).abs());
                }
            }
            for j in 0..n {
                let diff = (pu[j] - pv[j]).abs();
                let bound = lip_bound(&w.lip()[j], &u, &v, d);
                if diff > bound + LIP_SLACK {
                    let ratio = if bound > 0.0 { diff / bound } else { f64::INFINITY };
                    rec.record(ViolationKind::WeightLipschitz, j, &u, ratio);
                }
            }
        }
    }

    if wl <= MAX_CORNER_COORDS {
        let lo = domain.lo();
        let hi = domain.hi();
        for mask in 0u32..(1 << wl) {
            for (k, c) in u.iter_mut().enumerate() {
                *c = if mask >> k & 1 == 1 { hi[k] } else { lo[k] };
            }
            for (j, map) in sys.maps().iter().enumerate() {
                if matches!(map.kind(), crate::system::MapKind::Affine { .. }) {
                    map.apply(&u, &mut fu);
                    check_image(&mut rec, j, &u, &fu);
                }
            }
        }
    }

    let e1_ok = !rec.any(|k| matches!(k, ViolationKind::Lipschitz | ViolationKind::LipSum));
    let containment_ok = !rec.any(|k| k == ViolationKind::Containment);
    let e2_ok = ws.map(|_| {
        !rec.any(|k| {
            matches!(
                k,
                ViolationKind::WeightBelowDelta
                    | ViolationKind::WeightSum
                    | ViolationKind::WeightLipschitz
                    | ViolationKind::WeightLipSum
                    | ViolationKind::WeightShape
            )
        })
    });

    ValidationReport {
        e1_ok,
        e2_ok,
        containment_ok,
        lambda: sys.lambda(),
        samples,
        seed,
        certification: "sampled".into(),
        violations: rec.worst.into_values().collect(),
    }
}
