//! The worked example systems, built in code.
//!
//! All live on `X = [0,1]` (the non-contractive one on `[-1,1]`) with degree 2.
//! Windows are oldest-first, so `φ(x, y)` receives `x = x_j`, `y = x_{j+1}`.

use crate::geometry::Bounds;
use crate::system::{GifsMap, GifsSystem};
use crate::weights::{AffineWeight, WeightSystem};

fn unit() -> Bounds {
    Bounds::unit(1)
}

/// `φ_j(x,y) = x/3 + (−1)^j y/4 + j/2`, uniform weights. `A(S) = [0,3/4]`
/// while the projection of `A(Ŝ)` is strictly smaller.
pub fn projection() -> (GifsSystem, WeightSystem) {
    let maps = vec![
        GifsMap::scalar(&[1.0 / 3.0, 0.25], 0.0).unwrap(),
        GifsMap::scalar(&[1.0 / 3.0, -0.25], 0.5).unwrap(),
    ];
    (
        GifsSystem::new(unit(), 2, maps).unwrap(),
        WeightSystem::uniform(2, 2),
    )
}

/// `φ_i(x,y) = x/2 + i/2`, `p_i = 1/2`: the doubling-map GIFS whose extended
/// Hutchinson measure is Lebesgue on `[0,1]²`.
pub fn doubling() -> (GifsSystem, WeightSystem) {
    let maps = vec![
        GifsMap::scalar(&[0.5, 0.0], 0.0).unwrap(),
        GifsMap::scalar(&[0.5, 0.0], 0.5).unwrap(),
    ];
    (
        GifsSystem::new(unit(), 2, maps).unwrap(),
        WeightSystem::uniform(2, 2),
    )
}

/// `φ_j(x,y) = x/4 + y/4 + j/2` with `p = (1/3, 2/3)`, the GIFS of
/// `x_{j+2} = x_{j+1}/4 + x_j/4 + a_j/2`.
pub fn fde() -> (GifsSystem, WeightSystem) {
    let maps = vec![
        GifsMap::scalar(&[0.25, 0.25], 0.0).unwrap(),
        GifsMap::scalar(&[0.25, 0.25], 0.5).unwrap(),
    ];
    (
        GifsSystem::new(unit(), 2, maps).unwrap(),
        WeightSystem::constant(vec![1.0 / 3.0, 2.0 / 3.0], 2, None).unwrap(),
    )
}

/// `x_{j+2} = x_{j+1} + a_j x_j`, `a_j ∈ {−1, 1}`: Lipschitz sum 2, no attractor.
pub fn non_contractive() -> (GifsSystem, WeightSystem) {
    let maps = vec![
        GifsMap::scalar(&[-1.0, 1.0], 0.0).unwrap(),
        GifsMap::scalar(&[1.0, 1.0], 0.0).unwrap(),
    ];
    (
        GifsSystem::new(Bounds::interval(-1.0, 1.0).unwrap(), 2, maps).unwrap(),
        WeightSystem::uniform(2, 2),
    )
}

/// A single constant map with value `c`.
pub fn constant(c: f64) -> (GifsSystem, WeightSystem) {
    (
        GifsSystem::new(unit(), 2, vec![GifsMap::constant(vec![c], 2).unwrap()]).unwrap(),
        WeightSystem::uniform(1, 2),
    )
}

/// Affine weights for two maps with Lipschitz vectors `(c, d) = (0.2, 0.2)`
/// and lower bound `0.3` on `[0,1]²`.
pub fn affine_weights() -> WeightSystem {
    WeightSystem::affine(
        vec![
            AffineWeight {
                offset: 0.5,
                gradient: vec![0.2, -0.2],
            },
            AffineWeight {
                offset: 0.5,
                gradient: vec![-0.2, 0.2],
            },
        ],
        2,
        1,
        0.3,
        None,
    )
    .unwrap()
}
