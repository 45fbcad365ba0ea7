use gifs_core::measure::markov_step;
use gifs_core::{
    build_extension, chaos_orbit, examples, extended_markov_step, hausdorff_distance, holonomic_defect, Bounds,
    DiscreteMeasure, GifsMap, GifsSystem, GridSet, PruneRule, WeightSystem,
};
use proptest::prelude::*;

fn grid_from(bits: &[bool]) -> GridSet {
    let mut g = GridSet::new(Bounds::unit(2), 1.0 / 8.0, 1).unwrap();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            g.insert_cell(i);
        }
    }
    g
}

fn nonempty_cells() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 64).prop_filter("nonempty", |v| v.iter().any(|&b| b))
}

fn measure_on_line() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((0.0..=1.0f64, 0.05..1.0f64), 1..12).prop_map(|atoms| {
        let s: f64 = atoms.iter().map(|a| a.1).sum();
        let points = atoms.iter().map(|a| a.0).collect();
        let weights = atoms.iter().map(|a| a.1 / s).collect();
        DiscreteMeasure::new(Bounds::unit(1), 1, points, weights).unwrap()
    })
}

/// Two affine maps `c0·x + c1·y + t` on `[0,1]` with `|c0| + |c1| < 1`,
/// shifted so the images stay inside.
fn contractive_system() -> impl Strategy<Value = GifsSystem> {
    prop::collection::vec((-0.45..0.45f64, -0.45..0.45f64, 0.0..1.0f64), 2).prop_map(|maps| {
        let maps = maps
            .into_iter()
            .map(|(a, b, t)| {
                let lo = a.min(0.0) + b.min(0.0);
                let hi = a.max(0.0) + b.max(0.0);
                let offset = -lo + t * (1.0 - (hi - lo));
                GifsMap::scalar(&[a, b], offset).unwrap()
            })
            .collect();
        GifsSystem::new(Bounds::unit(1), 2, maps).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_metric(a in nonempty_cells(), b in nonempty_cells(), c in nonempty_cells()) {
        let (a, b, c) = (grid_from(&a), grid_from(&b), grid_from(&c));
        let d = |x: &GridSet, y: &GridSet| hausdorff_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn markov_step_keeps_mass_and_support(sys in contractive_system(), mu in measure_on_line(), nu in measure_on_line(), p in 0.1..0.9f64) {
        let ws = WeightSystem::constant(vec![p, 1.0 - p], 2, None).unwrap();
        let out = markov_step(&sys, &ws, &[mu.clone(), nu.clone()]).unwrap();
        prop_assert!((out.mass() - 1.0).abs() < 1e-9);
        prop_assert!(out.len() <= 2 * mu.len() * nu.len());
        for i in 0..out.len() {
            prop_assert!(sys.domain().contains(out.point(i)));
        }
        let pruned = out.prune(PruneRule::Grid { eps: 1.0 / 32.0 }).unwrap();
        prop_assert!((pruned.mass() - 1.0).abs() < 1e-9);
        prop_assert!(pruned.len() <= 32);
    }

    #[test]
    fn extended_step_keeps_mass(sys in contractive_system(), mu in measure_on_line(), nu in measure_on_line()) {
        let ext = build_extension(&sys).unwrap();
        let ws = WeightSystem::uniform(2, 2);
        let alpha = DiscreteMeasure::product(&[mu, nu]).unwrap();
        let out = extended_markov_step(&ext, &ws, &alpha).unwrap();
        prop_assert!((out.mass() - 1.0).abs() < 1e-9);
        // the old newest block becomes the oldest one
        let shifted = out.marginal(0).unwrap().prune(PruneRule::Grid { eps: 1e-9 }).unwrap();
        let before = alpha.marginal(1).unwrap().prune(PruneRule::Grid { eps: 1e-9 }).unwrap();
        prop_assert!((shifted.integrate(|x| x[0]) - before.integrate(|x| x[0])).abs() < 1e-9);
    }

    #[test]
    fn holonomic_defect_is_telescoped(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, n in 1usize..2000) {
        let (sys, ws) = examples::fde();
        let orbit = chaos_orbit(&sys, &ws, &[0.5, 0.5], n + 1, seed, 0).unwrap();
        let g = |w: &[f64]| a * w[0] + b * w[1] * w[1] + c;
        let sup = 3.0 * (a.abs() + b.abs() + c.abs());
        prop_assert!(holonomic_defect(&orbit, &g, n).unwrap() <= 2.0 * sup / n as f64);
    }
}
