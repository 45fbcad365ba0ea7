//! One check per acceptance criterion. Each prints a single
//! `acceptance N: PASS|FAIL ...` line to the real stdout, then asserts.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gifs_core::defaults::{BURN_IN, SEED};
use gifs_core::extension::{power_weight_modulus, sampled_word_lipschitz};
use gifs_core::fde::{x0_coefficient, CoefficientOracle};
use gifs_core::grid::project_set;
use gifs_core::transport::{min_cost_flow, quantile_coupling};
use gifs_core::weights::AffineWeight;
use gifs_core::{
    build_extension, chaos_orbit, closed_form_orbit, coefficients, ergodic_average, examples,
    extended_ergodic_average, hausdorff_distance, holonomic_defect, iterate_attractor, iterate_extended_measure,
    orbit_closure, power_system, visitation_frequency, wasserstein, Bounds, DiscreteMeasure, GridSet, PruneRule,
    Region, WeightSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    writeln!(std::io::stdout().lock(), "acceptance {n}: {verdict} {detail}").unwrap();
    assert!(ok, "acceptance {n}: {detail}");
}

fn three_quarters(eps: f64) -> GridSet {
    let unit = Bounds::unit(1);
    GridSet::cover_region(unit, eps, 1, &Bounds::interval(0.0, 0.75).unwrap()).unwrap()
}

#[test]
fn projection_example_attractor_is_the_interval() {
    let eps = 1.0 / 512.0;
    let start = Instant::now();
    let (sys, _) = examples::projection();
    let seeds = vec![GridSet::full(Bounds::unit(1), eps, 1).unwrap(); 2];
    let run = iterate_attractor(&sys, &seeds, eps, 500).unwrap();
    let h = hausdorff_distance(&run.attractor, &three_quarters(eps)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        h <= 2.0 * eps && secs < 60.0,
        format!(
            "hausdorff {h:.6} <= {:.6}, {} cells, {} steps, {secs:.2}s < 60s",
            2.0 * eps,
            run.attractor.count(),
            run.trace.iterations.len()
        ),
    );
}

#[test]
fn chaos_projection_is_strictly_inside_the_interval() {
    let eps = 1.0 / 64.0;
    let (sys, ws) = examples::projection();
    let orbit = chaos_orbit(&sys, &ws, &[0.5, 0.5], 100_000, SEED, BURN_IN).unwrap();
    let cover = orbit_closure(&orbit, &sys, eps, BURN_IN + 1, usize::MAX).unwrap();
    let proj = project_set(&cover, 0).unwrap();
    let target = three_quarters(eps);
    let inside = proj.is_subset_of(&target);
    let uncovered = target.count() - target.cells().filter(|&c| proj.contains_cell(c)).count();
    report(
        2,
        inside && uncovered >= 1,
        format!(
            "projection {} cells inside [0,3/4]: {inside}, {uncovered} of {} cells uncovered",
            proj.count(),
            target.count()
        ),
    );
}

#[test]
fn doubling_chaos_fills_the_square_with_lebesgue_averages() {
    let start = Instant::now();
    let (sys, ws) = examples::doubling();
    let short = chaos_orbit(&sys, &ws, &[0.5, 0.5], 40_000, SEED, BURN_IN).unwrap();
    let cover = orbit_closure(&short, &sys, 1.0 / 64.0, BURN_IN + 1, usize::MAX).unwrap();
    let n = 1_000_000;
    let long = chaos_orbit(&sys, &ws, &[0.5, 0.5], n, SEED, BURN_IN).unwrap();
    let fx = ergodic_average(&long, &|p| p[0], n).unwrap();
    let gxy = extended_ergodic_average(&long, &|w| w[0] * w[1], n).unwrap();
    let left = Region::new(vec![0.0], vec![0.5]).unwrap();
    let visit = visitation_frequency(&long, &left, n).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = cover.count() == cover.total_cells()
        && (fx - 0.5).abs() <= 0.01
        && (gxy - 0.25).abs() <= 0.01
        && (visit - 0.5).abs() <= 0.01
        && secs < 30.0;
    report(
        3,
        ok,
        format!(
            "cover {}/{}, E[x] {fx:.5}, E[xy] {gxy:.5}, visit [0,1/2] {visit:.5} (±0.01), {secs:.2}s < 30s",
            cover.count(),
            cover.total_cells()
        ),
    );
}

#[test]
fn fde_coefficients_and_closed_form() {
    let b: Vec<String> = coefficients(9).iter().map(|x| x.to_string()).collect();
    let exact = b == ["1", "1", "5", "9", "29", "65", "181", "441", "1165"];
    let oracle = CoefficientOracle::default();
    let roots_agree = (0..9).all(|k| (oracle.closed_form(k) - b[k as usize].parse::<f64>().unwrap()).abs() < 1e-9);

    let (sys, _) = examples::fde();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut xs = vec![rng.gen::<f64>(), rng.gen::<f64>()];
        let controls: Vec<usize> = (0..19).map(|_| rng.gen_range(0..2)).collect();
        for (j, &a) in controls.iter().enumerate() {
            let next = sys.eval_map(a, &xs[j..j + 2]).unwrap()[0];
            xs.push(next);
        }
        let a: Vec<f64> = controls.iter().map(|&c| c as f64).collect();
        for n in 0..=18 {
            let c = closed_form_orbit(xs[0], xs[1], &a, n).unwrap();
            worst = worst.max((c - xs[n + 2]).abs());
        }
    }

    // coefficient of x_0 in x_20, read off the orbit with x_0 = 1, x_1 = 0, a = 0
    let mut xs = vec![1.0, 0.0];
    for j in 0..19 {
        let next = sys.eval_map(0, &xs[j..j + 2]).unwrap()[0];
        xs.push(next);
    }
    let c20 = xs[20];
    let coeff_ok = c20 < 1e-3 && (x0_coefficient(18) - c20).abs() < 1e-15;
    report(
        4,
        exact && roots_agree && worst < 1e-10 && coeff_ok,
        format!("coefficients {b:?}, closed form max |Δ| {worst:.2e} < 1e-10, x_0 coefficient at n=20 {c20:.3e} < 1e-3"),
    );
}

#[test]
fn extension_words_contract_by_lambda() {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, (sys, _)) in [
        ("projection", examples::projection()),
        ("doubling", examples::doubling()),
        ("fde", examples::fde()),
    ] {
        let ext = build_extension(&sys).unwrap();
        let lambda = sys.maps().iter().map(|m| m.lip_sum()).fold(0.0, f64::max);
        let ps = power_system(&ext, None, sys.degree()).unwrap();
        let measured = sampled_word_lipschitz(&ps, 10_000, SEED);
        ok &= measured <= lambda + 1e-9;
        lines.push(format!("{name} {measured:.6} <= {lambda:.6}"));
    }
    report(5, ok, lines.join(", "));
}

/// Two affine weights `p_0 = 1/2 + c(x − 1/2) + d(y − 1/2)`, `p_1 = 1 − p_0`.
fn affine_pair(c: f64, d: f64) -> WeightSystem {
    let half = 0.5 * (1.0 - c.abs() - d.abs());
    let p0 = AffineWeight {
        offset: 0.5 - 0.5 * (c + d),
        gradient: vec![c, d],
    };
    let p1 = AffineWeight {
        offset: 0.5 + 0.5 * (c + d),
        gradient: vec![-c, -d],
    };
    WeightSystem::affine(vec![p0, p1], 2, 1, half.max(1e-6), None).unwrap()
}

#[test]
fn second_power_weights_have_modulus_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases = vec![examples::affine_weights()];
    for _ in 0..20 {
        let c = rng.gen_range(-0.95..0.95f64);
        let room = 0.95 - c.abs();
        cases.push(affine_pair(c, rng.gen_range(-room..room)));
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (sys, _) in [examples::projection(), examples::doubling(), examples::fde()] {
        let ext = build_extension(&sys).unwrap();
        for ws in &cases {
            let ps = power_system(&ext, Some(ws), 2).unwrap();
            worst = worst.max(power_weight_modulus(&ps, 2_000, SEED));
            count += 1;
        }
    }
    report(
        6,
        worst <= 2.0 + 1e-9,
        format!("largest modulus {worst:.6} <= 2 over {count} weight systems"),
    );
}

#[test]
fn doubling_measure_fixed_point() {
    let (sys, ws) = examples::doubling();
    let ext = build_extension(&sys).unwrap();
    let run = |p: [f64; 2]| {
        let seed = DiscreteMeasure::dirac(Bounds::unit(2), 1, p.to_vec()).unwrap();
        iterate_extended_measure(&ext, &ws, &seed, 1e-3, 500, PruneRule::Grid { eps: 1.0 / 16.0 }).unwrap()
    };
    let a = run([0.5, 0.5]);
    let b = run([0.0, 1.0]);
    let gap = *a.gaps.last().unwrap();
    let mean = a.measure.mean();
    let exy = a.measure.integrate(|w| w[0] * w[1]);
    let moments_ok = (mean[0] - 0.5).abs() <= 5e-3 && (mean[1] - 0.5).abs() <= 5e-3 && (exy - 0.25).abs() <= 5e-3;
    let mut defect: f64 = 0.0;
    for r in [&a, &b] {
        let m0 = r.measure.marginal(0).unwrap();
        let m1 = r.measure.marginal(1).unwrap();
        defect = defect.max(wasserstein(&m0, &m1).unwrap().distance);
    }
    let agree = wasserstein(&a.measure, &b.measure).unwrap().distance;
    report(
        7,
        gap <= 1e-3 && moments_ok && defect <= 2e-3 && agree <= 3e-3,
        format!(
            "gap {gap:.2e} after {} steps, moments ({:.4}, {:.4}, {exy:.4}), marginal defect {defect:.2e}, seeds agree {agree:.2e}",
            a.steps(),
            mean[0],
            mean[1]
        ),
    );
}

#[test]
fn transport_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut flow_err: f64 = 0.0;
    for case in 0..100 {
        let (dim, block) = [(2, 1), (2, 2), (3, 1), (1, 1)][case % 4];
        let (a, b) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mu = common::random_measure(&mut rng, dim, block, a);
        let nu = common::random_measure(&mut rng, dim, block, b);
        let flow = min_cost_flow(&mu, &nu, 64).unwrap().distance;
        flow_err = flow_err.max((flow - common::brute_force_w1(&mu, &nu)).abs());
    }
    let mut line_err: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(1..=30), rng.gen_range(1..=30));
        let mu = common::random_measure(&mut rng, 1, 1, a);
        let nu = common::random_measure(&mut rng, 1, 1, b);
        let q = quantile_coupling(&mu, &nu).unwrap().distance;
        let f = min_cost_flow(&mu, &nu, 64).unwrap().distance;
        line_err = line_err.max((q - f).abs());
    }
    report(
        8,
        flow_err <= 1e-9 && line_err <= 1e-9,
        format!("flow vs enumeration {flow_err:.2e}, quantile vs flow {line_err:.2e} (<= 1e-9)"),
    );
}

#[test]
fn holonomic_defect_telescopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (sys, ws) = examples::fde();
    let orbit = chaos_orbit(&sys, &ws, &[0.5, 0.5], 10_001, SEED, BURN_IN).unwrap();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..50 {
        let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
        let g = move |w: &[f64]| c[0] + c[1] * w[0] + c[2] * w[1] + c[3] * w[0] * w[1] + c[4] * (7.0 * w[1]).sin();
        // sup over the whole window space [0,1]²
        let sup = c.iter().map(|x| x.abs()).sum::<f64>();
        for n in [1, 10, 10_000] {
            let d = holonomic_defect(&orbit, &g, n).unwrap();
            let bound = 2.0 * sup / n as f64;
            ok &= d <= bound;
            worst_ratio = worst_ratio.max(d / bound);
        }
    }
    report(
        9,
        ok,
        format!("50 observables, N in {{1, 10, 10^4}}, largest defect / (2 sup|g| / N) = {worst_ratio:.4}"),
    );
}

fn systems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("systems")
}

fn snapshot(args: &[String]) -> (Vec<u8>, Vec<(String, Vec<u8>)>) {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gifs"))
        .args(args)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    (out.stdout, files)
}

#[test]
fn cli_runs_are_byte_identical() {
    let sys = |name: &str| systems().join(name).to_str().unwrap().to_string();
    let runs: Vec<Vec<String>> = [
        vec!["validate", "--system", &sys("fde.json")],
        vec!["attract", "--system", &sys("projection.json"), "--eps", "1/128"],
        vec!["chaos", "--system", &sys("doubling.json"), "--steps", "20000"],
        vec!["ergodic", "--system", &sys("fde.json"), "--steps", "20000", "--region", "0:0.5"],
        vec!["measure", "--system", &sys("doubling.json")],
        vec!["fde", "--system", &sys("fde_worked.json")],
    ]
    .iter()
    .map(|a| a.iter().map(|s| s.to_string()).collect())
    .collect();
    let mut files = 0;
    let mut differing = Vec::new();
    for args in &runs {
        let first = snapshot(args);
        let second = snapshot(args);
        files += first.1.len();
        if first != second {
            differing.push(args[0].clone());
        }
    }
    report(
        10,
        differing.is_empty(),
        format!("{} commands, {files} output files compared, differing: {differing:?}", runs.len()),
    );
}
