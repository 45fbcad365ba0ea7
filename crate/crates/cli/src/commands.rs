use std::fs;
use std::path::PathBuf;

use gifs_core::defaults::TRANSPORT_CAP;
use gifs_core::ergodic::{ergodic_report, ReportSpec};
use gifs_core::extension::ExtendedIfs;
use gifs_core::grid::{project_set, to_csv, to_pbm};
use gifs_core::io::{density_pgm, measure_csv, orbit_csv};
use gifs_core::measure::MeasureRun;
use gifs_core::sets::ConvergenceTrace;
use gifs_core::{
    chaos_orbit, coefficients, closed_form_orbit, compile_fde, hausdorff_distance, iterate_attractor,
    iterate_extended_attractor, iterate_extended_measure, iterate_fde, iterate_measure, load_system,
    orbit_closure, validate_system, wasserstein, DiscreteMeasure, Error, GridSet, LinearOrder2, LoadedSystem,
    PruneRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::expr::{parse_point, parse_region, Monomial};
use crate::{
    AttractArgs, ChaosArgs, Common, ErgodicArgs, FdeArgs, Format, MeasureArgs, Mode, OrbitArgs, Start, ValidateArgs,
};

#[derive(Debug)]
pub enum Failure {
    Hypothesis(String),
    Input(String),
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Hypothesis(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Hypothesis(m) | Failure::Input(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::E1Violation { .. }
            | Error::WeightBelowDelta { .. }
            | Error::SumNotOne { .. }
            | Error::NotEventuallyContractive { .. } => Failure::Hypothesis(msg),
            Error::Schema(_) | Error::Io(_) | Error::Invalid(_) | Error::Mismatch | Error::IndexOutOfRange { .. } => {
                Failure::Input(msg)
            }
            Error::NoConvergence { .. }
            | Error::PointOutsideDomain { .. }
            | Error::EmptySet
            | Error::CellBudgetExceeded { .. }
            | Error::AtomBudgetExceeded { .. }
            | Error::SupportTooLarge { .. }
            | Error::WordSpaceTooLarge { .. } => Failure::Numeric(msg),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl Output {
    fn new(c: &Common) -> Result<Self, Failure> {
        fs::create_dir_all(&c.out).map_err(|e| Failure::Input(format!("{}: {e}", c.out.display())))?;
        Ok(Output {
            dir: c.out.clone(),
            formats: c.format.clone(),
        })
    }

    fn write(&self, format: Format, name: &str, bytes: &[u8]) -> Outcome {
        if !self.formats.contains(&format) {
            return Ok(());
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    /// Writes `name` when JSON is selected and always prints it.
    fn report(&self, name: &str, v: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(v).expect("reports serialize") + "\n";
        print!("{text}");
        self.write(Format::Json, name, text.as_bytes())
    }

    /// PBM when the set has at most two coordinates.
    fn bitmap(&self, name: &str, set: &GridSet, comment: &str) -> Outcome {
        if set.dim() <= 2 {
            self.write(Format::Pgm, name, &to_pbm(set, comment)?)?;
        }
        Ok(())
    }
}

fn load(c: &Common) -> Result<LoadedSystem, Failure> {
    Ok(load_system(&c.system)?)
}

fn label(l: &LoadedSystem) -> String {
    l.name.clone().unwrap_or_else(|| "unnamed".into())
}

pub fn validate(a: &ValidateArgs) -> Outcome {
    let l = load(&a.common)?;
    let out = Output::new(&a.common)?;
    let report = validate_system(&l.system, Some(&l.weights), a.samples, a.common.seed);
    let mut v = serde_json::to_value(&report).expect("serializable");
    v["system"] = json!(label(&l));
    out.report("validation.json", &v)?;
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!(
            "hypotheses fail for `{}` (lambda {})",
            label(&l),
            report.lambda
        )))
    }
}

fn trace_json(t: &ConvergenceTrace) -> Value {
    serde_json::to_value(t).expect("serializable")
}

pub fn attract(a: &AttractArgs) -> Outcome {
    let l = load(&a.common)?;
    let sys = &l.system;
    let out = Output::new(&a.common)?;
    let (eps, tol) = (a.eps, a.tol.unwrap_or(a.eps));
    let (m, d) = (sys.degree(), sys.dim());
    let note = format!("gifs attract {} eps={eps} tol={tol}", label(&l));
    let mut report = json!({"system": label(&l), "eps": eps, "tol": tol});
    let mut base = None;

    if a.mode != Mode::Extended {
        let seeds = vec![GridSet::full(sys.domain().clone(), eps, d)?; m];
        let run = iterate_attractor(sys, &seeds, tol, a.max_iter)?;
        out.bitmap("attractor.pbm", &run.attractor, &note)?;
        out.write(Format::Csv, "attractor.csv", to_csv(&run.attractor).as_bytes())?;
        report["base"] = json!({
            "cells": run.attractor.count(),
            "steps": run.trace.iterations.len(),
            "trace": trace_json(&run.trace),
        });
        base = Some(run.attractor);
    }

    if a.mode != Mode::Base {
        let ext = ExtendedIfs::new_unchecked(sys);
        let seed = GridSet::full(ext.domain().clone(), eps, d)?;
        let run = iterate_extended_attractor(&ext, &seed, tol, a.max_iter)?;
        let proj = project_set(&run.attractor, 0)?;
        out.bitmap("extended.pbm", &run.attractor, &note)?;
        out.bitmap("projection.pbm", &proj, &note)?;
        out.write(Format::Csv, "extended.csv", to_csv(&run.attractor).as_bytes())?;
        out.write(Format::Csv, "projection.csv", to_csv(&proj).as_bytes())?;
        report["extended"] = json!({
            "cells": run.attractor.count(),
            "projection_cells": proj.count(),
            "steps": run.trace.iterations.len(),
            "trace": trace_json(&run.trace),
        });
        if let Some(b) = &base {
            report["projection_inside_base"] = json!(proj.is_subset_of(b));
            report["projection_to_base_hausdorff"] = json!(hausdorff_distance(&proj, b)?);
        }
    }
    out.report("trace.json", &report)
}

fn initial_window(o: &OrbitArgs, l: &LoadedSystem) -> Result<Vec<f64>, Failure> {
    let sys = &l.system;
    match &o.init {
        Some(s) => parse_point(s, sys.window_len()).map_err(Failure::Input),
        None => Ok(sys.domain().center().repeat(sys.degree())),
    }
}

pub fn chaos(a: &ChaosArgs) -> Outcome {
    let l = load(&a.common)?;
    let sys = &l.system;
    let out = Output::new(&a.common)?;
    let init = initial_window(&a.orbit, &l)?;
    let (seed, n, burn_in) = (a.common.seed, a.orbit.steps, a.orbit.burn_in);
    let orbit = chaos_orbit(sys, &l.weights, &init, n, seed, burn_in)?;
    // windows produced by the post-burn-in steps
    let from = burn_in + 1;
    let cover = orbit_closure(&orbit, sys, a.eps, from, usize::MAX)?;
    let proj = project_set(&cover, 0)?;
    let note = format!("gifs chaos {} seed={seed} N={n} burn_in={burn_in} eps={}", label(&l), a.eps);

    if out.formats.contains(&Format::Pgm) {
        let shape = cover.shape();
        let img = density_pgm(&orbit, cover.bounds(), from, shape[0], shape[1], &note)?;
        out.write(Format::Pgm, "density.pgm", &img)?;
    }
    out.bitmap("cover.pbm", &cover, &note)?;
    out.bitmap("projection.pbm", &proj, &note)?;
    out.write(Format::Csv, "orbit.csv", orbit_csv(&orbit).as_bytes())?;
    out.report(
        "chaos.json",
        &json!({
            "system": label(&l),
            "seed": seed,
            "N": n,
            "burn_in": burn_in,
            "eps": a.eps,
            "cover_cells": cover.count(),
            "cover_total": cover.total_cells(),
            "projection_cells": proj.count(),
            "projection_total": proj.total_cells(),
        }),
    )
}

pub fn ergodic(a: &ErgodicArgs) -> Outcome {
    let l = load(&a.common)?;
    let sys = &l.system;
    let out = Output::new(&a.common)?;
    let (d, wl) = (sys.dim(), sys.window_len());
    let init = initial_window(&a.orbit, &l)?;

    let point_names: Vec<String> = if a.observable.is_empty() {
        (0..d).map(|k| format!("x{k}")).collect()
    } else {
        a.observable.clone()
    };
    let window_names: Vec<String> = if a.window_observable.is_empty() {
        (0..wl)
            .flat_map(|k| (k..wl).map(move |j| format!("x{k}*x{j}")))
            .collect()
    } else {
        a.window_observable.clone()
    };
    let parse = |names: &[String], dim: usize| -> Result<Vec<Monomial>, Failure> {
        names
            .iter()
            .map(|s| Monomial::parse(s, dim).map_err(Failure::Input))
            .collect()
    };
    let points = parse(&point_names, d)?;
    let windows = parse(&window_names, wl)?;
    let regions = a
        .region
        .iter()
        .map(|r| parse_region(r, d).map_err(Failure::Input))
        .collect::<Result<Vec<_>, _>>()?;

    let orbit = chaos_orbit(sys, &l.weights, &init, a.orbit.steps, a.common.seed, a.orbit.burn_in)?;
    let point_fns: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> =
        points.iter().map(|m| Box::new(move |x: &[f64]| m.eval(x)) as _).collect();
    let window_fns: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> =
        windows.iter().map(|m| Box::new(move |x: &[f64]| m.eval(x)) as _).collect();
    let spec = ReportSpec {
        point_observables: points.iter().zip(&point_fns).map(|(m, f)| (m.name.clone(), &**f)).collect(),
        window_observables: windows.iter().zip(&window_fns).map(|(m, f)| (m.name.clone(), &**f)).collect(),
        regions,
    };
    let report = ergodic_report(&orbit, &spec, a.orbit.steps)?;
    let mut v = serde_json::to_value(&report).expect("serializable");
    v["system"] = json!(label(&l));
    out.report("ergodic.json", &v)
}

/// Pruning grid for measures on `dim` coordinates: `eps` on a line, and
/// otherwise the finest dyadic subdivision of the longest side that keeps
/// at most half the transport cap of cells.
fn prune_eps(side: f64, dim: usize, eps: f64) -> f64 {
    if dim == 1 {
        return eps;
    }
    let mut k = 1usize;
    while (2 * k).checked_pow(dim as u32).is_some_and(|c| c <= TRANSPORT_CAP / 2) {
        k *= 2;
    }
    eps.max(side / k as f64)
}

pub fn measure(a: &MeasureArgs) -> Outcome {
    let l = load(&a.common)?;
    let sys = &l.system;
    let out = Output::new(&a.common)?;
    let (m, d) = (sys.degree(), sys.dim());
    let dom = sys.domain();
    let corner = match a.start {
        Start::Center => dom.center(),
        Start::Lo => dom.lo().to_vec(),
        Start::Hi => dom.hi().to_vec(),
    };
    let side = (0..d).map(|k| dom.side(k)).fold(0.0, f64::max);
    let mut report = json!({"system": label(&l), "tol": a.tol, "start": format!("{:?}", a.start).to_lowercase()});

    let run: MeasureRun = match a.mode {
        Mode::Base => {
            let pe = prune_eps(side, d, a.eps);
            report["mode"] = json!("base");
            report["prune_eps"] = json!(pe);
            let seeds = vec![DiscreteMeasure::dirac(dom.clone(), d, corner)?; m];
            iterate_measure(sys, &l.weights, &seeds, a.tol, a.max_iter, PruneRule::Grid { eps: pe })?
        }
        Mode::Extended | Mode::Both => {
            let pe = prune_eps(side, m * d, a.eps);
            report["mode"] = json!("extended");
            report["prune_eps"] = json!(pe);
            let ext = ExtendedIfs::new_unchecked(sys);
            let seed = DiscreteMeasure::dirac(ext.domain().clone(), d, corner.repeat(m))?;
            let run = iterate_extended_measure(&ext, &l.weights, &seed, a.tol, a.max_iter, PruneRule::Grid { eps: pe })?;
            let first = run.measure.marginal(0)?;
            let mut defect = 0.0f64;
            for k in 1..m {
                defect = defect.max(wasserstein(&first, &run.measure.marginal(k)?)?.distance);
            }
            report["marginal_defect"] = json!(defect);
            run
        }
    };
    report["steps"] = json!(run.steps());
    report["gaps"] = json!(run.gaps);
    report["atoms"] = json!(run.measure.len());
    report["moments"] = json!(run.measure.moments());
    out.write(Format::Csv, "measure.csv", measure_csv(&run.measure).as_bytes())?;
    out.report("measure.json", &report)
}

pub fn fde(a: &FdeArgs) -> Outcome {
    let l = load(&a.common)?;
    let file = l
        .fde
        .as_ref()
        .ok_or_else(|| Failure::Input(format!("{} is not a difference-equation file", a.common.system.display())))?;
    let out = Output::new(&a.common)?;
    let spec = file.spec();
    let compiled = compile_fde(&spec)?;
    let sys = &compiled.system;
    let validation = validate_system(sys, Some(&l.weights), 10_000, a.common.seed);
    let mut report = json!({
        "system": label(&l),
        "order": spec.order,
        "lambda": sys.lambda(),
        "e1_ok": validation.e1_ok,
        "lip_certified": compiled.lip_certified(),
        "validation": validation,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let pick = |rng: &mut ChaCha8Rng| spec.alphabet[rng.gen_range(0..spec.alphabet.len())];
    let (lo, hi) = (spec.domain.lo()[0], spec.domain.hi()[0]);

    let init = match &a.init {
        Some(s) => parse_point(s, spec.order).map_err(Failure::Input)?,
        None => spec.domain.center().repeat(spec.order),
    };
    let controls: Vec<f64> = (0..a.steps).map(|_| pick(&mut rng)).collect();
    report["orbit"] = json!({"controls": controls, "values": iterate_fde(&spec, &init, &controls)?});

    if let Some(eq) = LinearOrder2::from_spec(&spec) {
        report["series"] = json!(eq.series(a.terms));
        let worked = eq.alpha == 0.25 && eq.beta == 0.25 && eq.gamma == 0.5 && eq.kappa == 0.0;
        if worked {
            let b: Vec<String> = coefficients(a.terms).iter().map(|c| c.to_string()).collect();
            report["coefficients"] = json!(b);
        }
        let c = eq.series(a.steps + 1);
        report["x0_coefficient"] = json!(eq.beta * c[a.steps]);
        let mut worst = 0.0f64;
        for _ in 0..a.samples {
            let x0 = rng.gen_range(lo..=hi);
            let x1 = rng.gen_range(lo..=hi);
            let controls: Vec<f64> = (0..a.steps).map(|_| pick(&mut rng)).collect();
            let xs = iterate_fde(&spec, &[x0, x1], &controls)?;
            for n in 0..a.steps {
                let closed = if worked {
                    closed_form_orbit(x0, x1, &controls, n)?
                } else {
                    eq.closed_form(x0, x1, &controls, n)?
                };
                worst = worst.max((closed - xs[n + 2]).abs());
            }
        }
        report["closed_form_mismatch"] = json!(worst);
    }
    out.report("fde.json", &report)?;
    if validation.e1_ok {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!(
            "`{}` is not contractive (lambda {})",
            label(&l),
            sys.lambda()
        )))
    }
}
