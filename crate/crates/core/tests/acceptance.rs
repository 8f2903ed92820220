//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use loewner_core::catalog::{self, Example};
use loewner_core::evolution::{
    finite_difference_jacobian, verify_axioms, verify_contraction, verify_univalence, ClosedFormKind, EvolutionFamily,
};
use loewner_core::fields::{CMatrix, FieldSpec, HerglotzFunction, PolydiscRegion};
use loewner_core::herglotz::{check_herglotz, herglotz_value, PairSample, TimeSample, Verdict, DEFAULT_TOL};
use loewner_core::picard::{picard_iterate, PicardConfig};
use loewner_core::recovery::{default_steps, recover_field, uniqueness_crosscheck};
use loewner_core::sampling::{compact_points, domain_points, random_pairs, DEFAULT_SEED};
use loewner_core::solver::{integrate, local_existence_delta, SolverConfig};
use loewner_core::variational::{flow_derivative, transport_matrix};
use loewner_core::{CompactSet, Domain, Point};

type Outcome = Result<(bool, String), String>;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn backed(f: &FieldSpec) -> EvolutionFamily {
    EvolutionFamily::field_backed(f.clone(), cfg())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn closed_form_flow() -> Outcome {
    let start = Instant::now();
    let tr = integrate(&catalog::radial_unit(), &Domain::UnitDisc, 0.0, &Point::real(0.5), 1.0, &cfg()).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    let e = (tr.final_point()[0] - Complex64::new(0.5 * (-1f64).exp(), 0.0)).norm();
    Ok((e <= 1e-8 && elapsed < 1.0, format!("|x(1) - e^-1/2| = {e:.2e}, {elapsed:.4} s")))
}

fn boundary_fixed_point_flow() -> Outcome {
    let tr = integrate(&catalog::tanh_field(), &Domain::UnitDisc, 0.0, &Point::real(0.0), 1.0, &cfg()).map_err(err)?;
    let e = (tr.final_point()[0] - Complex64::new(1f64.tanh(), 0.0)).norm();
    Ok((e <= 1e-6, format!("|x(1) - tanh 1| = {e:.2e}")))
}

fn singular_order_one() -> Outcome {
    let tr = integrate(&catalog::radial_inverse_sqrt(), &Domain::UnitDisc, 0.0, &Point::real(0.5), 1.0, &cfg())
        .map_err(err)?;
    let e = (tr.final_point()[0] - Complex64::new(0.5 * (-1f64).exp(), 0.0)).norm();
    Ok((e <= 1e-5, format!("|x(1) - e^-1/2| = {e:.2e}")))
}

fn escape_detection() -> Outcome {
    let tr = integrate(&catalog::expanding(), &Domain::UnitDisc, 0.0, &Point::real(0.5), 2.0, &cfg()).map_err(err)?;
    let Some(esc) = tr.escape else {
        return Ok((false, "no escape flagged".into()));
    };
    let e = (esc.time - 2f64.ln()).abs();
    Ok((e <= 1e-4, format!("|escape - ln 2| = {e:.2e}")))
}

fn picard_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for ex in catalog::herglotz_fields() {
        let d = ex.field.domain();
        let s = if ex.field.singular_exponent() > 0.0 { 0.0 } else { 0.9 };
        let region = PolydiscRegion::new(0.55);
        let delta = local_existence_delta(&ex.field, s, 0.5, &ex.set, &region, s + 1.0).map_err(err)?;
        if !(delta > 0.0) {
            return Ok((false, format!("{}: delta = {delta}", ex.name)));
        }
        for z0 in compact_points(&ex.set, d.dim(), 4) {
            let pic = picard_iterate(&ex.field, s, &z0, delta, &PicardConfig::default()).map_err(err)?;
            let tr = integrate(&ex.field, &d, s, &z0, s + delta, &cfg()).map_err(err)?;
            for p in &pic.trajectory.samples {
                let diff = tr.at(p.t).map_err(err)?.distance(&p.x);
                if diff > worst {
                    worst = diff;
                    detail = format!("{} delta = {delta:.3}", ex.name);
                }
            }
        }
    }
    Ok((worst <= 1e-6, format!("sup difference {worst:.2e} ({detail})")))
}

const TRIPLES: [(f64, f64, f64); 10] = [
    (0.0, 0.0, 0.0),
    (0.0, 0.5, 1.0),
    (0.2, 0.9, 1.7),
    (0.5, 1.0, 1.5),
    (0.1, 1.0, 2.5),
    (0.9, 1.1, 1.3),
    (1.5, 2.0, 3.0),
    (0.0, 1.5, 3.0),
    (2.5, 2.5, 3.0),
    (0.95, 1.0, 1.05),
];

fn axiom_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for ex in catalog::herglotz_fields() {
        let grid = compact_points(&ex.set, ex.field.dim(), 20);
        let rep = verify_axioms(&backed(&ex.field), &grid, &TRIPLES, 3.0, &ex.set, 1e-6).map_err(err)?;
        for c in &rep.checks {
            if c.worst_violation > worst {
                worst = c.worst_violation;
                detail = format!("{} {}", ex.name, c.name);
            }
        }
        if !rep.overall {
            return Ok((false, format!("{} failed: {detail} {worst:.2e}", ex.name)));
        }
    }
    let disc = Domain::UnitDisc;
    let set = CompactSet::Ball { radius: 0.5 };
    let grid = compact_points(&set, 1, 20);
    let mut controls = Vec::new();
    for kind in [ClosedFormKind::BrokenComposition, ClosedFormKind::Expanding] {
        let rep = verify_axioms(&EvolutionFamily::closed_form(kind.clone(), disc), &grid, &TRIPLES, 3.0, &set, 1e-6)
            .map_err(err)?;
        let failing = rep.checks.iter().find(|c| c.verdict == Verdict::Fail);
        controls.push(failing.is_some_and(|c| c.witness.is_some()));
    }
    let ok = controls.iter().all(|&c| c);
    Ok((ok, format!("worst residual {worst:.2e} ({detail}); negative controls fail: {controls:?}")))
}

fn contraction() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for ex in catalog::herglotz_fields() {
        let d = ex.field.domain();
        let pairs = random_pairs(&d, 1000, 0.95, DEFAULT_SEED);
        let rep = verify_contraction(&backed(&ex.field), &pairs, 0.0, 1.0, 1e-9).map_err(err)?;
        let c = &rep.checks[0];
        if c.observed > worst {
            worst = c.observed;
            detail = ex.name.to_string();
        }
        if !rep.overall || pairs.len() < 1000 {
            return Ok((false, format!("{}: k increased by {:.2e}", ex.name, c.observed)));
        }
    }
    let pairs = random_pairs(&Domain::UnitDisc, 1000, 0.95, DEFAULT_SEED);
    let rep = verify_contraction(&backed(&catalog::expanding()), &pairs, 0.0, 1.0, 1e-9).map_err(err)?;
    Ok((
        !rep.overall,
        format!("largest change of k {worst:.2e} ({detail}); expanding field fails: {}", !rep.overall),
    ))
}

fn herglotz_classification() -> Outcome {
    let disc = Domain::UnitDisc;
    let times = TimeSample::PieceMidpoints {
        horizon: 3.0,
        per_piece: 4,
    };
    let positives = [
        ("radial c = 1", catalog::radial_unit()),
        ("radial c = 0", FieldSpec::radial_constant(0.0, disc)),
        ("radial c = 1/(2 sqrt t)", catalog::radial_inverse_sqrt()),
        (
            "berkson-porta cayley",
            FieldSpec::berkson_porta(Complex64::new(0.3, 0.2), HerglotzFunction::cayley()),
        ),
        (
            "berkson-porta p = 2 - i",
            FieldSpec::berkson_porta(Complex64::new(-0.5, 0.0), HerglotzFunction::constant(Complex64::new(2.0, -1.0))),
        ),
        (
            "linear -Id",
            FieldSpec::linear_constant(&(-CMatrix::identity(3, 3)), Domain::UnitBall { n: 3 }),
        ),
    ];
    for (name, f) in &positives {
        let rep = check_herglotz(f, &f.domain(), &PairSample::random(400), &times, DEFAULT_TOL).map_err(err)?;
        if rep.verdict != Verdict::Pass {
            return Ok((false, format!("{name}: {:?} worst {:.2e}", rep.verdict, rep.worst_value)));
        }
    }
    let g = catalog::expanding();
    let rep = check_herglotz(&g, &disc, &PairSample::random(400), &times, DEFAULT_TOL).map_err(err)?;
    let v = herglotz_value(&g, &disc, &Point::real(0.5), &Point::real(0.0), 1.0).map_err(err)?;
    let e = (v - 2.0 / 3.0).abs();
    Ok((
        rep.verdict == Verdict::Fail && e <= 1e-6,
        format!("{} positives pass; G = +z fails, dk at (0.5, 0) = {v:.9}", positives.len()),
    ))
}

fn variational_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for ex in catalog::herglotz_fields() {
        let fam = backed(&ex.field);
        let d = ex.field.domain();
        for z in compact_points(&ex.set, d.dim(), 4) {
            let st = transport_matrix(&ex.field, &d, 0.0, 1.0, &z, &cfg()).map_err(err)?;
            let exact = flow_derivative(&st, 1.0).map_err(err)?.matrix;
            let fd = finite_difference_jacobian(&fam, 0.0, 1.0, &z, 1e-4).map_err(err)?;
            let rel = (&exact - &fd).norm() / exact.norm();
            if rel > worst {
                worst = rel;
                detail = ex.name.to_string();
            }
        }
    }
    let st = transport_matrix(&catalog::tanh_field(), &Domain::UnitDisc, 0.0, 1.0, &Point::real(0.0), &cfg())
        .map_err(err)?;
    let sech2 = flow_derivative(&st, 1.0).map_err(err)?.matrix[(0, 0)];
    let e = (sech2 - Complex64::new(1.0 / 1f64.cosh().powi(2), 0.0)).norm();
    Ok((
        worst <= 1e-5 && e <= 1e-6,
        format!("relative Jacobian mismatch {worst:.2e} ({detail}); |dphi - sech^2 1| = {e:.2e}"),
    ))
}

/// Five times per field, avoiding breakpoints.
fn recovery_times(ex: &Example) -> Vec<f64> {
    let breaks = ex.field.breakpoints();
    [0.15, 0.55, 1.35, 2.05, 2.75]
        .into_iter()
        .map(|t: f64| if breaks.iter().any(|b| (b - t).abs() < 0.05) { t + 0.1 } else { t })
        .collect()
}

fn field_recovery() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    let steps = default_steps();
    for ex in catalog::herglotz_fields() {
        let fam = backed(&ex.field);
        let points = compact_points(&ex.set, ex.field.dim(), 5);
        let times = recovery_times(&ex);
        let mut sample = Vec::new();
        for z in &points {
            for &t in &times {
                let rec = recover_field(&fam, z, t, &steps).map_err(err)?;
                let g = ex.field.evaluate(z, t).map_err(err)?;
                let rel = rec.value.distance(&g) / g.norm().max(1e-6);
                if rel > worst {
                    worst = rel;
                    detail = format!("{} t = {t}", ex.name);
                }
                sample.push((z.clone(), t));
            }
        }
        let truth = uniqueness_crosscheck(&fam, &ex.field, &sample, 1e-4).map_err(err)?;
        let doubled = uniqueness_crosscheck(&fam, &ex.field.scaled(2.0), &sample, 1e-4).map_err(err)?;
        if !truth.overall || doubled.overall {
            return Ok((false, format!("{}: cross-check true {} doubled {}", ex.name, truth.overall, doubled.overall)));
        }
    }
    Ok((worst <= 1e-4, format!("relative recovery error {worst:.2e} ({detail}); cross-checks discriminate")))
}

/// 25 points and their negatives.
fn symmetric_sample(d: &Domain, radius: f64) -> Vec<Point> {
    let mut half: Vec<Point> = Vec::new();
    for p in domain_points(d, 200, radius) {
        let q = -&p;
        if p.norm() > 1e-3 && !half.contains(&q) && half.len() < 25 {
            half.push(p);
        }
    }
    let neg: Vec<Point> = half.iter().map(|p| -p).collect();
    half.extend(neg);
    half
}

fn univalence() -> Outcome {
    for ex in catalog::herglotz_fields() {
        let d = ex.field.domain();
        let sample = symmetric_sample(&d, 0.9);
        let rep = verify_univalence(&backed(&ex.field), &sample, 0.0, 1.0).map_err(err)?;
        if !rep.overall || sample.len() != 50 {
            return Ok((false, format!("{} fails univalence", ex.name)));
        }
    }
    let d = Domain::UnitDisc;
    let rep = verify_univalence(
        &EvolutionFamily::closed_form(ClosedFormKind::Square, d),
        &symmetric_sample(&d, 0.9),
        0.0,
        1.0,
    )
    .map_err(err)?;
    Ok((
        !rep.overall,
        format!("{} fields pass on 50 points; z^2 control fails: {}", catalog::herglotz_fields().len(), !rep.overall),
    ))
}

fn global_existence() -> Outcome {
    let mut closest: f64 = 1.0;
    for ex in catalog::herglotz_fields() {
        let d = ex.field.domain();
        for z in domain_points(&d, 100, 0.99) {
            let tr = integrate(&ex.field, &d, 0.0, &z, 10.0, &cfg()).map_err(|e| format!("{}: {e}", ex.name))?;
            if tr.escaped() {
                return Ok((false, format!("{} escaped from {z}", ex.name)));
            }
            closest = closest.min(tr.samples.iter().map(|p| d.boundary_gap(&p.x)).fold(1.0, f64::min));
        }
    }
    Ok((true, format!("no escape on [0, 10]; smallest boundary gap {closest:.2e}")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed-form flow accuracy", closed_form_flow),
        ("boundary fixed point flow", boundary_fixed_point_flow),
        ("order-one singular driver", singular_order_one),
        ("escape detection", escape_detection),
        ("picard/integrator agreement", picard_agreement),
        ("evolution family axioms", axiom_suite),
        ("kobayashi contraction", contraction),
        ("herglotz classification", herglotz_classification),
        ("variational accuracy", variational_accuracy),
        ("field recovery round trip", field_recovery),
        ("univalence", univalence),
        ("global existence", global_existence),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, msg) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {msg} [{:.2} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
