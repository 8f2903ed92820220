//! Command-line adapter over `loewner-core`: reads a [`RunConfig`], runs one
//! command, writes artifacts to an output directory and maps the outcome to
//! an exit code (0 pass, 1 fail, 2 advisory, 3 input error).

pub mod config;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use loewner_core::evolution::{verify_axioms, verify_contraction, verify_univalence, VerificationReport};
use loewner_core::herglotz::{check_herglotz, flow_contraction_check, PairSample, TimeSample, Verdict, DEFAULT_TOL};
use loewner_core::picard::{picard_iterate, PicardConfig};
use loewner_core::recovery::{default_steps, uniqueness_crosscheck, RecoveredField};
use loewner_core::sampling::{compact_points, random_pairs};
use loewner_core::solver::{integrate, Trajectory};
use loewner_core::variational::{flow_derivative, richardson_check, transport_matrix};
use loewner_core::{Error, Point};
use serde::Serialize;

pub use config::{Command, InputError, RunConfig};

pub const EXIT_INPUT: i32 = 3;

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
}

enum Failure {
    Input(String),
    Numeric(Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::OutsideDomain(_)
            | Error::Diagonal
            | Error::InvalidTime(_)
            | Error::ReversedWindow { .. }
            | Error::InvalidParameter(_)
            | Error::DivergentNorm { .. }
            | Error::NoEnclosingPolydisc { .. }
            | Error::Unsupported(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::Csv(_) => Failure::Input(e.to_string()),
            other => Failure::Numeric(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("cannot write output: {e}"))
    }
}

type Step = Result<(Verdict, String), Failure>;

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    fs::write(out.join(name), text + "\n")?;
    Ok(())
}

fn write_trajectory(out: &Path, stem: &str, tr: &Trajectory) -> Result<(), Failure> {
    tr.write_csv(BufWriter::new(File::create(out.join(format!("{stem}.csv")))?))?;
    write_json(out, &format!("{stem}.json"), &tr.metadata())
}

fn solve(cfg: &RunConfig, out: &Path) -> Step {
    let field = cfg.field()?;
    let tr = integrate(field, &field.domain(), cfg.s, cfg.z0()?, cfg.t_end()?, &cfg.solver)?;
    write_trajectory(out, "trajectory", &tr)?;
    let msg = match &tr.escape {
        Some(e) => format!("escaped at t = {} (boundary gap {:e})", e.time, e.boundary_gap),
        None => format!("x({}) = {}", tr.t_reached(), tr.final_point()),
    };
    Ok((Verdict::Pass, msg))
}

fn picard(cfg: &RunConfig, out: &Path) -> Step {
    let field = cfg.field()?;
    let delta = cfg.t_end()? - cfg.s;
    let pc = PicardConfig {
        tol: cfg.tol.unwrap_or(PicardConfig::default().tol),
        ..PicardConfig::default()
    };
    match picard_iterate(field, cfg.s, cfg.z0()?, delta, &pc) {
        Ok(sol) => {
            write_trajectory(out, "picard", &sol.trajectory)?;
            Ok((
                Verdict::Pass,
                format!("converged in {} iterations, x = {}", sol.iterations, sol.trajectory.final_point()),
            ))
        }
        Err(e @ (Error::NonContraction { .. } | Error::PicardNotConverged { .. })) => Ok((Verdict::Fail, e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn pair_sample(cfg: &RunConfig) -> PairSample {
    PairSample::Random {
        count: cfg.samples.pairs,
        radius: cfg.samples.radius,
        seed: cfg.seed(),
    }
}

fn herglotz(cfg: &RunConfig, out: &Path) -> Step {
    let field = cfg.field()?;
    let domain = field.domain();
    let times = match &cfg.samples.times {
        Some(times) => TimeSample::Explicit { times: times.clone() },
        None => TimeSample::PieceMidpoints {
            horizon: cfg.t_end.unwrap_or(1.0),
            per_piece: cfg.samples.per_piece,
        },
    };
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let report = check_herglotz(field, &domain, &pair_sample(cfg), &times, tol)?;
    let mut verdict = report.verdict;
    let mut msg = format!("{:?}: worst dk = {:e} over {} samples", report.verdict, report.worst_value, report.samples);
    let flow = match cfg.t_end {
        Some(t) => {
            let flow = flow_contraction_check(field, &domain, cfg.s, t, &pair_sample(cfg), &cfg.solver, tol)?;
            verdict = verdict.combine(flow.verdict);
            let _ = write!(msg, "; flow contraction {:?} (worst change {:e})", flow.verdict, flow.worst_value);
            Some(flow)
        }
        None => None,
    };
    #[derive(Serialize)]
    struct Report<'a> {
        verdict: Verdict,
        derivative: &'a loewner_core::herglotz::HerglotzReport,
        flow_contraction: Option<&'a loewner_core::herglotz::HerglotzReport>,
    }
    write_json(
        out,
        "herglotz_report.json",
        &Report {
            verdict,
            derivative: &report,
            flow_contraction: flow.as_ref(),
        },
    )?;
    Ok((verdict, msg))
}

fn default_triples(t: f64) -> Vec<(f64, f64, f64)> {
    [
        (0.0, 0.0, 0.0),
        (0.0, 0.25, 0.5),
        (0.0, 0.5, 1.0),
        (0.25, 0.5, 0.75),
        (1.0 / 3.0, 2.0 / 3.0, 1.0),
        (0.0, 0.1, 0.2),
        (0.5, 0.5, 1.0),
        (0.0, 0.0, 1.0),
        (1.0, 1.0, 1.0),
        (0.2, 0.5, 0.9),
    ]
    .iter()
    .map(|&(a, b, c)| (a * t, b * t, c * t))
    .collect()
}

fn verify_family(cfg: &RunConfig, out: &Path) -> Step {
    let family = cfg.family()?;
    let domain = family.domain();
    let t = cfg.t_end()?;
    let set = cfg.samples.compact;
    let grid = compact_points(&set, domain.dim(), cfg.samples.points);
    let triples = cfg.samples.triples.clone().unwrap_or_else(|| default_triples(t));
    let pairs = random_pairs(&domain, cfg.samples.pairs, cfg.samples.radius, cfg.seed());
    let report: VerificationReport = verify_axioms(&family, &grid, &triples, t, &set, cfg.tol.unwrap_or(1e-6))?
        .merge(verify_contraction(&family, &pairs, cfg.s, t, cfg.tol.unwrap_or(1e-9))?)
        .merge(verify_univalence(&family, &grid, cfg.s, t)?);
    write_json(out, "verification_report.json", &report)?;
    let mut msg = String::new();
    for c in &report.checks {
        let _ = write!(msg, "{} {:?} ({:e}); ", c.name, c.verdict, c.worst_violation);
    }
    Ok((report.verdict(), msg.trim_end_matches("; ").to_string()))
}

fn variational(cfg: &RunConfig, out: &Path) -> Step {
    let field = cfg.field()?;
    let (z0, t) = (cfg.z0()?, cfg.t_end()?);
    let state = transport_matrix(field, &field.domain(), cfg.s, t, z0, &cfg.solver)?;
    fs::write(out.join("transport.json"), state.to_json()? + "\n")?;
    let fd = flow_derivative(&state, t)?;
    let family = cfg.family()?;
    let mut direction = Point::zeros(z0.dim());
    direction[0] = 1.0.into();
    let rich = richardson_check(&family, cfg.s, t, z0, &direction)?;
    #[derive(Serialize)]
    struct Report<'a> {
        flow_derivative: Vec<Vec<[f64; 2]>>,
        condition: f64,
        flagged: bool,
        richardson: &'a loewner_core::variational::RichardsonCheck,
    }
    write_json(
        out,
        "variational_report.json",
        &Report {
            flow_derivative: fd.matrix.row_iter().map(|r| r.iter().map(|c| [c.re, c.im]).collect()).collect(),
            condition: fd.condition,
            flagged: fd.flagged,
            richardson: &rich,
        },
    )?;
    let verdict = if !rich.passes {
        Verdict::Fail
    } else if fd.flagged {
        Verdict::Advisory
    } else {
        Verdict::Pass
    };
    Ok((
        verdict,
        format!(
            "det dphi = {:e}, condition {:e}, observed order {:.3}",
            fd.matrix.determinant().norm(),
            fd.condition,
            rich.observed_order
        ),
    ))
}

fn recover(cfg: &RunConfig, out: &Path) -> Step {
    let family = cfg.family()?;
    let domain = family.domain();
    let t = cfg.t_end()?;
    let points = compact_points(&cfg.samples.compact, domain.dim(), cfg.samples.points);
    let times = cfg
        .samples
        .times
        .clone()
        .unwrap_or_else(|| (0..5).map(|k| cfg.s + (t - cfg.s) * (k as f64 + 0.5) / 5.0).collect());
    let rf = match RecoveredField::recover(&family, &points, &times, &default_steps()) {
        Ok(rf) => rf,
        Err(e @ (Error::OneSidedMismatch { .. } | Error::NonConvergent { .. })) => {
            return Ok((Verdict::Fail, e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    rf.write_csv(BufWriter::new(File::create(out.join("recovered.csv"))?))?;
    let mut msg = format!("{} samples, uniform bound {:e}", rf.samples.len(), rf.uniform_bound);
    let Some(field) = &cfg.field else {
        return Ok((Verdict::Pass, msg));
    };
    let sample: Vec<(Point, f64)> = times
        .iter()
        .flat_map(|&t| points.iter().map(move |z| (z.clone(), t)))
        .collect();
    let report = uniqueness_crosscheck(&family, field, &sample, cfg.tol.unwrap_or(1e-4))?;
    write_json(out, "recovery_report.json", &report)?;
    let _ = write!(msg, "; deviation from field {:e}", report.checks[0].worst_violation);
    Ok((report.verdict(), msg))
}

fn demo(cfg: &RunConfig, out: &Path) -> Step {
    let mut verdict = Verdict::Pass;
    let mut table = format!("{:<16}{:<10}{}\n", "step", "result", "detail");
    let steps: [(&str, fn(&RunConfig, &Path) -> Step); 4] = [
        ("solve", solve),
        ("herglotz-check", herglotz),
        ("verify-family", verify_family),
        ("recover", recover),
    ];
    for (name, step) in steps {
        let (v, msg) = step(cfg, out)?;
        verdict = verdict.combine(v);
        let _ = writeln!(table, "{name:<16}{:<10}{msg}", format!("{v:?}").to_lowercase());
    }
    Ok((verdict, table.trim_end().to_string()))
}

/// Run `command` on `cfg`, writing artifacts into `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Outcome {
    if let Some(c) = cfg.command {
        if c != command {
            return Outcome {
                code: EXIT_INPUT,
                summary: format!("config is for `{c:?}`, not `{command:?}`"),
            };
        }
    }
    if let Err(e) = cfg.solver.validate() {
        return Outcome {
            code: EXIT_INPUT,
            summary: format!("`solver`: {e}"),
        };
    }
    if let Err(e) = fs::create_dir_all(out) {
        return Outcome {
            code: EXIT_INPUT,
            summary: format!("cannot create {}: {e}", out.display()),
        };
    }
    let step = match command {
        Command::Solve => solve(cfg, out),
        Command::Picard => picard(cfg, out),
        Command::HerglotzCheck => herglotz(cfg, out),
        Command::VerifyFamily => verify_family(cfg, out),
        Command::Variational => variational(cfg, out),
        Command::Recover => recover(cfg, out),
        Command::Demo => demo(cfg, out),
    };
    match step {
        Ok((v, summary)) => Outcome {
            code: v.exit_code(),
            summary,
        },
        Err(Failure::Input(msg)) => Outcome {
            code: EXIT_INPUT,
            summary: format!("input error: {msg}"),
        },
        Err(Failure::Numeric(e)) => Outcome {
            code: Verdict::Fail.exit_code(),
            summary: format!("failed: {e}"),
        },
    }
}
