//! Recovery of the driving field from a family through the quotients
//! `G_h(z, t) = (phi_{t,t+h}(z) - z) / h`, extrapolated to `h = 0`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Check, CheckWitness, EvolutionFamily, VerificationReport};
use crate::fields::{CustomField, FieldSpec};
use crate::geometry::{CompactSet, Point, Tangent};
use crate::herglotz::Verdict;
use crate::sampling::{compact_points, halton};

/// Largest step of the default sequence.
pub const DEFAULT_H_MAX: f64 = 1e-2;
/// Length of the default sequence.
pub const DEFAULT_H_LEN: usize = 6;

/// `h_j = h0 2^{-j}` for `j < len`.
pub fn dyadic_steps(h0: f64, len: usize) -> Vec<f64> {
    (0..len).map(|j| h0 * 0.5f64.powi(j as i32)).collect()
}

pub fn default_steps() -> Vec<f64> {
    dyadic_steps(DEFAULT_H_MAX, DEFAULT_H_LEN)
}

pub fn difference_quotient(family: &EvolutionFamily, z: &Point, t: f64, h: f64) -> Result<Tangent> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let image = family.evaluate_phi(t, t + h, z)?;
    Ok(&(&image - z) * (1.0 / h))
}

/// Left-sided quotient `(phi_{t-h,t}(z) - z) / h`.
fn backward_quotient(family: &EvolutionFamily, z: &Point, t: f64, h: f64) -> Result<Tangent> {
    let image = family.evaluate_phi(t - h, t, z)?;
    Ok(&(&image - z) * (1.0 / h))
}

/// Neville extrapolation of `values[j] ~ P(steps[j])` to `h = 0`; the error
/// estimate is the last correction along the tableau diagonal.
fn neville(steps: &[f64], values: &[Point]) -> (Point, f64) {
    let mut row: Vec<Point> = values.to_vec();
    let mut correction = f64::INFINITY;
    for k in 1..steps.len() {
        let next: Vec<Point> = (k..steps.len())
            .map(|j| {
                let (hj, hjk) = (steps[j], steps[j - k]);
                let a = &row[j - k + 1];
                let b = &row[j - k];
                &(a * (hjk / (hjk - hj))) - &(b * (hj / (hjk - hj)))
            })
            .collect();
        correction = next.last().unwrap().distance(row.last().unwrap());
        row = next;
    }
    (row.pop().unwrap(), correction)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    pub value: Tangent,
    pub error_estimate: f64,
    /// Extrapolated left-sided limit, when `t` admits a left window.
    pub left_limit: Option<Tangent>,
}

fn check_steps(steps: &[f64]) -> Result<()> {
    if steps.len() < 3 {
        return Err(Error::InvalidParameter("at least three steps are required".into()));
    }
    if !(steps[steps.len() - 1] > 0.0 && steps.windows(2).all(|w| w[1] < w[0])) {
        return Err(Error::InvalidParameter("steps must decrease strictly to 0".into()));
    }
    Ok(())
}

/// Extrapolated limit of the quotients along `steps`.
///
/// When `t >= steps[0]` the left-sided limit is computed as well; if the two
/// differ beyond their error estimates the result is
/// [`Error::OneSidedMismatch`] carrying both.
pub fn recover_field(family: &EvolutionFamily, z: &Point, t: f64, steps: &[f64]) -> Result<Recovered> {
    check_steps(steps)?;
    let forward: Vec<Point> = steps
        .iter()
        .map(|&h| difference_quotient(family, z, t, h))
        .collect::<Result<_>>()?;
    let (value, error_estimate) = neville(steps, &forward);
    let scale = value.norm().max(1.0);
    if !(error_estimate <= 1e-3 * scale) {
        return Err(Error::NonConvergent { spread: error_estimate });
    }
    let left_limit = if t >= steps[0] {
        let backward: Vec<Point> = steps
            .iter()
            .map(|&h| backward_quotient(family, z, t, h))
            .collect::<Result<_>>()?;
        let (left, left_error) = neville(steps, &backward);
        let gap = left.distance(&value);
        if gap > 1e-6 * scale + 10.0 * (error_estimate + left_error) {
            return Err(Error::OneSidedMismatch {
                time: t,
                left,
                right: value,
            });
        }
        Some(left)
    } else {
        None
    };
    Ok(Recovered {
        value,
        error_estimate,
        left_limit,
    })
}

/// Empirical `A_{T,K}`: 1.1 times the largest `|G_h(z, t)|` over Halton
/// points of `set`, times in `[0, horizon]` and the dyadic steps below
/// `h_max`.
pub fn uniform_bound(family: &EvolutionFamily, set: &CompactSet, horizon: f64, h_max: f64, n_samples: usize) -> Result<f64> {
    set.require_inside(&family.domain())?;
    if !(h_max > 0.0 && horizon >= 0.0) {
        return Err(Error::InvalidParameter("h_max must be positive and horizon non-negative".into()));
    }
    let points = compact_points(set, family.domain().dim(), n_samples.max(1));
    let steps = dyadic_steps(h_max, DEFAULT_H_LEN);
    let sup = points
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let t = horizon * halton(i as u64 + 1, 1)[0];
            steps.iter().try_fold(0.0f64, |m, &h| Ok(m.max(difference_quotient(family, z, t, h)?.norm())))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(1.1 * sup)
}

/// Compare the recovered field with `candidate` on `sample`; pass iff the
/// largest deviation is at most `tol`.
pub fn uniqueness_crosscheck(
    family: &EvolutionFamily,
    candidate: &FieldSpec,
    sample: &[(Point, f64)],
    tol: f64,
) -> Result<VerificationReport> {
    let breaks = candidate.breakpoints();
    if let Some((_, t)) = sample.iter().find(|(_, t)| breaks.contains(t)) {
        return Err(Error::InvalidParameter(format!("sample time {t} is a breakpoint of the candidate")));
    }
    let steps = default_steps();
    let results: Vec<(f64, CheckWitness)> = sample
        .par_iter()
        .map(|(z, t)| {
            let dev = (|| -> Result<f64> {
                let rec = recover_field(family, z, *t, &steps)?;
                Ok(rec.value.distance(&candidate.evaluate(z, *t)?))
            })()
            .unwrap_or(f64::INFINITY);
            let dev = if dev.is_nan() { f64::INFINITY } else { dev };
            (
                dev,
                CheckWitness {
                    z: z.clone(),
                    w: None,
                    times: vec![*t],
                },
            )
        })
        .collect();
    let mut worst: Option<(f64, CheckWitness)> = None;
    for (d, w) in results {
        if worst.as_ref().map_or(true, |b| d > b.0) {
            worst = Some((d, w));
        }
    }
    let (dev, witness) = worst.map_or((0.0, None), |(d, w)| (d, Some(w)));
    let check = Check {
        name: "uniqueness".into(),
        verdict: if dev <= tol { Verdict::Pass } else { Verdict::Fail },
        worst_violation: dev,
        observed: dev,
        witness,
    };
    Ok(VerificationReport {
        overall: check.verdict != Verdict::Fail,
        checks: vec![check],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredSample {
    pub z: Point,
    pub t: f64,
    pub value: Tangent,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredField {
    pub samples: Vec<RecoveredSample>,
    pub h_sequence: Vec<f64>,
    /// 1.1 times the largest quotient modulus met while recovering.
    pub uniform_bound: f64,
}

impl RecoveredField {
    /// Recover on the grid `points x times`.
    pub fn recover(family: &EvolutionFamily, points: &[Point], times: &[f64], steps: &[f64]) -> Result<Self> {
        check_steps(steps)?;
        let jobs: Vec<(usize, usize)> = (0..times.len())
            .flat_map(|k| (0..points.len()).map(move |i| (i, k)))
            .collect();
        let out: Vec<(RecoveredSample, f64)> = jobs
            .par_iter()
            .map(|&(i, k)| {
                let (z, t) = (&points[i], times[k]);
                let rec = recover_field(family, z, t, steps)?;
                let sup = steps.iter().try_fold(rec.value.norm(), |m, &h| {
                    Ok::<f64, Error>(m.max(difference_quotient(family, z, t, h)?.norm()))
                })?;
                Ok((
                    RecoveredSample {
                        z: z.clone(),
                        t,
                        value: rec.value,
                        error_estimate: rec.error_estimate,
                    },
                    sup,
                ))
            })
            .collect::<Result<_>>()?;
        let uniform_bound = 1.1 * out.iter().map(|(_, s)| *s).fold(0.0, f64::max);
        Ok(RecoveredField {
            samples: out.into_iter().map(|(s, _)| s).collect(),
            h_sequence: steps.to_vec(),
            uniform_bound,
        })
    }

    /// CSV columns `t, re_z.., im_z.., re_g.., im_g.., error_estimate`
    /// (real and imaginary parts interleaved per coordinate).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.samples.first().map_or(0, |s| s.z.dim());
        let mut header = vec!["t".to_string()];
        for j in 1..=n {
            header.push(format!("re_z{j}"));
            header.push(format!("im_z{j}"));
        }
        for j in 1..=n {
            header.push(format!("re_g{j}"));
            header.push(format!("im_g{j}"));
        }
        header.push("error_estimate".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            for c in s.z.coords().iter().chain(s.value.coords()) {
                row.push(c.re.to_string());
                row.push(c.im.to_string());
            }
            row.push(s.error_estimate.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The recovered field as a [`FieldSpec`] (each evaluation runs
/// [`recover_field`] with the default steps; failures give NaN).
pub fn recovered_field_spec(family: &EvolutionFamily) -> FieldSpec {
    let family = Arc::new(family.clone());
    let steps = default_steps();
    let domain = family.domain();
    let breakpoints = family.field().map(|f| f.breakpoints()).unwrap_or_default();
    let mut custom = CustomField::new(domain, move |z, t| match recover_field(&family, z, t, &steps) {
        Ok(r) => r.value,
        Err(_) => Point(vec![num_complex::Complex64::new(f64::NAN, f64::NAN); z.dim()]),
    });
    custom.breakpoints = breakpoints;
    FieldSpec::custom(custom)
}
