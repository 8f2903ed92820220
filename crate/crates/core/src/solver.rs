//! Solutions of the Loewner equation `dx/dt = G(x, t)` for a.e. `t`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldSpec, PolydiscRegion};
use crate::geometry::{CompactSet, Domain, Point};
use crate::ode::{self, Controls, OdeSolution, Stop};
use crate::quadrature::{GL8_NODES, GL8_WEIGHTS};

/// Treatment of a declared `t^{-alpha}` singularity at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityPolicy {
    /// Integrate the first piece in `u = t^{1 - alpha}`.
    Substitute,
    /// Integrate in `t` directly (the singular endpoint is still avoided).
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Escape is flagged once the boundary gap falls below this while the
    /// step controller stalls.
    pub escape_margin: f64,
    pub singularity_substep: SingularityPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_step: 0.25,
            escape_margin: 1e-8,
            singularity_substep: SingularityPolicy::Substitute,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        if !(self.escape_margin > 0.0 && self.escape_margin < 1.0) {
            return Err(Error::InvalidParameter("escape_margin must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub(crate) fn controls(&self) -> Controls {
        Controls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            escape_margin: self.escape_margin,
            substitute_singularity: self.singularity_substep == SingularityPolicy::Substitute,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Point,
}

/// Escape metadata: the last accepted time approximates `I(s, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub time: f64,
    pub boundary_gap: f64,
    pub kobayashi_from_start: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub domain: Domain,
    pub s: f64,
    pub z0: Point,
    pub t_end: f64,
    pub samples: Vec<TrajectorySample>,
    pub escape: Option<Escape>,
    dense: Option<OdeSolution>,
}

/// Structured-text summary of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub domain: Domain,
    pub s: f64,
    pub z0: Point,
    pub t_end: f64,
    pub t_reached: f64,
    pub samples: usize,
    pub escape: Option<Escape>,
}

/// `|Delta x - int G|` over one accepted step.
#[derive(Clone, Copy, Debug)]
pub struct StepResidual {
    pub t0: f64,
    pub t1: f64,
    pub residual: f64,
}

impl Trajectory {
    pub(crate) fn from_samples(domain: Domain, s: f64, z0: Point, t_end: f64, samples: Vec<TrajectorySample>) -> Self {
        Trajectory {
            domain,
            s,
            z0,
            t_end,
            samples,
            escape: None,
            dense: None,
        }
    }

    pub fn final_point(&self) -> &Point {
        &self.samples.last().expect("non-empty trajectory").x
    }

    pub fn t_reached(&self) -> f64 {
        self.samples.last().expect("non-empty trajectory").t
    }

    pub fn escaped(&self) -> bool {
        self.escape.is_some()
    }

    /// `x(t)` from the dense output.
    pub fn at(&self, t: f64) -> Result<Point> {
        let dense = self
            .dense
            .as_ref()
            .ok_or_else(|| Error::Unsupported("trajectory has no dense output".into()))?;
        dense
            .eval(t)
            .map(Point)
            .ok_or_else(|| Error::InvalidParameter(format!("t = {t} outside the integrated window")))
    }

    pub fn metadata(&self) -> TrajectoryMetadata {
        TrajectoryMetadata {
            domain: self.domain,
            s: self.s,
            z0: self.z0.clone(),
            t_end: self.t_end,
            t_reached: self.t_reached(),
            samples: self.samples.len(),
            escape: self.escape,
        }
    }

    /// CSV with columns `t, re_x1, im_x1, ...` in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.z0.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for j in 1..=n {
            header.push(format!("re_x{j}"));
            header.push(format!("im_x{j}"));
        }
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            for c in s.x.coords() {
                row.push(c.re.to_string());
                row.push(c.im.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Residual of the integral equation on every accepted step, with the
    /// increment of `int G(x(tau), tau) dtau` computed by Gauss-Legendre on the
    /// dense interpolant.
    pub fn ode_residuals(&self, field: &FieldSpec) -> Vec<StepResidual> {
        let Some(dense) = &self.dense else {
            return Vec::new();
        };
        dense
            .steps()
            .map(|(map, u0, h, view)| {
                let start = Point(view.at(0.0));
                let end = Point(view.at(1.0));
                let mut integral = Point::zeros(start.dim());
                for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                    let theta = 0.5 * (1.0 + x);
                    let u = map.regular_u(u0 + theta * h);
                    let t = map.to_t(u).clamp(map.a, crate::quadrature::prev_float(map.b));
                    let g = field.evaluate_unchecked(&Point(view.at(theta)), t);
                    integral += &(&g * (0.5 * w * h * map.jacobian(u)));
                }
                StepResidual {
                    t0: map.to_t(u0),
                    t1: map.to_t(u0 + h).min(map.b),
                    residual: (&end - &start).distance(&integral),
                }
            })
            .collect()
    }
}

impl TrajectoryMetadata {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Parse the samples written by [`Trajectory::write_csv`].
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<TrajectorySample>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad number {v:?}: {e}"))))
            .collect::<Result<_>>()?;
        let x = Point(vals[1..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        out.push(TrajectorySample { t: vals[0], x });
    }
    Ok(out)
}

fn check_window(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidTime(s));
    }
    if !t.is_finite() {
        return Err(Error::InvalidTime(t));
    }
    if s > t {
        return Err(Error::ReversedWindow { s, t });
    }
    Ok(())
}

pub(crate) fn check_field_domain(field: &FieldSpec, domain: &Domain) -> Result<()> {
    if field.domain() != *domain {
        return Err(Error::InvalidParameter(format!(
            "field lives on {:?}, requested {:?}",
            field.domain(),
            domain
        )));
    }
    Ok(())
}

/// Integrate the Loewner equation from `(s, z0)` to `t_end`.
///
/// Escape is a result, not an error: the returned trajectory stops at the
/// escape time with [`Trajectory::escape`] set.
pub fn integrate(
    field: &FieldSpec,
    domain: &Domain,
    s: f64,
    z0: &Point,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    check_field_domain(field, domain)?;
    cfg.validate()?;
    check_window(s, t_end)?;
    if !domain.contains(z0)? {
        return Err(Error::OutsideDomain(z0.clone()));
    }
    let sol = ode::integrate(
        |t, y, out| out.copy_from_slice(&field.evaluate_unchecked(&Point(y.to_vec()), t).0),
        |y| domain.boundary_gap(&Point(y.to_vec())),
        s,
        &z0.0,
        t_end,
        &field.breakpoints(),
        field.singular_exponent(),
        &cfg.controls(),
    );
    let samples: Vec<TrajectorySample> = sol
        .samples
        .iter()
        .map(|(t, y)| TrajectorySample {
            t: *t,
            x: Point(y.clone()),
        })
        .collect();
    let last = samples.last().unwrap().x.clone();
    let escape = match sol.stop {
        None => None,
        Some(Stop::Escape { time, gap }) => Some(Escape {
            time,
            boundary_gap: gap,
            kobayashi_from_start: domain.distance_unchecked(&last.0, &z0.0),
        }),
        Some(Stop::Underflow { time }) => return Err(Error::StepUnderflow { time, state: last }),
    };
    Ok(Trajectory {
        domain: *domain,
        s,
        z0: z0.clone(),
        t_end,
        samples,
        escape,
        dense: Some(sol),
    })
}

/// Final point of the flow from `(s, z0)` at `t`, failing on escape.
pub fn flow_to(field: &FieldSpec, s: f64, z0: &Point, t: f64, cfg: &SolverConfig) -> Result<Point> {
    let traj = integrate(field, &field.domain(), s, z0, t, cfg)?;
    match traj.escape {
        Some(e) => Err(Error::Escaped { time: e.time, target: t }),
        None => Ok(traj.final_point().clone()),
    }
}

/// Largest `delta <= horizon - s` with `int_s^{s+delta} C <= r` and
/// `int_s^{s+delta} C~ <= r`, where `C` bounds the field on `set` and `C~` is
/// its Lipschitz certificate on `region`. Both integrals are monotone in
/// `delta`, so the answer is found by bisection.
pub fn local_existence_delta(
    field: &FieldSpec,
    s: f64,
    r: f64,
    set: &CompactSet,
    region: &PolydiscRegion,
    horizon: f64,
) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
    }
    check_window(s, horizon)?;
    let order = field.order.value();
    let bound = field.bound_certificate(set, horizon, order)?.bound;
    let lipschitz = field.lipschitz_certificate(region, horizon, order)?.bound;
    let worst = |delta: f64| bound.integral(s, s + delta).max(lipschitz.integral(s, s + delta));
    let full = horizon - s;
    if worst(full) <= r {
        return Ok(full);
    }
    let (mut lo, mut hi) = (0.0, full);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if worst(mid) <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
