//! Evolution families `phi_{s,t}` and numerical verifiers for their axioms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CMatrix, FieldSpec, Order, PolydiscRegion};
use crate::geometry::{CompactSet, Domain, Point};
use crate::herglotz::Verdict;
use crate::solver::{flow_to, integrate, SolverConfig};
use crate::timefn::TimeFunction;
use crate::variational::{flow_derivative, transport_matrix};

/// Threshold on `|det dphi|` below which the flow derivative counts as
/// singular.
pub const DET_THRESHOLD: f64 = 1e-12;

pub type FamilyMap = dyn Fn(f64, f64, &Point) -> Point + Send + Sync;

/// Analytic families, applied coordinate-wise. Several are deliberately not
/// evolution families and serve as negative controls.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    Identity,
    /// `tanh(t - s + artanh z)`, the flow of `1 - z^2`.
    Tanh,
    /// `z exp(-(t - s))`, the flow of `-z`.
    Decay,
    /// `z exp(-(t - s)^2)`: fails composition.
    BrokenComposition,
    /// `z exp(t - s)`: leaves the domain and expands distances.
    Expanding,
    /// `z^2 exp(-(t - s))`: not injective.
    Square,
    /// `Re(z) exp(-(t - s))`: not holomorphic.
    RealPart,
}

#[derive(Clone)]
pub struct ClosedForm {
    pub domain: Domain,
    pub kind: Option<ClosedFormKind>,
    custom: Option<Arc<FamilyMap>>,
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm")
            .field("domain", &self.domain)
            .field("kind", &self.kind)
            .finish()
    }
}

impl ClosedForm {
    fn apply(&self, s: f64, t: f64, z: &Point) -> Point {
        let dt = t - s;
        let map = |f: &dyn Fn(Complex64) -> Complex64| Point(z.coords().iter().map(|&x| f(x)).collect());
        match (&self.kind, &self.custom) {
            (_, Some(f)) => f(s, t, z),
            (Some(kind), None) => match kind {
                ClosedFormKind::Identity => z.clone(),
                ClosedFormKind::Tanh => map(&|x| (x.atanh() + dt).tanh()),
                ClosedFormKind::Decay => z * (-dt).exp(),
                ClosedFormKind::BrokenComposition => z * (-dt * dt).exp(),
                ClosedFormKind::Expanding => z * dt.exp(),
                ClosedFormKind::Square => map(&|x| x * x * (-dt).exp()),
                ClosedFormKind::RealPart => map(&|x| Complex64::new(x.re * (-dt).exp(), 0.0)),
            },
            (None, None) => z.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Backend {
    FieldBacked { field: FieldSpec, cfg: SolverConfig },
    ClosedForm(ClosedForm),
}

/// Handle on a family `phi_{s,t}`, either generated by a field or given in
/// closed form.
#[derive(Clone, Debug)]
pub struct EvolutionFamily {
    pub backend: Backend,
    pub order: Order,
}

impl EvolutionFamily {
    pub fn field_backed(field: FieldSpec, cfg: SolverConfig) -> Self {
        let order = field.order;
        EvolutionFamily {
            backend: Backend::FieldBacked { field, cfg },
            order,
        }
    }

    pub fn closed_form(kind: ClosedFormKind, domain: Domain) -> Self {
        EvolutionFamily {
            backend: Backend::ClosedForm(ClosedForm {
                domain,
                kind: Some(kind),
                custom: None,
            }),
            order: Order::INFINITE,
        }
    }

    pub fn custom<F>(domain: Domain, map: F) -> Self
    where
        F: Fn(f64, f64, &Point) -> Point + Send + Sync + 'static,
    {
        EvolutionFamily {
            backend: Backend::ClosedForm(ClosedForm {
                domain,
                kind: None,
                custom: Some(Arc::new(map)),
            }),
            order: Order::INFINITE,
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.backend {
            Backend::FieldBacked { field, .. } => field.domain(),
            Backend::ClosedForm(c) => c.domain,
        }
    }

    pub fn field(&self) -> Option<&FieldSpec> {
        match &self.backend {
            Backend::FieldBacked { field, .. } => Some(field),
            Backend::ClosedForm(_) => None,
        }
    }

    /// `phi_{s,t}(z)`.
    pub fn evaluate_phi(&self, s: f64, t: f64, z: &Point) -> Result<Point> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidTime(s));
        }
        if !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        if s > t {
            return Err(Error::ReversedWindow { s, t });
        }
        let domain = self.domain();
        if !domain.contains(z)? {
            return Err(Error::OutsideDomain(z.clone()));
        }
        match &self.backend {
            Backend::FieldBacked { field, cfg } => flow_to(field, s, z, t, cfg),
            Backend::ClosedForm(c) => {
                let w = c.apply(s, t, z);
                if domain.contains(&w)? {
                    Ok(w)
                } else {
                    Err(Error::DomainExit(w))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckWitness {
    pub z: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Point>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// Largest excess over the allowed value; 0 when nothing is violated.
    pub worst_violation: f64,
    /// Raw quantity at the witness (residual, distance change, determinant).
    pub observed: f64,
    pub witness: Option<CheckWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.verdict != Verdict::Fail);
        VerificationReport { checks, overall }
    }

    pub fn verdict(&self) -> Verdict {
        self.checks.iter().fold(Verdict::Pass, |v, c| v.combine(c.verdict))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.checks.extend(other.checks);
        VerificationReport::new(self.checks)
    }
}

/// One sampled quantity: violation, observed value, witness.
type Sample = (f64, f64, CheckWitness);

/// Deterministic aggregation: the largest violation, first one on ties.
/// NaN and failed evaluations count as infinite violations.
fn summarize(name: &str, samples: Vec<Sample>, tol: f64) -> Check {
    let mut worst: Option<Sample> = None;
    for (v, o, w) in samples {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if worst.as_ref().map_or(true, |b| v > b.0) {
            worst = Some((v, o, w));
        }
    }
    let (violation, observed, witness) = match worst {
        Some((v, o, w)) => (v, o, Some(w)),
        None => (0.0, 0.0, None),
    };
    Check {
        name: name.to_string(),
        verdict: if violation > tol { Verdict::Fail } else { Verdict::Pass },
        worst_violation: violation.max(0.0),
        observed,
        witness,
    }
}

fn witness(z: &Point, times: &[f64]) -> CheckWitness {
    CheckWitness {
        z: z.clone(),
        w: None,
        times: times.to_vec(),
    }
}

fn check_triples(triples: &[(f64, f64, f64)]) -> Result<()> {
    for &(s, u, t) in triples {
        if !(0.0 <= s && s <= u && u <= t && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time triple ({s}, {u}, {t}) is not ordered")));
        }
    }
    Ok(())
}

/// Identity, composition and Lipschitz-in-`t` checks on `grid` and the time
/// triples `(s, u, t)`. Distances are Euclidean.
///
/// The Lipschitz check compares `|phi_{s,t}(z) - phi_{s,u}(z)|` with
/// `int_u^t c`, where `c` is the field's bound certificate on a set `V`
/// containing every trajectory from `grid` on `[s, horizon]` (field-backed),
/// or 1.1 times the largest dyadic finite difference in `t` (closed form).
pub fn verify_axioms(
    family: &EvolutionFamily,
    grid: &[Point],
    triples: &[(f64, f64, f64)],
    horizon: f64,
    set: &CompactSet,
    tol: f64,
) -> Result<VerificationReport> {
    check_triples(triples)?;
    let domain = family.domain();
    set.require_inside(&domain)?;
    for z in grid {
        if !set.contains(z) {
            return Err(Error::InvalidParameter(format!("grid point {z} is outside K")));
        }
    }
    if triples.iter().any(|&(_, _, t)| t > horizon) {
        return Err(Error::InvalidParameter("time triples exceed the horizon".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..triples.len()).map(move |k| (i, k)))
        .collect();

    let identity: Vec<Sample> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let z = &grid[i];
            let s = triples[k].0;
            let d = family.evaluate_phi(s, s, z).map_or(f64::INFINITY, |p| p.distance(z));
            (d, d, witness(z, &[s, s]))
        })
        .collect();

    let composition: Vec<Sample> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let z = &grid[i];
            let (s, u, t) = triples[k];
            let d = (|| -> Result<f64> {
                let direct = family.evaluate_phi(s, t, z)?;
                let mid = family.evaluate_phi(s, u, z)?;
                Ok(direct.distance(&family.evaluate_phi(u, t, &mid)?))
            })()
            .unwrap_or(f64::INFINITY);
            (d, d, witness(z, &[s, u, t]))
        })
        .collect();

    let starts: Vec<f64> = {
        let mut s: Vec<f64> = triples.iter().map(|t| t.0).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    };
    let lipschitz = match lipschitz_bound(family, grid, &starts, horizon) {
        Ok(c) => jobs
            .par_iter()
            .map(|&(i, k)| {
                let z = &grid[i];
                let (s, u, t) = triples[k];
                let d = (|| -> Result<f64> {
                    Ok(family.evaluate_phi(s, t, z)?.distance(&family.evaluate_phi(s, u, z)?))
                })()
                .unwrap_or(f64::INFINITY);
                (d - c.integral(u, t), d, witness(z, &[s, u, t]))
            })
            .collect(),
        Err(_) => vec![(f64::INFINITY, f64::INFINITY, witness(&grid[0], &[0.0, horizon]))],
    };

    Ok(VerificationReport::new(vec![
        summarize("identity", identity, tol),
        summarize("composition", composition, tol),
        summarize("lipschitz_in_t", lipschitz, tol),
    ]))
}

/// Smallest centred compact set of the domain's shape containing `points`,
/// pushed slightly towards the boundary.
fn enclosing_set(domain: &Domain, points: impl Iterator<Item = Point>) -> CompactSet {
    let (polydisc, size): (bool, fn(&Point) -> f64) = match domain {
        Domain::Polydisc { .. } => (true, Point::max_modulus),
        _ => (false, Point::norm),
    };
    let r = points.map(|p| size(&p)).fold(0.0, f64::max);
    let radius = (r + 1e-3 * (1.0 - r)).min(1.0 - 1e-15);
    if polydisc {
        CompactSet::Polydisc { radius }
    } else {
        CompactSet::Ball { radius }
    }
}

fn lipschitz_bound(family: &EvolutionFamily, grid: &[Point], starts: &[f64], horizon: f64) -> Result<TimeFunction> {
    match &family.backend {
        Backend::FieldBacked { field, cfg } => {
            let trajectories: Vec<Vec<Point>> = grid
                .par_iter()
                .flat_map(|z| starts.par_iter().map(move |&s| (z, s)))
                .map(|(z, s)| {
                    let tr = integrate(field, &field.domain(), s, z, horizon, cfg)?;
                    Ok(tr.samples.into_iter().map(|p| p.x).collect())
                })
                .collect::<Result<_>>()?;
            let v = enclosing_set(&field.domain(), trajectories.into_iter().flatten());
            let horizon = if horizon > 0.0 { horizon } else { 1.0 };
            Ok(field.bound_certificate(&v, horizon, family.order.value())?.bound)
        }
        Backend::ClosedForm(_) => {
            const LEVELS: u32 = 6;
            let worst = grid
                .par_iter()
                .flat_map(|z| starts.par_iter().map(move |&s| (z, s)))
                .map(|(z, s)| {
                    let n = 1usize << LEVELS;
                    let dt = (horizon - s) / n as f64;
                    if dt <= 0.0 {
                        return Ok(0.0);
                    }
                    let mut prev = family.evaluate_phi(s, s, z)?;
                    let mut worst: f64 = 0.0;
                    for k in 1..=n {
                        let next = family.evaluate_phi(s, s + k as f64 * dt, z)?;
                        worst = worst.max(next.distance(&prev) / dt);
                        prev = next;
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(TimeFunction::constant(1.1 * worst))
        }
    }
}

/// `k(phi_{s,t}(z), phi_{s,t}(w)) <= k(z, w) + tol` for every pair. Images
/// outside the domain count as infinite violations.
pub fn verify_contraction(
    family: &EvolutionFamily,
    pairs: &[(Point, Point)],
    s: f64,
    t: f64,
    tol: f64,
) -> Result<VerificationReport> {
    let domain = family.domain();
    if s > t {
        return Err(Error::ReversedWindow { s, t });
    }
    for (z, w) in pairs {
        if z == w {
            return Err(Error::Diagonal);
        }
    }
    let samples: Vec<Sample> = pairs
        .par_iter()
        .map(|(z, w)| {
            let before = domain.kobayashi_distance(z, w).unwrap_or(f64::NAN);
            let after = (|| -> Result<f64> {
                domain.kobayashi_distance(&family.evaluate_phi(s, t, z)?, &family.evaluate_phi(s, t, w)?)
            })()
            .unwrap_or(f64::INFINITY);
            let wit = CheckWitness {
                z: z.clone(),
                w: Some(w.clone()),
                times: vec![s, t],
            };
            (after - before, after - before, wit)
        })
        .collect();
    Ok(VerificationReport::new(vec![summarize("contraction", samples, tol)]))
}

/// Complex Jacobian of `z -> phi_{s,t}(z)`: the transport matrix inverse for
/// field-backed families, central differences otherwise.
pub fn family_derivative(family: &EvolutionFamily, s: f64, t: f64, z: &Point) -> Result<CMatrix> {
    match &family.backend {
        Backend::FieldBacked { field, cfg } => {
            let state = transport_matrix(field, &field.domain(), s, t, z, cfg)?;
            Ok(flow_derivative(&state, t)?.matrix)
        }
        Backend::ClosedForm(_) => finite_difference_jacobian(family, s, t, z, 1e-6 * family.domain().boundary_gap(z)),
    }
}

/// Central-difference Jacobian along real coordinate increments of size `h`.
pub fn finite_difference_jacobian(family: &EvolutionFamily, s: f64, t: f64, z: &Point, h: f64) -> Result<CMatrix> {
    let n = z.dim();
    let mut jac = CMatrix::zeros(n, n);
    for j in 0..n {
        let step = Complex64::new(h, 0.0);
        let plus = family.evaluate_phi(s, t, &z.shifted(j, step))?;
        let minus = family.evaluate_phi(s, t, &z.shifted(j, -step))?;
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Injectivity on `sample` and nonsingularity of the flow derivative.
///
/// For field-backed families the image separation is compared with the
/// Gronwall lower bound `|z - w| exp(-int_s^t C~)`, where `C~` is the
/// Lipschitz certificate on a polydisc containing the trajectories (when one
/// fits in the domain). A collision counts as violation 1.
pub fn verify_univalence(family: &EvolutionFamily, sample: &[Point], s: f64, t: f64) -> Result<VerificationReport> {
    if s > t {
        return Err(Error::ReversedWindow { s, t });
    }
    for (i, z) in sample.iter().enumerate() {
        if sample[..i].contains(z) {
            return Err(Error::InvalidParameter(format!("sample point {z} is repeated")));
        }
    }
    let images: Vec<Result<Point>> = sample.par_iter().map(|z| family.evaluate_phi(s, t, z)).collect();
    let contraction_floor = match &family.backend {
        Backend::FieldBacked { field, cfg } if t > s => {
            let points = sample
                .iter()
                .filter_map(|z| integrate(field, &field.domain(), s, z, t, cfg).ok())
                .flat_map(|tr| tr.samples.into_iter().map(|p| p.x));
            let r = points.map(|p| p.max_modulus()).fold(0.0, f64::max);
            field
                .lipschitz_certificate(&PolydiscRegion::new(r), t, family.order.value())
                .map(|c| (-c.bound.integral(s, t)).exp())
                .unwrap_or(0.0)
        }
        Backend::FieldBacked { .. } => 1.0,
        Backend::ClosedForm(_) => 0.0,
    };

    let pairs: Vec<(usize, usize)> = (0..sample.len())
        .flat_map(|i| (i + 1..sample.len()).map(move |j| (i, j)))
        .collect();
    let separation: Vec<Sample> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (z, w) = (&sample[i], &sample[j]);
            let wit = CheckWitness {
                z: z.clone(),
                w: Some(w.clone()),
                times: vec![s, t],
            };
            let (Ok(a), Ok(b)) = (&images[i], &images[j]) else {
                return (f64::INFINITY, f64::NAN, wit);
            };
            let before = z.distance(w);
            let ratio = a.distance(b) / before;
            let violation = if ratio <= 1e-12 {
                1.0
            } else {
                (contraction_floor - ratio).max(0.0)
            };
            (violation, ratio, wit)
        })
        .collect();

    let derivative: Vec<Sample> = sample
        .par_iter()
        .map(|z| {
            let det = family_derivative(family, s, t, z)
                .map(|m| m.determinant().norm())
                .unwrap_or(f64::NAN);
            let violation = if det > DET_THRESHOLD { 0.0 } else { DET_THRESHOLD - det.min(DET_THRESHOLD) + f64::MIN_POSITIVE };
            (if det.is_nan() { f64::INFINITY } else { violation }, det, witness(z, &[s, t]))
        })
        .collect();

    Ok(VerificationReport::new(vec![
        summarize("distinct_images", separation, 1e-9),
        summarize("nonsingular_derivative", derivative, 0.0),
    ]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    /// Perturbation radii `radius, radius/2, radius/4`.
    pub radii: Vec<f64>,
    pub moduli: Vec<f64>,
    pub modulus: f64,
    pub converging: bool,
}

/// Empirical modulus of continuity of `(s, t) -> phi_{s,t}` on `set`.
///
/// `(s', t')` ranges over the vertices and edge midpoints of the `l^1` ball of
/// radius `rho` around `(s, t)`, restricted to `0 <= s' <= t'`.
pub fn joint_continuity_probe(
    family: &EvolutionFamily,
    s: f64,
    t: f64,
    set: &CompactSet,
    radius: f64,
    n: usize,
) -> Result<ContinuityProbe> {
    if s > t {
        return Err(Error::ReversedWindow { s, t });
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be non-negative, got {radius}")));
    }
    let domain = family.domain();
    set.require_inside(&domain)?;
    let points = crate::sampling::compact_points(set, domain.dim(), n.max(1));
    let base: Vec<Point> = points
        .par_iter()
        .map(|z| family.evaluate_phi(s, t, z))
        .collect::<Result<_>>()?;
    let offsets = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.5, 0.5),
        (-0.5, -0.5),
        (0.5, -0.5),
        (-0.5, 0.5),
    ];
    let radii = vec![radius, 0.5 * radius, 0.25 * radius];
    let moduli: Vec<f64> = radii
        .iter()
        .map(|&rho| -> Result<f64> {
            let windows: Vec<(f64, f64)> = offsets
                .iter()
                .map(|(a, b)| (s + a * rho, t + b * rho))
                .filter(|&(a, b)| a >= 0.0 && a <= b)
                .collect();
            let worst = points
                .par_iter()
                .zip(base.par_iter())
                .map(|(z, phi)| {
                    windows.iter().try_fold(0.0f64, |m, &(a, b)| {
                        Ok(m.max(family.evaluate_phi(a, b, z)?.distance(phi)))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(worst.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let converging = moduli[0] <= 1e-12 || (moduli[2] <= 0.75 * moduli[0] && moduli[1] <= moduli[0] * (1.0 + 1e-9));
    Ok(ContinuityProbe {
        modulus: moduli[0],
        radii,
        moduli,
        converging,
    })
}
