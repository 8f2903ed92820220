//! Sampled Herglotz classification: `(dk)_{(z,w)}(G(z,t), G(w,t)) <= 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldSpec;
use crate::geometry::{Domain, Point};
use crate::quadrature::split_at;
use crate::sampling::{random_pairs, DEFAULT_SEED};
use crate::solver::{check_field_domain, flow_to, SolverConfig};

/// Tolerance for closed-form directional derivatives.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Tolerance when the derivative comes from finite differences.
pub const FINITE_DIFFERENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No violation found, but the check is not conclusive (non-smooth
    /// distance on the polydisc).
    Advisory,
}

impl Verdict {
    /// Process exit code: 0 pass, 1 fail, 2 advisory.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Advisory => 2,
        }
    }

    /// Fail dominates advisory, which dominates pass.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Advisory, _) | (_, Advisory) => Advisory,
            _ => Pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub z: Point,
    pub w: Point,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerglotzReport {
    pub verdict: Verdict,
    pub worst_value: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
    pub tolerance: f64,
}

impl HerglotzReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairSample {
    /// Halton points of the ball/polydisc of radius `radius`, matched by a
    /// seeded shuffle.
    Random {
        count: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Explicit { pairs: Vec<(Point, Point)> },
}

fn default_radius() -> f64 {
    0.95
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl PairSample {
    pub fn random(count: usize) -> Self {
        PairSample::Random {
            count,
            radius: default_radius(),
            seed: DEFAULT_SEED,
        }
    }

    pub fn pairs(&self, domain: &Domain) -> Result<Vec<(Point, Point)>> {
        match self {
            PairSample::Random { count, radius, seed } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter("at least one pair is required".into()));
                }
                if !(*radius > 0.0 && *radius < 1.0) {
                    return Err(Error::InvalidParameter(format!("sample radius {radius} not in (0, 1)")));
                }
                Ok(random_pairs(domain, *count, *radius, *seed))
            }
            PairSample::Explicit { pairs } => {
                if pairs.is_empty() {
                    return Err(Error::InvalidParameter("at least one pair is required".into()));
                }
                for (z, w) in pairs {
                    if !domain.contains(z)? {
                        return Err(Error::OutsideDomain(z.clone()));
                    }
                    if !domain.contains(w)? {
                        return Err(Error::OutsideDomain(w.clone()));
                    }
                    if z == w {
                        return Err(Error::Diagonal);
                    }
                }
                Ok(pairs.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeSample {
    /// Given times; field breakpoints among them are skipped.
    Explicit { times: Vec<f64> },
    /// `per_piece` equally spaced midpoints inside every smooth piece of
    /// `[0, horizon]`.
    PieceMidpoints { horizon: f64, per_piece: usize },
}

impl TimeSample {
    pub fn times(&self, field: &FieldSpec) -> Result<Vec<f64>> {
        let breaks = field.breakpoints();
        let out: Vec<f64> = match self {
            TimeSample::Explicit { times } => {
                for &t in times {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(Error::InvalidTime(t));
                    }
                }
                times.iter().copied().filter(|t| !breaks.contains(t)).collect()
            }
            TimeSample::PieceMidpoints { horizon, per_piece } => {
                if !(*horizon > 0.0 && horizon.is_finite()) {
                    return Err(Error::InvalidTime(*horizon));
                }
                let m = (*per_piece).max(1);
                split_at(0.0, *horizon, &breaks)
                    .into_iter()
                    .flat_map(|(a, b)| (0..m).map(move |k| a + (b - a) * (k as f64 + 0.5) / m as f64))
                    .collect()
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidParameter("no admissible sample times".into()));
        }
        Ok(out)
    }
}

/// `(dk)_{(z,w)}(G(z,t), G(w,t))` for a single pair.
pub fn herglotz_value(field: &FieldSpec, domain: &Domain, z: &Point, w: &Point, t: f64) -> Result<f64> {
    let u = field.evaluate(z, t)?;
    let v = field.evaluate(w, t)?;
    Ok(domain.kobayashi_directional_derivative(z, w, &u, &v)?.value)
}

/// Max-reduction that is independent of the evaluation order: ties go to the
/// lower index and NaN counts as a violation.
fn worst_of(values: Vec<(usize, f64)>) -> Option<(usize, f64)> {
    values
        .into_iter()
        .map(|(i, v)| (i, if v.is_nan() { f64::INFINITY } else { v }))
        .reduce(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
}

fn verdict(domain: &Domain, worst: f64, tol: f64) -> Verdict {
    if worst > tol {
        Verdict::Fail
    } else if domain.has_smooth_distance() {
        Verdict::Pass
    } else {
        Verdict::Advisory
    }
}

pub fn check_herglotz(
    field: &FieldSpec,
    domain: &Domain,
    pairs: &PairSample,
    times: &TimeSample,
    tol: f64,
) -> Result<HerglotzReport> {
    check_field_domain(field, domain)?;
    field.validate()?;
    let pairs = pairs.pairs(domain)?;
    let times = times.times(field)?;
    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..times.len()).map(move |k| (p, k)))
        .collect();
    let values: Vec<(usize, f64)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(p, k))| herglotz_value(field, domain, &pairs[p].0, &pairs[p].1, times[k]).map(|v| (i, v)))
        .collect::<Result<_>>()?;
    let (i, worst) = worst_of(values).expect("non-empty sample");
    let (p, k) = jobs[i];
    Ok(HerglotzReport {
        verdict: verdict(domain, worst, tol),
        worst_value: worst,
        witness: Some(Witness {
            z: pairs[p].0.clone(),
            w: pairs[p].1.clone(),
            t: times[k],
        }),
        samples: jobs.len(),
        tolerance: tol,
    })
}

/// Derivative-free cross-check: `k(phi_{s,t}(z), phi_{s,t}(w)) - k(z, w)`
/// must not exceed `tol`. The witness time is `t`.
pub fn flow_contraction_check(
    field: &FieldSpec,
    domain: &Domain,
    s: f64,
    t: f64,
    pairs: &PairSample,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<HerglotzReport> {
    check_field_domain(field, domain)?;
    let pairs = pairs.pairs(domain)?;
    let values: Vec<(usize, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (z, w))| {
            let fz = flow_to(field, s, z, t, cfg)?;
            let fw = flow_to(field, s, w, t, cfg)?;
            Ok((i, domain.kobayashi_distance(&fz, &fw)? - domain.kobayashi_distance(z, w)?))
        })
        .collect::<Result<_>>()?;
    let (i, worst) = worst_of(values).expect("non-empty sample");
    Ok(HerglotzReport {
        verdict: if worst > tol { Verdict::Fail } else { Verdict::Pass },
        worst_value: worst,
        witness: Some(Witness {
            z: pairs[i].0.clone(),
            w: pairs[i].1.clone(),
            t,
        }),
        samples: pairs.len(),
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::HerglotzFunction;
    use crate::timefn::TimeFunction;
    use num_complex::Complex64;

    fn times() -> TimeSample {
        TimeSample::PieceMidpoints {
            horizon: 2.0,
            per_piece: 3,
        }
    }

    #[test]
    fn radial_fields() {
        let d = Domain::UnitDisc;
        let contracting = FieldSpec::radial_constant(1.0, d);
        let rep = check_herglotz(&contracting, &d, &PairSample::random(200), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let v = herglotz_value(&contracting, &d, &Point::real(0.5), &Point::real(0.0), 0.3).unwrap();
        assert!((v + 2.0 / 3.0).abs() < 1e-12);

        let expanding = FieldSpec::radial_constant(-1.0, d);
        let rep = check_herglotz(&expanding, &d, &PairSample::random(200), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let w = rep.witness.unwrap();
        let again = herglotz_value(&expanding, &d, &w.z, &w.w, w.t).unwrap();
        assert_eq!(again, rep.worst_value);
        let v = herglotz_value(&expanding, &d, &Point::real(0.5), &Point::real(0.0), 0.3).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_passes_with_zero() {
        let d = Domain::UnitBall { n: 2 };
        let rep = check_herglotz(&FieldSpec::zero(d), &d, &PairSample::random(50), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.worst_value, 0.0);
    }

    #[test]
    fn polydisc_pass_is_advisory() {
        let d = Domain::Polydisc { n: 2 };
        let f = FieldSpec::radial_constant(1.0, d);
        let rep = check_herglotz(&f, &d, &PairSample::random(100), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Advisory);
        let g = FieldSpec::radial_constant(-1.0, d);
        let rep = check_herglotz(&g, &d, &PairSample::random(100), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn berkson_porta_and_breakpoints() {
        let d = Domain::UnitDisc;
        let bp = FieldSpec::berkson_porta(Complex64::new(0.3, 0.2), HerglotzFunction::cayley());
        let rep = check_herglotz(&bp, &d, &PairSample::random(300), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");

        let pw = FieldSpec::radial(TimeFunction::piecewise_constant(vec![1.0], &[1.0, 0.5]), d);
        let ts = TimeSample::Explicit { times: vec![0.5, 1.0, 1.5] };
        assert_eq!(ts.times(&pw).unwrap(), vec![0.5, 1.5]);
    }

    #[test]
    fn report_is_reproducible() {
        let d = Domain::UnitDisc;
        let f = FieldSpec::radial_constant(-0.5, d);
        let a = check_herglotz(&f, &d, &PairSample::random(64), &times(), DEFAULT_TOL).unwrap();
        let b = check_herglotz(&f, &d, &PairSample::random(64), &times(), DEFAULT_TOL).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn flow_contraction_examples() {
        let d = Domain::UnitDisc;
        let cfg = SolverConfig::default();
        let pair = PairSample::Explicit {
            pairs: vec![(Point::real(0.5), Point::real(0.0))],
        };
        let f = FieldSpec::radial_constant(1.0, d);
        let rep = flow_contraction_check(&f, &d, 0.0, 1.0, &pair, &cfg, 0.0).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let expected = (0.5 * (-1f64).exp()).atanh() - 0.5f64.atanh();
        assert!((rep.worst_value - expected).abs() < 1e-9);

        let rep = flow_contraction_check(&f, &d, 0.4, 0.4, &pair, &cfg, 1e-12).unwrap();
        assert!(rep.worst_value.abs() <= 1e-12);

        let g = FieldSpec::radial_constant(-1.0, d);
        let rep = flow_contraction_check(&g, &d, 0.0, 0.3, &pair, &cfg, 1e-9).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(matches!(
            flow_contraction_check(&g, &d, 0.0, 1.0, &pair, &cfg, 1e-9),
            Err(Error::Escaped { .. })
        ));
    }
}
