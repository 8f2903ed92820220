//! Transport matrix `dH/deta = -H A(eta)`, `H(s) = Id`, along a trajectory,
//! where `A(eta)` is the field Jacobian at `phi_{s,eta}(z0)`. Its inverse
//! `H(t)^{-1}` is the complex derivative of `z -> phi_{s,t}(z)` at `z0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{family_derivative, Backend, EvolutionFamily};
use crate::fields::{CMatrix, FieldSpec};
use crate::geometry::{Domain, Point};
use crate::ode::{self, OdeSolution, Stop};
use crate::solver::{check_field_domain, SolverConfig};

/// Condition numbers above this flag the inverse as unreliable.
pub const CONDITION_THRESHOLD: f64 = 1e12;

/// Steps used to validate the difference-quotient limit.
pub const RICHARDSON_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Clone, Debug)]
pub struct TransportSample {
    pub t: f64,
    pub x: Point,
    pub h: CMatrix,
    /// 1-norm condition number of `H`.
    pub condition: f64,
}

#[derive(Clone, Debug)]
pub struct TransportState {
    pub s: f64,
    pub z0: Point,
    pub samples: Vec<TransportSample>,
    dense: OdeSolution,
}

#[derive(Clone, Debug)]
pub struct FlowDerivative {
    pub matrix: CMatrix,
    pub condition: f64,
    /// Condition number above [`CONDITION_THRESHOLD`].
    pub flagged: bool,
}

fn unpack(y: &[Complex64], n: usize) -> (Point, CMatrix) {
    (Point(y[..n].to_vec()), CMatrix::from_row_slice(n, n, &y[n..]))
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn invert(h: &CMatrix) -> Option<(CMatrix, f64)> {
    let inv = h.clone().lu().try_inverse()?;
    let cond = one_norm(h) * one_norm(&inv);
    cond.is_finite().then_some((inv, cond))
}

/// Co-integrate the trajectory and `H` on `[s, t]` with one controller.
pub fn transport_matrix(
    field: &FieldSpec,
    domain: &Domain,
    s: f64,
    t: f64,
    z0: &Point,
    cfg: &SolverConfig,
) -> Result<TransportState> {
    check_field_domain(field, domain)?;
    cfg.validate()?;
    if !(s >= 0.0) {
        return Err(Error::InvalidTime(s));
    }
    if s > t {
        return Err(Error::ReversedWindow { s, t });
    }
    if !domain.contains(z0)? {
        return Err(Error::OutsideDomain(z0.clone()));
    }
    let n = domain.dim();
    let mut y0 = z0.0.clone();
    y0.extend(CMatrix::identity(n, n).transpose().iter());
    let rhs = |tau: f64, y: &[Complex64], out: &mut [Complex64]| {
        let (x, h) = unpack(y, n);
        out[..n].copy_from_slice(&field.evaluate_unchecked(&x, tau).0);
        match field.jacobian_unchecked(&x, tau) {
            Ok(a) => {
                let dh = -(h * a);
                out[n..].copy_from_slice(dh.transpose().as_slice());
            }
            Err(_) => out[n..].fill(Complex64::new(f64::NAN, 0.0)),
        }
    };
    let dense = ode::integrate(
        rhs,
        |y| domain.boundary_gap(&Point(y[..n].to_vec())),
        s,
        &y0,
        t,
        &field.breakpoints(),
        field.singular_exponent(),
        &cfg.controls(),
    );
    let samples: Vec<TransportSample> = dense
        .samples
        .iter()
        .map(|(tau, y)| {
            let (x, h) = unpack(y, n);
            let condition = invert(&h).map_or(f64::INFINITY, |(_, c)| c);
            TransportSample {
                t: *tau,
                x,
                h,
                condition,
            }
        })
        .collect();
    match dense.stop {
        None => {}
        Some(Stop::Escape { time, .. }) => return Err(Error::Escaped { time, target: t }),
        Some(Stop::Underflow { time }) => {
            return Err(Error::StepUnderflow {
                time,
                state: samples.last().unwrap().x.clone(),
            })
        }
    }
    Ok(TransportState {
        s,
        z0: z0.clone(),
        samples,
        dense,
    })
}

impl TransportState {
    pub fn t_end(&self) -> f64 {
        self.samples.last().unwrap().t
    }

    /// `(x(t), H(t))` from the dense output.
    pub fn at(&self, t: f64) -> Result<(Point, CMatrix)> {
        let y = self
            .dense
            .eval(t)
            .ok_or_else(|| Error::InvalidParameter(format!("t = {t} outside the transport path")))?;
        Ok(unpack(&y, self.z0.dim()))
    }

    /// Structured-text export: per sample, `t`, the state and `H` as
    /// row-major `[re, im]` entries.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            t: f64,
            x: &'a Point,
            h: Vec<Vec<[f64; 2]>>,
            condition: f64,
        }
        let rows: Vec<Row> = self
            .samples
            .iter()
            .map(|p| Row {
                t: p.t,
                x: &p.x,
                h: p.h.row_iter().map(|r| r.iter().map(|c| [c.re, c.im]).collect()).collect(),
                condition: p.condition,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

/// `H(t)^{-1}` by LU with partial pivoting.
pub fn flow_derivative(state: &TransportState, t: f64) -> Result<FlowDerivative> {
    let (_, h) = state.at(t)?;
    let (matrix, condition) =
        invert(&h).ok_or_else(|| Error::InvalidParameter(format!("transport matrix is singular at t = {t}")))?;
    Ok(FlowDerivative {
        matrix,
        condition,
        flagged: condition > CONDITION_THRESHOLD,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolomorphyProbe {
    /// `max_j |D_h phi e_j - D_{ih} phi e_j|` for central quotients.
    pub residual: f64,
    /// `max_j |D_h phi e_j - dphi e_j|`; absent without a flow derivative.
    pub derivative_deviation: Option<f64>,
}

fn central_quotient(family: &EvolutionFamily, s: f64, t: f64, z0: &Point, j: usize, step: Complex64) -> Result<Point> {
    let domain = family.domain();
    let (zp, zm) = (z0.shifted(j, step), z0.shifted(j, -step));
    for p in [&zp, &zm] {
        if !domain.contains(p)? {
            return Err(Error::DomainExit(p.clone()));
        }
    }
    let diff = &family.evaluate_phi(s, t, &zp)? - &family.evaluate_phi(s, t, &zm)?;
    Ok(diff.scale(1.0 / (step * 2.0)))
}

/// Agreement of difference quotients along real and imaginary increments,
/// and (field-backed families) their deviation from the flow derivative.
pub fn holomorphy_residual(family: &EvolutionFamily, s: f64, t: f64, z0: &Point, h: f64) -> Result<HolomorphyProbe> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("probe step must be positive, got {h}")));
    }
    let derivative = match &family.backend {
        Backend::FieldBacked { .. } => Some(family_derivative(family, s, t, z0)?),
        Backend::ClosedForm(_) => None,
    };
    let mut residual: f64 = 0.0;
    let mut deviation: f64 = 0.0;
    for j in 0..z0.dim() {
        let real = central_quotient(family, s, t, z0, j, Complex64::new(h, 0.0))?;
        let imag = central_quotient(family, s, t, z0, j, Complex64::new(0.0, h))?;
        residual = residual.max(real.distance(&imag));
        if let Some(d) = &derivative {
            let col = Point(d.column(j).iter().copied().collect());
            deviation = deviation.max(real.distance(&col));
        }
    }
    Ok(HolomorphyProbe {
        residual,
        derivative_deviation: derivative.map(|_| deviation),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichardsonCheck {
    pub steps: Vec<f64>,
    /// `|(phi(z0 + h v) - phi(z0)) / h - dphi v|` per step.
    pub errors: Vec<f64>,
    /// Error of the extrapolated quotient from the two smallest steps.
    pub extrapolated_error: f64,
    pub observed_order: f64,
    /// Observed order at least 1, or errors already at solver noise.
    pub passes: bool,
}

/// Validate `lim (phi(z0 + h v) - phi(z0)) / h = H(t)^{-1} v` along
/// [`RICHARDSON_STEPS`].
pub fn richardson_check(family: &EvolutionFamily, s: f64, t: f64, z0: &Point, v: &Point) -> Result<RichardsonCheck> {
    let derivative = family_derivative(family, s, t, z0)?;
    let v_col = nalgebra::DVector::from_column_slice(v.coords());
    let target = Point((derivative * v_col).iter().copied().collect());
    let base = family.evaluate_phi(s, t, z0)?;
    let domain = family.domain();
    let quotients: Vec<Point> = RICHARDSON_STEPS
        .iter()
        .map(|&h| {
            let zh = &*z0 + &(v * h);
            if !domain.contains(&zh)? {
                return Err(Error::DomainExit(zh));
            }
            Ok(&(&family.evaluate_phi(s, t, &zh)? - &base) * (1.0 / h))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = quotients.iter().map(|q| q.distance(&target)).collect();
    // forward quotients have error c h + O(h^2): eliminate the linear term
    let ratio = RICHARDSON_STEPS[1] / RICHARDSON_STEPS[2];
    let extrapolated = &(&(&quotients[2] * ratio) - &quotients[1]) * (1.0 / (ratio - 1.0));
    let extrapolated_error = extrapolated.distance(&target);
    let observed_order = (errors[0] / errors[1]).log10() / (RICHARDSON_STEPS[0] / RICHARDSON_STEPS[1]).log10();
    let noise = 1e-9 * target.norm().max(1.0);
    Ok(RichardsonCheck {
        steps: RICHARDSON_STEPS.to_vec(),
        passes: errors[0] <= noise || observed_order >= 0.9,
        errors,
        extrapolated_error,
        observed_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::ClosedFormKind;

    fn tanh_field() -> FieldSpec {
        let one = Complex64::new(1.0, 0.0);
        FieldSpec::polynomial(&[one, Complex64::new(0.0, 0.0), -one])
    }

    #[test]
    fn transport_examples() {
        let d = Domain::UnitDisc;
        let cfg = SolverConfig::default();
        let radial = FieldSpec::radial_constant(1.0, d);
        let st = transport_matrix(&radial, &d, 0.0, 0.0, &Point::real(0.3), &cfg).unwrap();
        assert_eq!(st.samples[0].h, CMatrix::identity(1, 1));
        let st = transport_matrix(&radial, &d, 0.5, 1.5, &Point::real(0.3), &cfg).unwrap();
        assert!((st.at(1.5).unwrap().1[(0, 0)].re - 1f64.exp()).abs() < 1e-9);
        let fd = flow_derivative(&st, 1.5).unwrap();
        assert!((fd.matrix[(0, 0)].re - (-1f64).exp()).abs() < 1e-10);
        assert!(!fd.flagged);

        let st = transport_matrix(&tanh_field(), &d, 0.0, 1.0, &Point::real(0.0), &cfg).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let h = st.at(t).unwrap().1[(0, 0)];
            assert!((h.re - t.cosh().powi(2)).abs() < 1e-8, "{t} {h}");
        }
        let fd = flow_derivative(&st, 1.0).unwrap();
        assert!((fd.matrix[(0, 0)].re - 0.419_974_341_614_026_2).abs() < 1e-9);
    }

    #[test]
    fn ball_transport_matches_finite_differences() {
        let d = Domain::UnitBall { n: 2 };
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(-1.0, 0.5),
                Complex64::new(0.2, 0.0),
                Complex64::new(-0.2, 0.0),
                Complex64::new(-0.7, 0.0),
            ],
        );
        let f = FieldSpec::linear_constant(&m, d);
        let fam = EvolutionFamily::field_backed(f.clone(), SolverConfig::default());
        let z = Point::from_pairs(&[(0.2, 0.1), (-0.3, 0.2)]);
        let st = transport_matrix(&f, &d, 0.0, 1.0, &z, &SolverConfig::default()).unwrap();
        let exact = flow_derivative(&st, 1.0).unwrap().matrix;
        let fd = crate::evolution::finite_difference_jacobian(&fam, 0.0, 1.0, &z, 1e-4).unwrap();
        assert!((exact - fd).norm() < 1e-8);
    }

    #[test]
    fn holomorphy_examples() {
        let d = Domain::UnitDisc;
        let id = EvolutionFamily::closed_form(ClosedFormKind::Identity, d);
        let p = holomorphy_residual(&id, 0.0, 1.0, &Point::scalar(0.2, 0.1), 1e-4).unwrap();
        assert!(p.residual < 1e-11);
        let radial = EvolutionFamily::field_backed(FieldSpec::radial_constant(1.0, d), SolverConfig::default());
        let p = holomorphy_residual(&radial, 0.0, 1.0, &Point::scalar(0.2, 0.1), 1e-4).unwrap();
        assert!(p.residual <= 1e-7);
        assert!(p.derivative_deviation.unwrap() <= 1e-7);
        let re = EvolutionFamily::closed_form(ClosedFormKind::RealPart, d);
        let p = holomorphy_residual(&re, 0.0, 1.0, &Point::scalar(0.2, 0.1), 1e-4).unwrap();
        assert!(p.residual > 0.1);
        assert!(matches!(
            holomorphy_residual(&id, 0.0, 1.0, &Point::real(0.99), 0.1),
            Err(Error::DomainExit(_))
        ));
    }

    #[test]
    fn richardson_on_tanh_flow() {
        let fam = EvolutionFamily::field_backed(tanh_field(), SolverConfig::default());
        let r = richardson_check(&fam, 0.0, 1.0, &Point::real(0.1), &Point::real(1.0)).unwrap();
        assert!(r.passes, "{r:?}");
        assert!(r.observed_order > 0.9 && r.observed_order < 1.1);
        assert!(r.extrapolated_error < r.errors[2]);
    }

    #[test]
    fn export_is_row_major() {
        let d = Domain::UnitDisc;
        let st = transport_matrix(&FieldSpec::radial_constant(1.0, d), &d, 0.0, 0.5, &Point::real(0.1), &SolverConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&st.to_json().unwrap()).unwrap();
        assert_eq!(v[0]["h"][0][0][0], 1.0);
    }
}
