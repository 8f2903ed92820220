//! Weak holomorphic vector fields of order `d`.
//!
//! A field is a parametric family (radial, Berkson-Porta, linear, polynomial
//! on the disc), a gluing of such families in time, or a user-supplied
//! evaluator. All time dependence goes through [`TimeFunction`], so bound
//! certificates can be built exactly.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{CompactSet, Domain, Point, Tangent};
use crate::sampling::compact_points;
use crate::timefn::{ComplexTimeFunction, TimeFunction};

pub type CMatrix = DMatrix<Complex64>;

/// Points on each Cauchy quadrature circle.
const CAUCHY_POINTS: usize = 64;
/// Inflation applied to sampled bound certificates.
pub const SAMPLED_SAFETY_FACTOR: f64 = 1.1;

/// Integrability order `d` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Order(pub f64);

impl Order {
    pub const INFINITE: Order = Order(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn validate(self) -> Result<()> {
        if self.0 >= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("order must be >= 1, got {}", self.0)))
        }
    }
}

impl Default for Order {
    fn default() -> Self {
        Order::INFINITE
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Order(v)),
            Raw::Text(s) if s == "inf" || s == "infinity" => Ok(Order::INFINITE),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("invalid order {s:?}"))),
        }
    }
}

/// Point mass of a Herglotz measure on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Position `e^{i angle}` on the circle.
    pub angle: f64,
    pub mass: f64,
}

/// `p(z, t) = scale(t) * (real_shift + i imag_shift + sum_k m_k (zeta_k + z) / (zeta_k - z))`,
/// which has non-negative real part on the disc when `real_shift >= 0`, `m_k >= 0`
/// and `scale >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerglotzFunction {
    #[serde(default = "unit_scale")]
    pub scale: TimeFunction,
    #[serde(default)]
    pub real_shift: f64,
    #[serde(default)]
    pub imag_shift: f64,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

fn unit_scale() -> TimeFunction {
    TimeFunction::constant(1.0)
}

impl HerglotzFunction {
    /// `p(z) = (1 + z) / (1 - z)`.
    pub fn cayley() -> Self {
        HerglotzFunction {
            scale: unit_scale(),
            real_shift: 0.0,
            imag_shift: 0.0,
            atoms: vec![Atom { angle: 0.0, mass: 1.0 }],
        }
    }

    pub fn constant(value: Complex64) -> Self {
        HerglotzFunction {
            scale: unit_scale(),
            real_shift: value.re,
            imag_shift: value.im,
            atoms: Vec::new(),
        }
    }

    fn value(&self, z: Complex64, t: f64) -> Complex64 {
        let mut acc = Complex64::new(self.real_shift, self.imag_shift);
        for a in &self.atoms {
            let zeta = Complex64::from_polar(1.0, a.angle);
            acc += a.mass * (zeta + z) / (zeta - z);
        }
        self.scale.value(t) * acc
    }

    fn derivative(&self, z: Complex64, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            let zeta = Complex64::from_polar(1.0, a.angle);
            acc += a.mass * 2.0 * zeta / ((zeta - z) * (zeta - z));
        }
        self.scale.value(t) * acc
    }

    /// `sup_{|z| <= r} |p(z, t)| / |scale(t)|`.
    fn sup_factor(&self, r: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass.abs()).sum();
        Complex64::new(self.real_shift, self.imag_shift).norm() + atoms * (1.0 + r) / (1.0 - r)
    }

    fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        if self.atoms.iter().any(|a| !(a.mass.is_finite() && a.angle.is_finite())) {
            return Err(Error::InvalidParameter("non-finite Herglotz atom".into()));
        }
        Ok(())
    }
}

type Evaluator = dyn Fn(&Point, f64) -> Point + Send + Sync;
type DeclaredBound = dyn Fn(&CompactSet) -> TimeFunction + Send + Sync;

/// User-supplied field. Holomorphy in `z` and measurability in `t` are the
/// caller's responsibility; only the declared breakpoints and singular
/// exponent are used by the solver.
#[derive(Clone)]
pub struct CustomField {
    pub domain: Domain,
    pub evaluator: Arc<Evaluator>,
    pub declared_bound: Option<Arc<DeclaredBound>>,
    pub breakpoints: Vec<f64>,
    pub singular_exponent: f64,
}

impl CustomField {
    pub fn new<F>(domain: Domain, evaluator: F) -> Self
    where
        F: Fn(&Point, f64) -> Point + Send + Sync + 'static,
    {
        CustomField {
            domain,
            evaluator: Arc::new(evaluator),
            declared_bound: None,
            breakpoints: Vec::new(),
            singular_exponent: 0.0,
        }
    }

    pub fn with_bound<B>(mut self, bound: B) -> Self
    where
        B: Fn(&CompactSet) -> TimeFunction + Send + Sync + 'static,
    {
        self.declared_bound = Some(Arc::new(bound));
        self
    }
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField")
            .field("domain", &self.domain)
            .field("declared_bound", &self.declared_bound.is_some())
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldKind {
    /// `G(z, t) = -c(t) z`
    Radial { c: TimeFunction, domain: Domain },
    /// `G(z, t) = (z - tau(t)) (conj(tau(t)) z - 1) p(z, t)` on the disc
    BerksonPorta {
        tau: ComplexTimeFunction,
        p: HerglotzFunction,
    },
    /// `G(z, t) = A(t) z`
    Linear {
        matrix: Vec<Vec<ComplexTimeFunction>>,
        domain: Domain,
    },
    /// `G(z, t) = sum_k a_k(t) z^k` on the disc
    PolynomialDisc { coeffs: Vec<ComplexTimeFunction> },
    /// `pieces[k]` on `[breakpoints[k-1], breakpoints[k])`
    PiecewiseTime {
        breakpoints: Vec<f64>,
        pieces: Vec<FieldSpec>,
    },
    /// `factor * G`
    Scaled { factor: f64, field: Box<FieldSpec> },
    #[serde(skip)]
    Custom(CustomField),
}

/// A weak holomorphic vector field together with its declared order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    #[serde(default)]
    pub order: Order,
}

/// Time-function bound `|G(z, t)| <= C(t)` on a compact set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub set: CompactSet,
    pub horizon: f64,
    pub order: Order,
    pub bound: TimeFunction,
    pub ld_norm: f64,
    /// False when the bound was obtained by sampling.
    pub exact: bool,
}

/// Lipschitz bound `|G(z,t) - G(w,t)| <= C~(t) |z - w|` on a polydisc.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzCertificate {
    pub radius: f64,
    pub enclosing_radius: f64,
    pub horizon: f64,
    pub order: Order,
    pub bound: TimeFunction,
    pub ld_norm: f64,
}

/// Polydisc `max_j |z_j| <= radius` with an optional enclosing radius for the
/// Cauchy estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolydiscRegion {
    pub radius: f64,
    #[serde(default)]
    pub enclosing_radius: Option<f64>,
}

impl PolydiscRegion {
    pub fn new(radius: f64) -> Self {
        PolydiscRegion {
            radius,
            enclosing_radius: None,
        }
    }

    pub fn with_enclosing(radius: f64, enclosing: f64) -> Self {
        PolydiscRegion {
            radius,
            enclosing_radius: Some(enclosing),
        }
    }
}

impl FieldSpec {
    pub fn new(kind: FieldKind) -> Self {
        FieldSpec {
            kind,
            order: Order::INFINITE,
        }
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = Order(order);
        self
    }

    pub fn radial(c: TimeFunction, domain: Domain) -> Self {
        FieldSpec::new(FieldKind::Radial { c, domain })
    }

    pub fn radial_constant(c: f64, domain: Domain) -> Self {
        FieldSpec::radial(TimeFunction::constant(c), domain)
    }

    pub fn berkson_porta(tau: Complex64, p: HerglotzFunction) -> Self {
        FieldSpec::new(FieldKind::BerksonPorta {
            tau: ComplexTimeFunction::constant(tau),
            p,
        })
    }

    pub fn linear_constant(matrix: &CMatrix, domain: Domain) -> Self {
        let rows = (0..matrix.nrows())
            .map(|i| {
                (0..matrix.ncols())
                    .map(|j| ComplexTimeFunction::constant(matrix[(i, j)]))
                    .collect()
            })
            .collect();
        FieldSpec::new(FieldKind::Linear { matrix: rows, domain })
    }

    /// Polynomial on the disc with constant complex coefficients.
    pub fn polynomial(coeffs: &[Complex64]) -> Self {
        FieldSpec::new(FieldKind::PolynomialDisc {
            coeffs: coeffs.iter().map(|&c| ComplexTimeFunction::constant(c)).collect(),
        })
    }

    pub fn piecewise(breakpoints: Vec<f64>, pieces: Vec<FieldSpec>) -> Self {
        FieldSpec::new(FieldKind::PiecewiseTime { breakpoints, pieces })
    }

    pub fn custom(field: CustomField) -> Self {
        FieldSpec::new(FieldKind::Custom(field))
    }

    /// The field `factor * G`, with the same order.
    pub fn scaled(&self, factor: f64) -> Self {
        FieldSpec {
            kind: FieldKind::Scaled {
                factor,
                field: Box::new(self.clone()),
            },
            order: self.order,
        }
    }

    /// The zero field on `domain`.
    pub fn zero(domain: Domain) -> Self {
        FieldSpec::radial_constant(0.0, domain)
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            FieldKind::Radial { domain, .. } | FieldKind::Linear { domain, .. } => *domain,
            FieldKind::BerksonPorta { .. } | FieldKind::PolynomialDisc { .. } => Domain::UnitDisc,
            FieldKind::PiecewiseTime { pieces, .. } => pieces[0].domain(),
            FieldKind::Scaled { field, .. } => field.domain(),
            FieldKind::Custom(c) => c.domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.order.validate()?;
        let domain = self.domain();
        domain.validate()?;
        match &self.kind {
            FieldKind::Radial { c, .. } => c.validate(),
            FieldKind::BerksonPorta { tau, p } => {
                tau.validate()?;
                p.validate()?;
                if let Some(t) = tau.as_constant() {
                    if t.norm() > 1.0 + 1e-15 {
                        return Err(Error::InvalidParameter(format!("|tau| = {} > 1", t.norm())));
                    }
                }
                Ok(())
            }
            FieldKind::Linear { matrix, .. } => {
                let n = domain.dim();
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidParameter(format!("linear field needs a {n}x{n} matrix")));
                }
                matrix.iter().flatten().try_for_each(|a| a.validate())
            }
            FieldKind::PolynomialDisc { coeffs } => coeffs.iter().try_for_each(|a| a.validate()),
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                if pieces.is_empty() || pieces.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidParameter(
                        "piecewise field needs one more piece than breakpoints".into(),
                    ));
                }
                if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0))
                    || breakpoints.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::InvalidParameter(
                        "breakpoints must be positive and strictly increasing".into(),
                    ));
                }
                for p in pieces {
                    p.validate()?;
                    if p.domain() != domain {
                        return Err(Error::InvalidParameter("pieces live on different domains".into()));
                    }
                }
                Ok(())
            }
            FieldKind::Scaled { factor, field } => {
                if !factor.is_finite() {
                    return Err(Error::InvalidParameter(format!("scale factor {factor}")));
                }
                field.validate()
            }
            FieldKind::Custom(_) => Ok(()),
        }
    }

    /// Sorted time breakpoints in `(0, inf)` of every time function involved.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            FieldKind::Radial { c, .. } => c.breakpoints(),
            FieldKind::BerksonPorta { tau, p } => {
                let mut b = tau.breakpoints();
                b.extend(p.scale.breakpoints());
                b
            }
            FieldKind::Linear { matrix, .. } => matrix.iter().flatten().flat_map(|a| a.breakpoints()).collect(),
            FieldKind::PolynomialDisc { coeffs } => coeffs.iter().flat_map(|a| a.breakpoints()).collect(),
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                let mut b = breakpoints.clone();
                b.extend(pieces.iter().flat_map(|p| p.breakpoints()));
                b
            }
            FieldKind::Scaled { field, .. } => field.breakpoints(),
            FieldKind::Custom(c) => c.breakpoints.clone(),
        };
        out.retain(|&b| b > 0.0);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Exponent of the `t^{-alpha}` blow-up at `t = 0+`.
    pub fn singular_exponent(&self) -> f64 {
        match &self.kind {
            FieldKind::Radial { c, .. } => c.singular_exponent(),
            FieldKind::BerksonPorta { tau, p } => tau.singular_exponent().max(p.scale.singular_exponent()),
            FieldKind::Linear { matrix, .. } => matrix
                .iter()
                .flatten()
                .map(|a| a.singular_exponent())
                .fold(0.0, f64::max),
            FieldKind::PolynomialDisc { coeffs } => coeffs.iter().map(|a| a.singular_exponent()).fold(0.0, f64::max),
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                pieces[breakpoints.partition_point(|&b| b <= 0.0)].singular_exponent()
            }
            FieldKind::Scaled { field, .. } => field.singular_exponent(),
            FieldKind::Custom(c) => c.singular_exponent,
        }
    }

    pub fn evaluate(&self, z: &Point, t: f64) -> Result<Tangent> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidTime(t));
        }
        if !self.domain().contains(z)? {
            return Err(Error::OutsideDomain(z.clone()));
        }
        Ok(self.evaluate_unchecked(z, t))
    }

    /// Evaluation without domain or time checks (used inside the integrators).
    pub fn evaluate_unchecked(&self, z: &Point, t: f64) -> Tangent {
        match &self.kind {
            FieldKind::Radial { c, .. } => z.scale(Complex64::new(-c.value(t), 0.0)),
            FieldKind::BerksonPorta { tau, p } => {
                let tau = tau.value(t);
                let x = z[0];
                Point(vec![(x - tau) * (tau.conj() * x - 1.0) * p.value(x, t)])
            }
            FieldKind::Linear { matrix, .. } => Point(
                matrix
                    .iter()
                    .map(|row| row.iter().zip(z.coords()).map(|(a, x)| a.value(t) * x).sum())
                    .collect(),
            ),
            FieldKind::PolynomialDisc { coeffs } => {
                let x = z[0];
                let v = coeffs
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, a| acc * x + a.value(t));
                Point(vec![v])
            }
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                pieces[breakpoints.partition_point(|&b| b <= t)].evaluate_unchecked(z, t)
            }
            FieldKind::Scaled { factor, field } => &field.evaluate_unchecked(z, t) * *factor,
            FieldKind::Custom(c) => (c.evaluator)(z, t),
        }
    }

    /// Holomorphic Jacobian `dG_i / dz_j` at `(z, t)`.
    pub fn jacobian(&self, z: &Point, t: f64) -> Result<CMatrix> {
        if !self.domain().contains(z)? {
            return Err(Error::OutsideDomain(z.clone()));
        }
        self.jacobian_unchecked(z, t)
    }

    pub(crate) fn jacobian_unchecked(&self, z: &Point, t: f64) -> Result<CMatrix> {
        let n = self.dim();
        Ok(match &self.kind {
            FieldKind::Radial { c, .. } => CMatrix::from_diagonal_element(n, n, Complex64::new(-c.value(t), 0.0)),
            FieldKind::BerksonPorta { tau, p } => {
                let tau = tau.value(t);
                let x = z[0];
                let a = x - tau;
                let b = tau.conj() * x - 1.0;
                let d = b * p.value(x, t) + a * tau.conj() * p.value(x, t) + a * b * p.derivative(x, t);
                CMatrix::from_element(1, 1, d)
            }
            FieldKind::Linear { matrix, .. } => CMatrix::from_fn(n, n, |i, j| matrix[i][j].value(t)),
            FieldKind::PolynomialDisc { coeffs } => {
                let x = z[0];
                let d = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, a)| acc * x + a.value(t) * k as f64);
                CMatrix::from_element(1, 1, d)
            }
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                pieces[breakpoints.partition_point(|&b| b <= t)].jacobian_unchecked(z, t)?
            }
            FieldKind::Scaled { factor, field } => field.jacobian_unchecked(z, t)? * Complex64::new(*factor, 0.0),
            FieldKind::Custom(_) => self.jacobian_cauchy(z, t)?,
        })
    }

    /// Jacobian from the Cauchy integral: trapezoid rule with 64 nodes on
    /// circles of half the distance to the boundary.
    pub fn jacobian_cauchy(&self, z: &Point, t: f64) -> Result<CMatrix> {
        let domain = self.domain();
        let n = domain.dim();
        let mut jac = CMatrix::zeros(n, n);
        for j in 0..n {
            let gap = match domain {
                Domain::UnitDisc | Domain::UnitBall { .. } => 1.0 - z.norm(),
                Domain::Polydisc { .. } => 1.0 - z[j].norm(),
            };
            let radius = 0.5 * gap;
            if !(radius > 0.0) {
                return Err(Error::QuadratureExitsDomain { radius });
            }
            for k in 0..CAUCHY_POINTS {
                let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / CAUCHY_POINTS as f64);
                let g = self.evaluate_unchecked(&z.shifted(j, w * radius), t);
                for i in 0..n {
                    jac[(i, j)] += g[i] / (w * radius);
                }
            }
        }
        Ok(jac / Complex64::new(CAUCHY_POINTS as f64, 0.0))
    }

    /// `C(t)` with `|G(z, t)| <= C(t)` on `set` for a.e. `t in [0, horizon]`,
    /// and its `L^d` norm.
    pub fn bound_certificate(&self, set: &CompactSet, horizon: f64, order: f64) -> Result<BoundCertificate> {
        Order(order).validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        set.require_inside(&self.domain())?;
        let (bound, exact) = self.bound_function(set, horizon)?;
        let ld_norm = bound.ld_norm(horizon, order)?;
        Ok(BoundCertificate {
            set: *set,
            horizon,
            order: Order(order),
            bound,
            ld_norm,
            exact,
        })
    }

    fn bound_function(&self, set: &CompactSet, horizon: f64) -> Result<(TimeFunction, bool)> {
        let n = self.dim();
        let r = set.sup_norm(n);
        Ok(match &self.kind {
            FieldKind::Radial { c, .. } => (c.clone().abs().scaled(r), true),
            FieldKind::BerksonPorta { tau, p } => {
                // |tau| <= 1 on the closed disc; use the exact modulus when tau is constant
                let tau_sup = tau.as_constant().map(|t| t.norm()).unwrap_or(1.0);
                let factor = (r + tau_sup) * (1.0 + tau_sup * r) * p.sup_factor(r);
                (p.scale.clone().abs().scaled(factor), true)
            }
            FieldKind::Linear { matrix, .. } => {
                let entries: Vec<TimeFunction> = matrix
                    .iter()
                    .flatten()
                    .flat_map(|a| [a.re.clone(), a.im.clone()])
                    .collect();
                let norm = TimeFunction::Norm { terms: entries };
                let frobenius = if matrix.iter().flatten().all(|a| a.as_constant().is_some()) {
                    TimeFunction::constant(norm.value(0.0))
                } else {
                    norm
                };
                (frobenius.scaled(r), true)
            }
            FieldKind::PolynomialDisc { coeffs } => {
                let terms: Vec<TimeFunction> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a.modulus().scaled(r.powi(k as i32)))
                    .collect();
                let bound = if terms.iter().all(|e| e.as_constant().is_some()) {
                    TimeFunction::constant(terms.iter().map(|e| e.value(0.0)).sum())
                } else {
                    TimeFunction::Sum { terms }
                };
                (bound, true)
            }
            FieldKind::PiecewiseTime { breakpoints, pieces } => {
                let mut exact = true;
                let mut parts = Vec::with_capacity(pieces.len());
                for p in pieces {
                    let (f, e) = p.bound_function(set, horizon)?;
                    exact &= e;
                    parts.push(f);
                }
                (
                    TimeFunction::Piecewise {
                        breakpoints: breakpoints.clone(),
                        pieces: parts,
                    },
                    exact,
                )
            }
            FieldKind::Scaled { factor, field } => {
                let (f, e) = field.bound_function(set, horizon)?;
                (f.scaled(factor.abs()), e)
            }
            FieldKind::Custom(c) => match &c.declared_bound {
                Some(b) => (b(set), true),
                None => (self.sampled_bound(set, horizon), false),
            },
        })
    }

    /// Piecewise-constant envelope of `|G|` sampled on `set`, inflated by
    /// [`SAMPLED_SAFETY_FACTOR`].
    fn sampled_bound(&self, set: &CompactSet, horizon: f64) -> TimeFunction {
        const CELLS: usize = 64;
        let pts = compact_points(set, self.dim(), 48);
        let mut cuts: Vec<f64> = (1..CELLS).map(|k| horizon * k as f64 / CELLS as f64).collect();
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b < horizon));
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut edges = vec![0.0];
        edges.extend(cuts.iter().copied());
        edges.push(horizon);
        let values: Vec<f64> = edges
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let times = [lo + 0.01 * (hi - lo), 0.5 * (lo + hi), hi - 0.01 * (hi - lo)];
                let mut m: f64 = 0.0;
                for &t in &times {
                    for p in &pts {
                        m = m.max(self.evaluate_unchecked(p, t).norm());
                    }
                }
                SAMPLED_SAFETY_FACTOR * m
            })
            .collect();
        let mut values = values;
        // beyond the horizon keep the last level
        values.push(*values.last().unwrap());
        let mut breakpoints = cuts;
        breakpoints.push(horizon);
        TimeFunction::piecewise_constant(breakpoints, &values)
    }

    /// Lipschitz certificate on the polydisc `P` from the coordinate-wise
    /// Cauchy estimate on an enclosing polydisc `P~`:
    /// `C~(t) = sqrt(n) * r~ / (r~ - r)^2 * C_{P~}(t)`.
    pub fn lipschitz_certificate(
        &self,
        region: &PolydiscRegion,
        horizon: f64,
        order: f64,
    ) -> Result<LipschitzCertificate> {
        let domain = self.domain();
        let n = domain.dim();
        let max_radius = match domain {
            Domain::Polydisc { .. } => 1.0,
            Domain::UnitDisc | Domain::UnitBall { .. } => 1.0 / (n as f64).sqrt(),
        };
        let r = region.radius;
        if !(r >= 0.0 && r < max_radius) {
            return Err(Error::NoEnclosingPolydisc { radius: r });
        }
        let enclosing = region.enclosing_radius.unwrap_or(0.5 * (r + max_radius));
        if !(enclosing > r && enclosing < max_radius) {
            return Err(Error::NoEnclosingPolydisc { radius: r });
        }
        let outer = self.bound_certificate(&CompactSet::Polydisc { radius: enclosing }, horizon, order)?;
        let factor = (n as f64).sqrt() * enclosing / ((enclosing - r) * (enclosing - r));
        let bound = outer.bound.scaled(factor);
        let ld_norm = factor * outer.ld_norm;
        Ok(LipschitzCertificate {
            radius: r,
            enclosing_radius: enclosing,
            horizon,
            order: Order(order),
            bound,
            ld_norm,
        })
    }

    /// Relative Cauchy-Riemann residual of `z -> G(z, t)` at `z`.
    pub fn holomorphy_residual(&self, z: &Point, t: f64) -> Result<f64> {
        let h = 1e-3 * self.domain().boundary_gap(z);
        cauchy_riemann_residual(|p| Ok(self.evaluate_unchecked(p, t)), z, h)
    }
}

impl BoundCertificate {
    /// Whether `|G(z, t)| <= C(t) + slack` at one point.
    pub fn dominates(&self, field: &FieldSpec, z: &Point, t: f64, slack: f64) -> bool {
        field.evaluate_unchecked(z, t).norm() <= self.bound.value(t) + slack
    }
}

/// Largest relative mismatch between the derivative along real and
/// imaginary coordinate increments (fourth-order central differences).
pub fn cauchy_riemann_residual<F>(f: F, z: &Point, h: f64) -> Result<f64>
where
    F: Fn(&Point) -> Result<Point>,
{
    let quotient = |j: usize, dir: Complex64| -> Result<Point> {
        let step = dir * h;
        let p1 = f(&z.shifted(j, step))?;
        let m1 = f(&z.shifted(j, -step))?;
        let p2 = f(&z.shifted(j, step * 2.0))?;
        let m2 = f(&z.shifted(j, -step * 2.0))?;
        let num = &(&(&p1 - &m1) * 8.0) - &(&p2 - &m2);
        Ok(num.scale(1.0 / (step * 12.0)))
    };
    let mut worst: f64 = 0.0;
    for j in 0..z.dim() {
        let along_real = quotient(j, Complex64::new(1.0, 0.0))?;
        let along_imag = quotient(j, Complex64::new(0.0, 1.0))?;
        let scale = along_real.norm().max(1.0);
        worst = worst.max(along_real.distance(&along_imag) / scale);
    }
    Ok(worst)
}
