//! Model hyperbolic domains (unit disc, unit ball, polydisc) and their
//! Kobayashi distance.
//!
//! Distances use the arctanh normalisation: on the disc
//! `k(z, w) = atanh |(z - w) / (1 - conj(w) z)|`, the ball uses the
//! automorphism-invariant extension of the same quantity and the polydisc
//! takes the maximum over its coordinate discs.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or tangent vector) of complex n-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<Complex64>);

/// Tangent vectors share the representation of points.
pub type Tangent = Point;

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Point(coords)
    }

    /// One-dimensional point `re + i im`.
    pub fn scalar(re: f64, im: f64) -> Self {
        Point(vec![Complex64::new(re, im)])
    }

    pub fn real(re: f64) -> Self {
        Point::scalar(re, 0.0)
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Point(pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Euclidean (Hermitian) norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest coordinate modulus.
    pub fn max_modulus(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Hermitian product `sum_i self_i * conj(other_i)`.
    pub fn inner(&self, other: &Point) -> Complex64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `self + h * e_j`.
    pub fn shifted(&self, j: usize, h: Complex64) -> Point {
        let mut p = self.clone();
        p.0[j] += h;
        p
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

impl Index<usize> for Point {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point(self.0.iter().map(|c| c * rhs).collect())
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(self.0.iter().map(|c| -c).collect())
    }
}

impl AddAssign<&Point> for Point {
    fn add_assign(&mut self, rhs: &Point) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

/// A complete hyperbolic model domain of complex n-space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    UnitDisc,
    UnitBall { n: usize },
    Polydisc { n: usize },
}

/// Closed compact set centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CompactSet {
    Ball { radius: f64 },
    Polydisc { radius: f64 },
}

/// Value of `(dk)_{(z,w)}(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalDerivative {
    /// Closed-form derivative (Dini upper derivative on the polydisc).
    pub value: f64,
    /// Finite-difference cross-check: symmetric where the distance is
    /// smooth, forward otherwise.
    pub finite_difference: f64,
    /// False when the polydisc distance has several active coordinates.
    pub smooth: bool,
}

impl Domain {
    pub fn dim(&self) -> usize {
        match *self {
            Domain::UnitDisc => 1,
            Domain::UnitBall { n } | Domain::Polydisc { n } => n,
        }
    }

    /// True when the Kobayashi distance is C^1 off the diagonal.
    pub fn has_smooth_distance(&self) -> bool {
        match *self {
            Domain::UnitDisc | Domain::UnitBall { .. } => true,
            Domain::Polydisc { n } => n == 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidParameter("domain dimension must be >= 1".into()));
        }
        Ok(())
    }

    /// `1 - |z|` on the ball, `1 - max_j |z_j|` on the polydisc.
    pub fn boundary_gap(&self, z: &Point) -> f64 {
        match self {
            Domain::UnitDisc | Domain::UnitBall { .. } => 1.0 - z.norm(),
            Domain::Polydisc { .. } => 1.0 - z.max_modulus(),
        }
    }

    pub fn contains(&self, z: &Point) -> Result<bool> {
        z.check_dim(self.dim())?;
        Ok(z.is_finite() && self.boundary_gap(z) > 0.0)
    }

    fn require_inside(&self, z: &Point) -> Result<()> {
        if self.contains(z)? {
            Ok(())
        } else {
            Err(Error::OutsideDomain(z.clone()))
        }
    }

    pub fn kobayashi_distance(&self, z: &Point, w: &Point) -> Result<f64> {
        self.require_inside(z)?;
        self.require_inside(w)?;
        Ok(self.distance_unchecked(z.coords(), w.coords()))
    }

    pub(crate) fn distance_unchecked(&self, z: &[Complex64], w: &[Complex64]) -> f64 {
        match self {
            Domain::UnitDisc | Domain::UnitBall { .. } => ball_distance(z, w),
            Domain::Polydisc { .. } => z
                .iter()
                .zip(w)
                .map(|(a, b)| ball_distance(std::slice::from_ref(a), std::slice::from_ref(b)))
                .fold(0.0, f64::max),
        }
    }

    /// Derivative at `h = 0` of `h -> k(z + h u, w + h v)`.
    pub fn kobayashi_directional_derivative(
        &self,
        z: &Point,
        w: &Point,
        u: &Tangent,
        v: &Tangent,
    ) -> Result<DirectionalDerivative> {
        self.require_inside(z)?;
        self.require_inside(w)?;
        u.check_dim(self.dim())?;
        v.check_dim(self.dim())?;
        if z == w {
            return Err(Error::Diagonal);
        }
        if u.norm_sqr() == 0.0 && v.norm_sqr() == 0.0 {
            return Ok(DirectionalDerivative {
                value: 0.0,
                finite_difference: 0.0,
                smooth: true,
            });
        }
        let (value, smooth) = match self {
            Domain::UnitDisc | Domain::UnitBall { .. } => {
                (ball_distance_derivative(z.coords(), w.coords(), u.coords(), v.coords()), true)
            }
            Domain::Polydisc { .. } => self.polydisc_dini(z, w, u, v),
        };
        let finite_difference = self.finite_difference(z, w, u, v, smooth);
        Ok(DirectionalDerivative {
            value,
            finite_difference,
            smooth,
        })
    }

    fn polydisc_dini(&self, z: &Point, w: &Point, u: &Point, v: &Point) -> (f64, bool) {
        let per_coord: Vec<f64> = (0..self.dim())
            .map(|j| ball_distance(&z.0[j..=j], &w.0[j..=j]))
            .collect();
        let kmax = per_coord.iter().cloned().fold(0.0, f64::max);
        let active: Vec<usize> = (0..self.dim())
            .filter(|&j| per_coord[j] >= kmax * (1.0 - 1e-12))
            .collect();
        // right derivative of a max of smooth functions: max over the active set
        let value = active
            .iter()
            .map(|&j| ball_distance_derivative(&z.0[j..=j], &w.0[j..=j], &u.0[j..=j], &v.0[j..=j]))
            .fold(f64::NEG_INFINITY, f64::max);
        (value, active.len() == 1)
    }

    fn finite_difference(&self, z: &Point, w: &Point, u: &Point, v: &Point, symmetric: bool) -> f64 {
        let gap = self.boundary_gap(z).min(self.boundary_gap(w));
        let scale = u.norm().max(v.norm());
        let h = 1e-5 * gap / scale;
        let k = |s: f64| {
            let zs: Vec<Complex64> = z.0.iter().zip(&u.0).map(|(a, b)| a + b * s).collect();
            let ws: Vec<Complex64> = w.0.iter().zip(&v.0).map(|(a, b)| a + b * s).collect();
            self.distance_unchecked(&zs, &ws)
        };
        if symmetric {
            (k(h) - k(-h)) / (2.0 * h)
        } else {
            (k(h) - k(0.0)) / h
        }
    }
}

impl CompactSet {
    pub fn radius(&self) -> f64 {
        match *self {
            CompactSet::Ball { radius } | CompactSet::Polydisc { radius } => radius,
        }
    }

    /// Largest Euclidean norm attained on the set in dimension `n`.
    pub fn sup_norm(&self, n: usize) -> f64 {
        match *self {
            CompactSet::Ball { radius } => radius,
            CompactSet::Polydisc { radius } => radius * (n as f64).sqrt(),
        }
    }

    pub fn contains(&self, z: &Point) -> bool {
        match *self {
            CompactSet::Ball { radius } => z.norm() <= radius,
            CompactSet::Polydisc { radius } => z.max_modulus() <= radius,
        }
    }

    /// Whether the set sits strictly inside `domain`.
    pub fn fits_in(&self, domain: &Domain) -> bool {
        let r = self.radius();
        if !(r >= 0.0) {
            return false;
        }
        match (self, domain) {
            (CompactSet::Polydisc { .. }, Domain::UnitDisc | Domain::UnitBall { .. }) => {
                r * (domain.dim() as f64).sqrt() < 1.0
            }
            _ => r < 1.0,
        }
    }

    pub fn require_inside(&self, domain: &Domain) -> Result<()> {
        if self.fits_in(domain) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "compact set {self:?} is not strictly inside {domain:?}"
            )))
        }
    }
}

/// Poincare distance on the unit ball (the disc when the slices have length one).
fn ball_distance(z: &[Complex64], w: &[Complex64]) -> f64 {
    let (num, den) = ball_rho_parts(z, w);
    let rho = (num.max(0.0) / den).sqrt();
    rho.min(1.0 - f64::EPSILON).atanh()
}

/// Numerator and denominator of the squared pseudo-hyperbolic distance.
///
/// The numerator `|z - w|^2 - (|z|^2 |w|^2 - |<z,w>|^2)` uses the Lagrange
/// identity for the second term, which keeps it free of cancellation.
fn ball_rho_parts(z: &[Complex64], w: &[Complex64]) -> (f64, f64) {
    let diff: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
    let mut lagrange = 0.0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            lagrange += (z[i] * w[j] - z[j] * w[i]).norm_sqr();
        }
    }
    let p: Complex64 = z.iter().zip(w).map(|(a, b)| a * b.conj()).sum();
    let den = (Complex64::new(1.0, 0.0) - p).norm_sqr();
    (diff - lagrange, den)
}

/// Closed-form derivative of the ball distance along `(u, v)` at `(z, w)`.
fn ball_distance_derivative(z: &[Complex64], w: &[Complex64], u: &[Complex64], v: &[Complex64]) -> f64 {
    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    };
    let zz = inner(z, z).re;
    let ww = inner(w, w).re;
    let p = inner(z, w);
    let dp = inner(u, w) + inner(z, v);
    let dzz = 2.0 * inner(z, u).re;
    let dww = 2.0 * inner(w, v).re;

    let zw: Vec<Complex64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
    let uv: Vec<Complex64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let d_diff = 2.0 * inner(&zw, &uv).re;
    let d_pp = 2.0 * (p.conj() * dp).re;
    let d_lagrange = dzz * ww + zz * dww - d_pp;

    let (num, den) = ball_rho_parts(z, w);
    let d_num = d_diff - d_lagrange;
    let one_minus_p = Complex64::new(1.0, 0.0) - p;
    let d_den = -2.0 * (one_minus_p.conj() * dp).re;

    let f = num / den;
    let df = (d_num * den - num * d_den) / (den * den);
    // k = atanh(sqrt f)  =>  dk = df / (2 sqrt(f) (1 - f))
    df / (2.0 * f.sqrt() * (1.0 - f))
}
