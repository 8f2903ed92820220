//! The closed vocabulary of time dependence.
//!
//! Every time function is piecewise smooth on `[0, inf)`, with at most a
//! declared integrable power singularity `t^{-alpha}` at `t = 0`. This is what
//! lets the solver and the certificates treat breakpoints and singular pieces
//! exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_segments, split_at, TimeMap};

const QUAD_SUBINTERVALS: usize = 32;
const SUP_SAMPLES: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant { value: f64 },
    /// `sum_k coeffs[k] t^k`
    Polynomial { coeffs: Vec<f64> },
    /// `scale * exp(rate t)`
    Exponential { scale: f64, rate: f64 },
    /// `offset + amplitude * sin(frequency t + phase)`
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `scale * t^{-alpha}` with `0 < alpha < 1`
    PowerSingular { scale: f64, alpha: f64 },
    /// `pieces[k]` on `[breakpoints[k-1], breakpoints[k])`
    Piecewise {
        breakpoints: Vec<f64>,
        pieces: Vec<TimeFunction>,
    },
    Scaled { factor: f64, inner: Box<TimeFunction> },
    Abs { inner: Box<TimeFunction> },
    Sum { terms: Vec<TimeFunction> },
    /// `sqrt(sum_i f_i(t)^2)`
    Norm { terms: Vec<TimeFunction> },
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn zero() -> Self {
        TimeFunction::constant(0.0)
    }

    pub fn power_singular(scale: f64, alpha: f64) -> Self {
        TimeFunction::PowerSingular { scale, alpha }
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: &[f64]) -> Self {
        TimeFunction::Piecewise {
            breakpoints,
            pieces: values.iter().map(|&v| TimeFunction::constant(v)).collect(),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            TimeFunction::Constant { value } => TimeFunction::constant(factor * value),
            other => TimeFunction::Scaled {
                factor,
                inner: Box::new(other),
            },
        }
    }

    pub fn abs(self) -> Self {
        match self {
            TimeFunction::Constant { value } => TimeFunction::constant(value.abs()),
            other => TimeFunction::Abs { inner: Box::new(other) },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            TimeFunction::Constant { value } if !value.is_finite() => bad(format!("constant {value}")),
            TimeFunction::PowerSingular { scale, alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) || !scale.is_finite() {
                    bad(format!("power singularity needs 0 < alpha < 1, got {alpha}"))
                } else {
                    Ok(())
                }
            }
            TimeFunction::Piecewise { breakpoints, pieces } => {
                if pieces.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} pieces need {} breakpoints, got {}",
                        pieces.len(),
                        pieces.len().saturating_sub(1),
                        breakpoints.len()
                    ));
                }
                if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0))
                    || breakpoints.windows(2).any(|w| w[0] >= w[1])
                {
                    return bad("breakpoints must be positive and strictly increasing".into());
                }
                pieces.iter().try_for_each(|p| p.validate())
            }
            TimeFunction::Scaled { inner, factor } => {
                if !factor.is_finite() {
                    return bad(format!("scale factor {factor}"));
                }
                inner.validate()
            }
            TimeFunction::Abs { inner } => inner.validate(),
            TimeFunction::Sum { terms } | TimeFunction::Norm { terms } => {
                terms.iter().try_for_each(|p| p.validate())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeFunction::Constant { value } => *value,
            TimeFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            TimeFunction::Exponential { scale, rate } => scale * (rate * t).exp(),
            TimeFunction::Sinusoid {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (frequency * t + phase).sin(),
            TimeFunction::PowerSingular { scale, alpha } => {
                if t <= 0.0 {
                    scale * f64::INFINITY
                } else {
                    scale * t.powf(-alpha)
                }
            }
            TimeFunction::Piecewise { breakpoints, pieces } => {
                pieces[breakpoints.partition_point(|&b| b <= t)].value(t)
            }
            TimeFunction::Scaled { factor, inner } => factor * inner.value(t),
            TimeFunction::Abs { inner } => inner.value(t).abs(),
            TimeFunction::Sum { terms } => terms.iter().map(|f| f.value(t)).sum(),
            TimeFunction::Norm { terms } => terms.iter().map(|f| f.value(t).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// All breakpoints in `(0, inf)`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.retain(|&b| b > 0.0);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            TimeFunction::Piecewise { breakpoints, pieces } => {
                out.extend(breakpoints.iter().copied());
                for p in pieces {
                    p.collect_breakpoints(out);
                }
            }
            TimeFunction::Scaled { inner, .. } | TimeFunction::Abs { inner } => inner.collect_breakpoints(out),
            TimeFunction::Sum { terms } | TimeFunction::Norm { terms } => {
                for p in terms {
                    p.collect_breakpoints(out);
                }
            }
            _ => {}
        }
    }

    /// Exponent `alpha` of the blow-up `t^{-alpha}` at `t = 0+` (zero when bounded).
    pub fn singular_exponent(&self) -> f64 {
        match self {
            TimeFunction::PowerSingular { alpha, scale } if *scale != 0.0 => *alpha,
            TimeFunction::Piecewise { breakpoints, pieces } => {
                pieces[breakpoints.partition_point(|&b| b <= 0.0)].singular_exponent()
            }
            TimeFunction::Scaled { inner, factor } if *factor != 0.0 => inner.singular_exponent(),
            TimeFunction::Abs { inner } => inner.singular_exponent(),
            TimeFunction::Sum { terms } | TimeFunction::Norm { terms } => {
                terms.iter().map(|f| f.singular_exponent()).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TimeFunction::Constant { value } => Some(*value),
            TimeFunction::Polynomial { coeffs } if coeffs.len() <= 1 => Some(coeffs.first().copied().unwrap_or(0.0)),
            TimeFunction::Scaled { factor, inner } => inner.as_constant().map(|v| factor * v),
            TimeFunction::Abs { inner } => inner.as_constant().map(f64::abs),
            _ => None,
        }
    }

    /// `int_a^b f(t) dt`, exact on power singularities.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if let Some(c) = self.as_constant() {
            return c * (b - a);
        }
        integrate_segments(
            |t| self.value(t),
            a,
            b,
            &self.breakpoints(),
            self.singular_exponent(),
            QUAD_SUBINTERVALS,
        )
    }

    /// `(int_0^T |f|^d)^{1/d}`, or the essential supremum for `d = inf`.
    pub fn ld_norm(&self, horizon: f64, order: f64) -> Result<f64> {
        if order.is_infinite() {
            if self.singular_exponent() > 0.0 {
                return Err(Error::DivergentNorm { order, horizon });
            }
            return Ok(self.sup_abs(0.0, horizon));
        }
        let beta = self.singular_exponent() * order;
        if beta >= 1.0 {
            return Err(Error::DivergentNorm { order, horizon });
        }
        if let Some(c) = self.as_constant() {
            return Ok(c.abs() * horizon.powf(1.0 / order));
        }
        let integral = integrate_segments(
            |t| self.value(t).abs().powf(order),
            0.0,
            horizon,
            &self.breakpoints(),
            beta,
            QUAD_SUBINTERVALS,
        );
        Ok(integral.powf(1.0 / order))
    }

    /// Sampled supremum of `|f|` on `[a, b]`, piece by piece.
    pub fn sup_abs(&self, a: f64, b: f64) -> f64 {
        if let Some(c) = self.as_constant() {
            return c.abs();
        }
        let mut best: f64 = 0.0;
        for (lo, hi) in split_at(a, b, &self.breakpoints()) {
            let map = TimeMap::new(lo, hi, self.singular_exponent());
            for i in 0..=SUP_SAMPLES {
                let t = lo + (hi - lo) * i as f64 / SUP_SAMPLES as f64;
                let t = if i == SUP_SAMPLES { crate::quadrature::prev_float(hi) } else { t };
                if map.is_singular() && t == 0.0 {
                    return f64::INFINITY;
                }
                best = best.max(self.value(t).abs());
            }
        }
        best
    }
}

/// Complex-valued time function `re(t) + i im(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexTimeFunction {
    pub re: TimeFunction,
    #[serde(default = "TimeFunction::zero")]
    pub im: TimeFunction,
}

impl ComplexTimeFunction {
    pub fn constant(value: Complex64) -> Self {
        ComplexTimeFunction {
            re: TimeFunction::constant(value.re),
            im: TimeFunction::constant(value.im),
        }
    }

    pub fn real(re: TimeFunction) -> Self {
        ComplexTimeFunction { re, im: TimeFunction::zero() }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        Complex64::new(self.re.value(t), self.im.value(t))
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        Some(Complex64::new(self.re.as_constant()?, self.im.as_constant()?))
    }

    /// `|f(t)|` as a time function.
    pub fn modulus(&self) -> TimeFunction {
        match self.as_constant() {
            Some(c) => TimeFunction::constant(c.norm()),
            None => TimeFunction::Norm {
                terms: vec![self.re.clone(), self.im.clone()],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.re.validate()?;
        self.im.validate()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.re.breakpoints();
        b.extend(self.im.breakpoints());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    pub fn singular_exponent(&self) -> f64 {
        self.re.singular_exponent().max(self.im.singular_exponent())
    }
}
