use thiserror::Error;

use crate::geometry::Point;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0} lies outside the domain")]
    OutsideDomain(Point),

    #[error("the distance is not differentiable on the diagonal")]
    Diagonal,

    #[error("negative or non-finite time {0}")]
    InvalidTime(f64),

    #[error("time window is reversed: s = {s} > t = {t}")]
    ReversedWindow { s: f64, t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("L^{order} norm of the bound diverges on [0, {horizon}]")]
    DivergentNorm { order: f64, horizon: f64 },

    #[error("no enclosing polydisc of radius > {radius} fits inside the domain")]
    NoEnclosingPolydisc { radius: f64 },

    #[error("quadrature circle of radius {radius} around the point exits the domain")]
    QuadratureExitsDomain { radius: f64 },

    #[error("trajectory escaped at t = {time} before reaching {target}")]
    Escaped { time: f64, target: f64 },

    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64, state: Point },

    #[error("Picard iteration is not contracting (iterate {iteration}, difference {difference:e})")]
    NonContraction { iteration: usize, difference: f64 },

    #[error("Picard iteration did not reach tolerance after {iterations} iterates (last difference {difference:e})")]
    PicardNotConverged { iterations: usize, difference: f64 },

    #[error("map image {0} leaves the domain")]
    DomainExit(Point),

    #[error("extrapolation tableau does not converge (spread {spread:e})")]
    NonConvergent { spread: f64 },

    #[error("one-sided limits differ at t = {time}: left {left}, right {right}")]
    OneSidedMismatch { time: f64, left: Point, right: Point },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
