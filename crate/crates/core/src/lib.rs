//! Numerical Loewner evolution on complete hyperbolic model domains.
//!
//! The crate integrates the non-autonomous Loewner equation
//! `d/dt phi_{s,t}(z) = G(phi_{s,t}(z), t)` driven by Herglotz vector fields,
//! recovers the driving field from an evolution family, and checks the
//! defining properties of both objects numerically.

pub mod catalog;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod geometry;
pub mod gronwall;
pub mod herglotz;
mod ode;
pub mod picard;
pub mod quadrature;
pub mod recovery;
pub mod sampling;
pub mod solver;
pub mod timefn;
pub mod variational;

pub use error::{Error, Result};
pub use fields::{FieldKind, FieldSpec, Order};
pub use geometry::{CompactSet, Domain, Point};
pub use timefn::{ComplexTimeFunction, TimeFunction};
