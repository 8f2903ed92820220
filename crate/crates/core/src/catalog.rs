//! Built-in Herglotz fields used by the verifiers, the demo and the tests.

use num_complex::Complex64;

use crate::fields::{CMatrix, FieldSpec, HerglotzFunction};
use crate::geometry::{CompactSet, Domain};
use crate::timefn::{ComplexTimeFunction, TimeFunction};

#[derive(Clone, Debug)]
pub struct Example {
    pub name: &'static str,
    pub field: FieldSpec,
    /// A compact set of the domain suited to sampling initial points.
    pub set: CompactSet,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `G(z, t) = -z` on the disc.
pub fn radial_unit() -> FieldSpec {
    FieldSpec::radial_constant(1.0, Domain::UnitDisc)
}

/// `G(z, t) = -z / (2 sqrt t)`, of order exactly 1.
pub fn radial_inverse_sqrt() -> FieldSpec {
    FieldSpec::radial(TimeFunction::power_singular(0.5, 0.5), Domain::UnitDisc).with_order(1.0)
}

/// `G(z) = 1 - z^2`, whose flow is `tanh(t - s + artanh z)`.
pub fn tanh_field() -> FieldSpec {
    FieldSpec::polynomial(&[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `G(z) = +z`, not Herglotz.
pub fn expanding() -> FieldSpec {
    FieldSpec::radial_constant(-1.0, Domain::UnitDisc)
}

pub fn herglotz_fields() -> Vec<Example> {
    let disc = CompactSet::Ball { radius: 0.5 };
    let ball2 = Domain::UnitBall { n: 2 };
    let rotating = ComplexTimeFunction {
        re: TimeFunction::Sinusoid {
            amplitude: 0.4,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
        },
        im: TimeFunction::Sinusoid {
            amplitude: 0.4,
            frequency: 1.0,
            phase: std::f64::consts::FRAC_PI_2,
            offset: 0.0,
        },
    };
    let mut bp_moving = FieldSpec::berkson_porta(c(0.0, 0.0), HerglotzFunction::constant(c(1.0, 0.5)));
    if let crate::fields::FieldKind::BerksonPorta { tau, .. } = &mut bp_moving.kind {
        *tau = rotating;
    }
    let mixing = CMatrix::from_row_slice(2, 2, &[c(-1.0, 0.5), c(0.2, 0.0), c(-0.2, 0.0), c(-0.7, 0.0)]);
    vec![
        Example {
            name: "radial",
            field: radial_unit(),
            set: disc,
        },
        Example {
            name: "radial_inverse_sqrt",
            field: radial_inverse_sqrt(),
            set: disc,
        },
        Example {
            name: "radial_piecewise",
            field: FieldSpec::radial(
                TimeFunction::piecewise_constant(vec![1.0, 2.0], &[1.0, 0.25, 2.0]),
                Domain::UnitDisc,
            ),
            set: disc,
        },
        Example {
            name: "tanh",
            field: tanh_field(),
            set: disc,
        },
        Example {
            name: "rotation",
            field: FieldSpec::polynomial(&[c(0.0, 0.0), c(0.0, 1.0)]),
            set: disc,
        },
        Example {
            name: "berkson_porta_cayley",
            field: FieldSpec::berkson_porta(c(0.3, 0.2), HerglotzFunction::cayley()),
            set: disc,
        },
        Example {
            name: "berkson_porta_boundary",
            field: FieldSpec::berkson_porta(c(1.0, 0.0), HerglotzFunction::constant(c(1.0, 0.0))),
            set: disc,
        },
        Example {
            name: "berkson_porta_moving",
            field: bp_moving,
            set: disc,
        },
        Example {
            name: "linear_minus_identity",
            field: FieldSpec::linear_constant(&(-CMatrix::identity(2, 2)), ball2),
            set: CompactSet::Ball { radius: 0.5 },
        },
        Example {
            name: "linear_mixing",
            field: FieldSpec::linear_constant(&mixing, ball2),
            set: CompactSet::Ball { radius: 0.5 },
        },
        Example {
            name: "polydisc_radial",
            field: FieldSpec::radial_constant(1.0, Domain::Polydisc { n: 2 }),
            set: CompactSet::Polydisc { radius: 0.5 },
        },
    ]
}
