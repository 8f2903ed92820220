use num_complex::Complex64;
use proptest::prelude::*;

use loewner_core::{Domain, Point};

fn point_in(domain: Domain, max_radius: f64) -> impl Strategy<Value = Point> {
    let n = domain.dim();
    (prop::collection::vec(-1.0f64..1.0, 2 * n), 0.0..max_radius).prop_map(move |(raw, r)| {
        let p = Point(raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        let size = match domain {
            Domain::Polydisc { .. } => p.max_modulus(),
            _ => p.norm(),
        };
        if size == 0.0 {
            p
        } else {
            &p * (r / size)
        }
    })
}

fn domains() -> impl Strategy<Value = Domain> {
    prop_oneof![
        Just(Domain::UnitDisc),
        Just(Domain::UnitBall { n: 2 }),
        Just(Domain::UnitBall { n: 3 }),
        Just(Domain::Polydisc { n: 2 }),
    ]
}

fn triple() -> impl Strategy<Value = (Domain, Point, Point, Point)> {
    domains().prop_flat_map(|d| (Just(d), point_in(d, 0.95), point_in(d, 0.95), point_in(d, 0.95)))
}

proptest! {
    #[test]
    fn distance_is_symmetric((d, z, w, _) in triple()) {
        prop_assert_eq!(d.kobayashi_distance(&z, &w).unwrap(), d.kobayashi_distance(&w, &z).unwrap());
    }

    #[test]
    fn triangle_inequality((d, x, y, z) in triple()) {
        let xz = d.kobayashi_distance(&x, &z).unwrap();
        let xy = d.kobayashi_distance(&x, &y).unwrap();
        let yz = d.kobayashi_distance(&y, &z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-12 * xz.max(1.0), "{} > {} + {}", xz, xy, yz);
    }

    #[test]
    fn distinct_points_are_separated((d, z, w, _) in triple()) {
        prop_assume!(z != w);
        prop_assert!(d.kobayashi_distance(&z, &w).unwrap() > 0.0);
        prop_assert_eq!(d.kobayashi_distance(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn disc_rotation_invariance(z in point_in(Domain::UnitDisc, 0.95), w in point_in(Domain::UnitDisc, 0.95), theta in 0.0..std::f64::consts::TAU) {
        let d = Domain::UnitDisc;
        let rot = Complex64::from_polar(1.0, theta);
        let k = d.kobayashi_distance(&z, &w).unwrap();
        let kr = d.kobayashi_distance(&z.scale(rot), &w.scale(rot)).unwrap();
        prop_assert!((k - kr).abs() <= 1e-12 * k.max(1.0));
    }

    #[test]
    fn derivative_matches_central_difference(
        (d, z, w, u) in prop_oneof![Just(Domain::UnitDisc), Just(Domain::UnitBall { n: 2 })]
            .prop_flat_map(|d| (Just(d), point_in(d, 0.9), point_in(d, 0.9), point_in(d, 0.9))),
        v_scale in -1.0f64..1.0,
    ) {
        prop_assume!(z.distance(&w) > 1e-2);
        let v = &u * v_scale;
        let dd = d.kobayashi_directional_derivative(&z, &w, &u, &v).unwrap();
        prop_assert!(dd.smooth);
        prop_assert!((dd.value - dd.finite_difference).abs() <= 1e-5 * dd.value.abs().max(1.0),
            "{} vs {}", dd.value, dd.finite_difference);
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    let d = Domain::UnitDisc;
    let (z, w) = (Point::scalar(0.3, 0.2), Point::scalar(-0.1, 0.4));
    let (u, v) = (Point::scalar(0.5, -0.2), Point::scalar(0.1, 0.3));
    let exact = d.kobayashi_directional_derivative(&z, &w, &u, &v).unwrap().value;
    let k = |h: f64| d.kobayashi_distance(&(&z + &(&u * h)), &(&w + &(&v * h))).unwrap();
    let err = |h: f64| ((k(h) - k(-h)) / (2.0 * h) - exact).abs();
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}
