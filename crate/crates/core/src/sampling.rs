//! Deterministic low-discrepancy sampling of domains and compact sets.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CompactSet, Domain, Point};

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

pub const DEFAULT_SEED: u64 = 0x5eed_1de5;

pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point with `dim` coordinates in `[0, 1)`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton dimension too large");
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

fn cube_point(index: u64, n: usize, radius: f64) -> Point {
    let h = halton(index, 2 * n);
    Point(
        (0..n)
            .map(|j| Complex64::new(radius * (2.0 * h[2 * j] - 1.0), radius * (2.0 * h[2 * j + 1] - 1.0)))
            .collect(),
    )
}

/// `count` quasi-random points of `domain` scaled by `radius < 1`.
///
/// Halton points of the enclosing cube are filtered by rejection, which keeps
/// the sequence low-discrepancy inside the domain.
pub fn domain_points(domain: &Domain, count: usize, radius: f64) -> Vec<Point> {
    let n = domain.dim();
    let mut out = Vec::with_capacity(count);
    let mut index = 1u64;
    while out.len() < count {
        let p = cube_point(index, n, radius);
        index += 1;
        let inside = match domain {
            Domain::UnitDisc | Domain::UnitBall { .. } => p.norm() < radius,
            Domain::Polydisc { .. } => p.max_modulus() < radius,
        };
        if inside {
            out.push(p);
        }
    }
    out
}

/// Points of a compact set: a quarter on its (distinguished) boundary, the
/// rest in the interior.
pub fn compact_points(set: &CompactSet, n: usize, count: usize) -> Vec<Point> {
    let r = set.radius();
    let on_boundary = (count / 4).max(1).min(count);
    let mut out = Vec::with_capacity(count);
    for i in 0..on_boundary as u64 {
        let h = halton(i + 1, 2 * n);
        let p = match set {
            CompactSet::Polydisc { .. } => Point(
                (0..n)
                    .map(|j| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * h[j]))
                    .collect(),
            ),
            CompactSet::Ball { .. } => {
                let mut q = cube_point(i + 1, n, 1.0);
                let norm = q.norm();
                if norm < 1e-3 {
                    q = Point::zeros(n);
                    q.0[0] = Complex64::new(r, 0.0);
                    q
                } else {
                    &q * (r * (1.0 - 4.0 * f64::EPSILON) / norm)
                }
            }
        };
        out.push(p);
    }
    let interior = count - on_boundary;
    let domain = match set {
        CompactSet::Ball { .. } => Domain::UnitBall { n },
        CompactSet::Polydisc { .. } => Domain::Polydisc { n },
    };
    out.extend(domain_points(&domain, interior, r));
    out
}

/// Pairs of distinct domain points formed by a seeded random matching.
pub fn random_pairs(domain: &Domain, count: usize, radius: f64, seed: u64) -> Vec<(Point, Point)> {
    let mut pts = domain_points(domain, 2 * count, radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pts.shuffle(&mut rng);
    pts.chunks_exact(2)
        .filter(|c| c[0] != c[1])
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect()
}
