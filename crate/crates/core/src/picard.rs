//! Picard iteration `x_n(t) = z0 + int_s^t G(x_{n-1}(tau), tau) dtau` on a
//! fixed composite Gauss-Legendre grid. Used as an oracle for the integrator.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldSpec;
use crate::geometry::Point;
use crate::quadrature::{split_at, TimeMap, GL8_NODES, GL8_WEIGHTS};
use crate::solver::{Trajectory, TrajectorySample};

/// Sub-intervals per unit of (possibly substituted) time.
const DENSITY: f64 = 16.0;

#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Sup-norm difference between consecutive iterates.
    pub differences: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            max_iterations: 200,
            tol: 1e-13,
        }
    }
}

fn lagrange(j: usize, x: f64) -> f64 {
    let xj = GL8_NODES[j];
    GL8_NODES
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &xk)| (x - xk) / (xj - xk))
        .product()
}

/// `S[i][j] = int_{-1}^{x_i} L_j`, exact by an 8-point rule since `L_j` has
/// degree 7.
fn integration_matrix() -> &'static [[f64; 8]; 8] {
    static S: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    S.get_or_init(|| {
        let mut s = [[0.0; 8]; 8];
        for (i, row) in s.iter_mut().enumerate() {
            let half = 0.5 * (GL8_NODES[i] + 1.0);
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = half
                    * GL8_NODES
                        .iter()
                        .zip(GL8_WEIGHTS.iter())
                        .map(|(y, w)| w * lagrange(j, -1.0 + half * (y + 1.0)))
                        .sum::<f64>();
            }
        }
        s
    })
}

struct Cell {
    map: TimeMap,
    u0: f64,
    h: f64,
}

impl Cell {
    fn node_u(&self, i: usize) -> f64 {
        self.u0 + 0.5 * self.h * (GL8_NODES[i] + 1.0)
    }
}

fn cells(field: &FieldSpec, s: f64, t: f64) -> Vec<Cell> {
    let beta = field.singular_exponent();
    let mut out = Vec::new();
    for (a, b) in split_at(s, t, &field.breakpoints()) {
        let map = TimeMap::new(a, b, beta);
        let (u0, u1) = (map.u_start(), map.u_end());
        let m = ((u1 - u0) * DENSITY).ceil().max(2.0) as usize;
        let h = (u1 - u0) / m as f64;
        for k in 0..m {
            out.push(Cell {
                map,
                u0: u0 + k as f64 * h,
                h,
            });
        }
    }
    out
}

/// Iterate the integral map on `[s, s + delta]` starting from `x_0 = z0`.
///
/// Stops once consecutive iterates differ by less than `cfg.tol` in sup norm.
/// Growth of the difference on two consecutive iterations (after the third)
/// is reported as [`Error::NonContraction`].
pub fn picard_iterate(field: &FieldSpec, s: f64, z0: &Point, delta: f64, cfg: &PicardConfig) -> Result<PicardSolution> {
    let domain = field.domain();
    if !domain.contains(z0)? {
        return Err(Error::OutsideDomain(z0.clone()));
    }
    if !(s >= 0.0 && delta >= 0.0 && (s + delta).is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid window s = {s}, delta = {delta}")));
    }
    let grid = cells(field, s, s + delta);
    let times: Vec<[f64; 8]> = grid
        .iter()
        .map(|c| std::array::from_fn(|i| c.map.to_t(c.node_u(i))))
        .collect();
    let jac: Vec<[f64; 8]> = grid
        .iter()
        .map(|c| std::array::from_fn(|i| c.map.jacobian(c.node_u(i))))
        .collect();
    let smat = integration_matrix();

    let mut nodes: Vec<Vec<Point>> = vec![vec![z0.clone(); 8]; grid.len()];
    let mut ends: Vec<Point> = vec![z0.clone(); grid.len()];
    let mut differences = Vec::new();
    for iteration in 1..=cfg.max_iterations.max(1) {
        let mut start = z0.clone();
        let mut next_nodes = Vec::with_capacity(grid.len());
        let mut next_ends = Vec::with_capacity(grid.len());
        for (k, cell) in grid.iter().enumerate() {
            let f: Vec<Point> = (0..8)
                .map(|j| &field.evaluate_unchecked(&nodes[k][j], times[k][j]) * (0.5 * cell.h * jac[k][j]))
                .collect();
            let vals: Vec<Point> = (0..8)
                .map(|i| {
                    let mut x = start.clone();
                    for (j, fj) in f.iter().enumerate() {
                        x += &(fj * smat[i][j]);
                    }
                    x
                })
                .collect();
            let mut end = start.clone();
            for (fj, w) in f.iter().zip(GL8_WEIGHTS.iter()) {
                end += &(fj * *w);
            }
            next_nodes.push(vals);
            next_ends.push(end.clone());
            start = end;
        }
        let diff = next_nodes
            .iter()
            .flatten()
            .zip(nodes.iter().flatten())
            .chain(next_ends.iter().zip(ends.iter()))
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        nodes = next_nodes;
        ends = next_ends;
        differences.push(diff);
        if !diff.is_finite() {
            return Err(Error::NonContraction {
                iteration,
                difference: diff,
            });
        }
        let n = differences.len();
        if n > 3 && differences[n - 1] > differences[n - 2] && differences[n - 2] > differences[n - 3] {
            return Err(Error::NonContraction {
                iteration,
                difference: diff,
            });
        }
        if diff < cfg.tol {
            if let Some(p) = nodes.iter().flatten().chain(ends.iter()).find(|p| domain.boundary_gap(p) <= 0.0) {
                return Err(Error::DomainExit(p.clone()));
            }
            let mut samples = vec![TrajectorySample {
                t: s,
                x: z0.clone(),
            }];
            for (k, cell) in grid.iter().enumerate() {
                for i in 0..8 {
                    samples.push(TrajectorySample {
                        t: times[k][i],
                        x: nodes[k][i].clone(),
                    });
                }
                samples.push(TrajectorySample {
                    t: cell.map.to_t(cell.u0 + cell.h),
                    x: ends[k].clone(),
                });
            }
            samples.dedup_by(|b, a| b.t <= a.t);
            return Ok(PicardSolution {
                trajectory: Trajectory::from_samples(domain, s, z0.clone(), s + delta, samples),
                iterations: iteration,
                differences,
            });
        }
    }
    Err(Error::PicardNotConverged {
        iterations: cfg.max_iterations,
        difference: *differences.last().unwrap_or(&f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::timefn::TimeFunction;
    use num_complex::Complex64;

    #[test]
    fn integration_matrix_reproduces_polynomials() {
        let s = integration_matrix();
        for i in 0..8 {
            let x = GL8_NODES[i];
            let cubic: f64 = (0..8).map(|j| s[i][j] * GL8_NODES[j].powi(3)).sum();
            assert!((cubic - (x.powi(4) - 1.0) / 4.0).abs() < 1e-14);
            let last: f64 = (0..8).map(|j| s[i][j]).sum();
            assert!((last - (x + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn fixed_point_converges_immediately() {
        let f = FieldSpec::radial_constant(1.0, Domain::UnitDisc);
        let sol = picard_iterate(&f, 0.0, &Point::real(0.0), 0.5, &PicardConfig::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.trajectory.samples.iter().all(|p| p.x.norm() == 0.0));
    }

    #[test]
    fn matches_closed_forms() {
        let d = Domain::UnitDisc;
        let cfg = PicardConfig::default();
        let sol = picard_iterate(&FieldSpec::radial_constant(1.0, d), 0.0, &Point::real(0.25), 0.5, &cfg).unwrap();
        for p in &sol.trajectory.samples {
            assert!((p.x[0].re - 0.25 * (-p.t).exp()).abs() < 1e-12);
        }
        let one = Complex64::new(1.0, 0.0);
        let tanh = FieldSpec::polynomial(&[one, Complex64::new(0.0, 0.0), -one]);
        let sol = picard_iterate(&tanh, 0.0, &Point::real(0.0), 0.25, &cfg).unwrap();
        for p in &sol.trajectory.samples {
            assert!((p.x[0].re - p.t.tanh()).abs() < 1e-12);
        }
        let t = sol.trajectory.t_reached();
        assert_eq!(t, 0.25);
    }

    #[test]
    fn singular_and_piecewise_fields() {
        let d = Domain::UnitDisc;
        let cfg = PicardConfig::default();
        let f = FieldSpec::radial(TimeFunction::power_singular(0.5, 0.5), d).with_order(1.0);
        let sol = picard_iterate(&f, 0.0, &Point::real(0.5), 0.25, &cfg).unwrap();
        for p in &sol.trajectory.samples {
            assert!((p.x[0].re - 0.5 * (-p.t.sqrt()).exp()).abs() < 1e-11, "{p:?}");
        }
        let pw = FieldSpec::radial(TimeFunction::piecewise_constant(vec![0.1], &[1.0, 3.0]), d);
        let sol = picard_iterate(&pw, 0.0, &Point::real(0.5), 0.2, &cfg).unwrap();
        let exact = |t: f64| if t < 0.1 { 0.5 * (-t).exp() } else { 0.5 * (-0.1 - 3.0 * (t - 0.1)).exp() };
        for p in &sol.trajectory.samples {
            assert!((p.x[0].re - exact(p.t)).abs() < 1e-12);
        }
    }

    #[test]
    fn long_window_reports_non_contraction_or_exit() {
        let one = Complex64::new(1.0, 0.0);
        let f = FieldSpec::polynomial(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one * 8.0]);
        let r = picard_iterate(&f, 0.0, &Point::real(0.5), 4.0, &PicardConfig::default());
        assert!(r.is_err());
    }
}
