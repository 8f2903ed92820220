//! Pointwise check of the Gronwall lemma: if
//! `theta(t) <= C + int_a^t theta k` then `theta(t) <= C exp(int_a^t k)`.

use serde::{Deserialize, Serialize};

use crate::timefn::TimeFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Integrals run from the left end `a` to `t`.
    Forward,
    /// Integrals run from `t` to the right end `b`.
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallOutcome {
    /// The conclusion holds on every grid point.
    pub holds: bool,
    /// First grid index where the conclusion fails.
    pub witness: Option<usize>,
    /// The integral hypothesis held on the grid (trapezoid rule for
    /// `int theta k`).
    pub hypothesis_holds: bool,
}

/// `samples` are `(t_i, theta_i)` with increasing `t_i`; comparisons use
/// `x <= y + tol * max(1, |y|)`.
pub fn gronwall_check(samples: &[(f64, f64)], k: &TimeFunction, c: f64, direction: Direction, tol: f64) -> GronwallOutcome {
    let n = samples.len();
    let le = |x: f64, y: f64| x <= y + tol * y.abs().max(1.0);
    // cumulative int k and int theta k from the reference end
    let mut int_k = vec![0.0; n];
    let mut int_tk = vec![0.0; n];
    let step = |i: usize| {
        let (t0, th0) = samples[i];
        let (t1, th1) = samples[i + 1];
        let ik = k.integral(t0, t1);
        (ik, 0.5 * (th0 + th1) * ik)
    };
    match direction {
        Direction::Forward => {
            for i in 1..n {
                let (ik, itk) = step(i - 1);
                int_k[i] = int_k[i - 1] + ik;
                int_tk[i] = int_tk[i - 1] + itk;
            }
        }
        Direction::Backward => {
            for i in (0..n.saturating_sub(1)).rev() {
                let (ik, itk) = step(i);
                int_k[i] = int_k[i + 1] + ik;
                int_tk[i] = int_tk[i + 1] + itk;
            }
        }
    }
    let hypothesis_holds = (0..n).all(|i| le(samples[i].1, c + int_tk[i]));
    let witness = (0..n).find(|&i| !le(samples[i].1, c * int_k[i].exp()));
    GronwallOutcome {
        holds: witness.is_none(),
        witness,
        hypothesis_holds,
    }
}
