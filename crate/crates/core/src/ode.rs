//! Adaptive Dormand-Prince 5(4) integration of complex systems on a sequence
//! of time segments, with the native quartic dense output.
//!
//! Segment boundaries are hard step boundaries. A segment that starts at
//! `t = 0` under a `t^{-beta}` singularity is integrated in the variable
//! `u = t^{1 - beta}`, where the right-hand side is bounded.

use num_complex::Complex64;

use crate::quadrature::{prev_float, split_at, TimeMap};

type C = Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controller settings.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Controls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub escape_margin: f64,
    pub substitute_singularity: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct DenseStep {
    u0: f64,
    h: f64,
    rcont: [Vec<C>; 5],
}

#[derive(Clone, Debug)]
pub(crate) struct DenseSegment {
    pub map: TimeMap,
    steps: Vec<DenseStep>,
}

/// Why integration stopped before the requested end.
#[derive(Clone, Debug)]
pub(crate) enum Stop {
    /// Boundary gap below the escape margin while the controller stalls.
    Escape { time: f64, gap: f64 },
    Underflow { time: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct OdeSolution {
    pub samples: Vec<(f64, Vec<C>)>,
    pub segments: Vec<DenseSegment>,
    pub stop: Option<Stop>,
}

impl OdeSolution {
    pub fn last(&self) -> &(f64, Vec<C>) {
        self.samples.last().expect("solution has at least the initial sample")
    }

    pub fn end_time(&self) -> f64 {
        self.last().0
    }

    /// Dense evaluation at `t` inside the integrated window.
    pub fn eval(&self, t: f64) -> Option<Vec<C>> {
        let (t_first, t_last) = (self.samples[0].0, self.end_time());
        if t < t_first || t > t_last {
            return None;
        }
        if t == t_first {
            return Some(self.samples[0].1.clone());
        }
        let seg = self
            .segments
            .iter()
            .find(|s| t >= s.map.a && t <= s.map.b && !s.steps.is_empty())?;
        let u = seg.map.to_u(t);
        let idx = seg
            .steps
            .partition_point(|st| st.u0 + st.h < u)
            .min(seg.steps.len() - 1);
        let st = &seg.steps[idx];
        let theta = ((u - st.u0) / st.h).clamp(0.0, 1.0);
        Some(dense_value(st, theta))
    }

    /// Accepted steps as `(map, u0, h)` with dense evaluation in `u`.
    pub fn steps(&self) -> impl Iterator<Item = (&TimeMap, f64, f64, StepView<'_>)> {
        self.segments
            .iter()
            .flat_map(|seg| seg.steps.iter().map(move |st| (&seg.map, st.u0, st.h, StepView(st))))
    }
}

pub(crate) struct StepView<'a>(&'a DenseStep);

impl StepView<'_> {
    pub fn at(&self, theta: f64) -> Vec<C> {
        dense_value(self.0, theta)
    }
}

fn dense_value(st: &DenseStep, theta: f64) -> Vec<C> {
    let theta1 = 1.0 - theta;
    let [r1, r2, r3, r4, r5] = &st.rcont;
    (0..r1.len())
        .map(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
        .collect()
}

fn axpy(out: &mut [C], y: &[C], h: f64, terms: &[(f64, &[C])]) {
    for i in 0..y.len() {
        let mut acc = C::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[i] * *c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrate `y' = rhs(t, y)` from `(s, y0)` to `t_end`.
///
/// `gap` returns the distance of the state to the domain boundary (positive
/// inside); trial steps that leave the domain are rejected.
pub(crate) fn integrate<R, G>(
    rhs: R,
    gap: G,
    s: f64,
    y0: &[C],
    t_end: f64,
    breakpoints: &[f64],
    singular_exponent: f64,
    ctl: &Controls,
) -> OdeSolution
where
    R: Fn(f64, &[C], &mut [C]),
    G: Fn(&[C]) -> f64,
{
    let dim = y0.len();
    let mut samples = vec![(s, y0.to_vec())];
    let mut segments = Vec::new();
    if t_end <= s {
        return OdeSolution {
            samples,
            segments,
            stop: None,
        };
    }
    let beta = if ctl.substitute_singularity { singular_exponent } else { 0.0 };
    let mut y = y0.to_vec();
    let mut h_guess: Option<f64> = None;

    for (a, b) in split_at(s, t_end, breakpoints) {
        let map = TimeMap::new(a, b, beta);
        let (u_start, u_end) = (map.u_start(), map.u_end());
        let b_left = prev_float(b);
        let f = |u: f64, y: &[C], out: &mut [C]| {
            let ur = map.regular_u(u);
            let t = map.to_t(ur).clamp(a, b_left);
            rhs(t, y, out);
            let jac = map.jacobian(ur);
            if jac != 1.0 {
                for v in out.iter_mut() {
                    *v *= jac;
                }
            }
        };
        let mut seg = DenseSegment { map, steps: Vec::new() };
        let mut k = vec![vec![C::new(0.0, 0.0); dim]; 7];
        let mut ytmp = vec![C::new(0.0, 0.0); dim];
        let mut y1 = vec![C::new(0.0, 0.0); dim];
        let mut u = u_start;
        f(u, &y, &mut k[0]);

        let span = u_end - u_start;
        let max_step = ctl.max_step.min(span);
        let mut h = match h_guess {
            Some(hg) if !map.is_singular() => hg.min(max_step),
            _ => initial_step(&y, &k[0], ctl).min(max_step),
        };
        let h_min = 1e-14 * u_end.abs().max(1.0);
        let mut exited_last = false;

        while u < u_end {
            let last_step = u + h >= u_end - 1e-14 * span.max(1e-300);
            if last_step {
                h = u_end - u;
            }
            if h < h_min && !last_step {
                let g = gap(&y);
                let t_now = seg.map.to_t(u);
                segments.push(seg);
                let stop = if g < ctl.escape_margin {
                    Stop::Escape { time: t_now, gap: g }
                } else {
                    Stop::Underflow { time: t_now }
                };
                return OdeSolution {
                    samples,
                    segments,
                    stop: Some(stop),
                };
            }

            axpy(&mut ytmp, &y, h, &[(A21, &k[0])]);
            let (k0, rest) = k.split_at_mut(1);
            f(u + C2 * h, &ytmp, &mut rest[0]);
            axpy(&mut ytmp, &y, h, &[(A31, &k0[0]), (A32, &rest[0])]);
            f(u + C3 * h, &ytmp, &mut rest[1]);
            axpy(&mut ytmp, &y, h, &[(A41, &k0[0]), (A42, &rest[0]), (A43, &rest[1])]);
            f(u + C4 * h, &ytmp, &mut rest[2]);
            axpy(
                &mut ytmp,
                &y,
                h,
                &[(A51, &k0[0]), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            );
            f(u + C5 * h, &ytmp, &mut rest[3]);
            axpy(
                &mut ytmp,
                &y,
                h,
                &[(A61, &k0[0]), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
            );
            f(u + h, &ytmp, &mut rest[4]);
            axpy(
                &mut y1,
                &y,
                h,
                &[(A71, &k0[0]), (A73, &rest[1]), (A74, &rest[2]), (A75, &rest[3]), (A76, &rest[4])],
            );

            let finite = y1.iter().all(|c| c.re.is_finite() && c.im.is_finite());
            if !finite || gap(&y1) <= 0.0 {
                // trial step left the domain
                let g = gap(&y);
                if g < ctl.escape_margin && exited_last {
                    let t_now = seg.map.to_t(u);
                    segments.push(seg);
                    return OdeSolution {
                        samples,
                        segments,
                        stop: Some(Stop::Escape { time: t_now, gap: g }),
                    };
                }
                exited_last = true;
                h *= 0.5;
                continue;
            }

            f(u + h, &y1, &mut rest[5]);
            let mut err: f64 = 0.0;
            for i in 0..dim {
                let e = (k0[0][i] * E1
                    + rest[1][i] * E3
                    + rest[2][i] * E4
                    + rest[3][i] * E5
                    + rest[4][i] * E6
                    + rest[5][i] * E7)
                    * h;
                let sc = ctl.abs_tol + ctl.rel_tol * y[i].norm().max(y1[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                h *= 0.25;
                continue;
            }

            if err <= 1.0 {
                let ydiff: Vec<C> = (0..dim).map(|i| y1[i] - y[i]).collect();
                let bspl: Vec<C> = (0..dim).map(|i| k0[0][i] * h - ydiff[i]).collect();
                let r4: Vec<C> = (0..dim).map(|i| ydiff[i] - rest[5][i] * h - bspl[i]).collect();
                let r5: Vec<C> = (0..dim)
                    .map(|i| {
                        (k0[0][i] * D1
                            + rest[1][i] * D3
                            + rest[2][i] * D4
                            + rest[3][i] * D5
                            + rest[4][i] * D6
                            + rest[5][i] * D7)
                            * h
                    })
                    .collect();
                seg.steps.push(DenseStep {
                    u0: u,
                    h,
                    rcont: [y.clone(), ydiff, bspl, r4, r5],
                });
                u = if last_step { u_end } else { u + h };
                y.copy_from_slice(&y1);
                let t_now = if last_step { b } else { seg.map.to_t(u) };
                samples.push((t_now, y.clone()));
                k0[0].copy_from_slice(&rest[5]);
                exited_last = false;
                let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                h = (h * fac).min(max_step);
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                h *= fac;
            }
        }
        if !seg.map.is_singular() {
            h_guess = Some(h);
        }
        segments.push(seg);
    }
    OdeSolution {
        samples,
        segments,
        stop: None,
    }
}

fn initial_step(y: &[C], f0: &[C], ctl: &Controls) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = ctl.abs_tol + ctl.rel_tol * yi.norm();
        d0 = d0.max(yi.norm() / sc);
        d1 = d1.max(fi.norm() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.max(1e-10)
}
