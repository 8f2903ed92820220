//! Gauss-Legendre rules and the time substitution used on singular pieces.

/// 8-point Gauss-Legendre nodes on [-1, 1].
pub const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

pub const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Reparametrisation of a time segment `[a, b]`.
///
/// When the segment starts at `t = 0` and the integrand behaves like
/// `t^{-beta}` there, `u = t^{1 - beta}` turns it into a bounded function of
/// `u`. Otherwise the map is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeMap {
    pub a: f64,
    pub b: f64,
    beta: f64,
}

impl TimeMap {
    pub fn new(a: f64, b: f64, beta: f64) -> Self {
        let beta = if a == 0.0 && beta > 0.0 { beta } else { 0.0 };
        debug_assert!(beta < 1.0);
        TimeMap { a, b, beta }
    }

    pub fn identity(a: f64, b: f64) -> Self {
        TimeMap { a, b, beta: 0.0 }
    }

    pub fn is_singular(&self) -> bool {
        self.beta > 0.0
    }

    pub fn u_start(&self) -> f64 {
        self.to_u(self.a)
    }

    pub fn u_end(&self) -> f64 {
        self.to_u(self.b)
    }

    pub fn to_u(&self, t: f64) -> f64 {
        if self.is_singular() {
            t.powf(1.0 - self.beta)
        } else {
            t
        }
    }

    pub fn to_t(&self, u: f64) -> f64 {
        if self.is_singular() {
            if u >= self.u_end() {
                return self.b;
            }
            u.powf(1.0 / (1.0 - self.beta))
        } else {
            u
        }
    }

    /// `dt/du`.
    pub fn jacobian(&self, u: f64) -> f64 {
        if self.is_singular() {
            u.powf(self.beta / (1.0 - self.beta)) / (1.0 - self.beta)
        } else {
            1.0
        }
    }

    /// The singular endpoint `u = 0` is replaced by a point just inside the
    /// segment, which realises the one-sided limit of a bounded integrand.
    pub fn regular_u(&self, u: f64) -> f64 {
        if self.is_singular() {
            u.max(self.u_end() * 1e-12)
        } else {
            u
        }
    }
}

/// Split `[a, b]` at the given sorted breakpoints.
pub fn split_at(a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Composite 8-point Gauss-Legendre rule for `f` on `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, subintervals: usize) -> f64 {
    let n = subintervals.max(1);
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    for k in 0..n {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Integrate `f` over `[a, b]`: split at breakpoints, substitute near a
/// `t^{-beta}` singularity at the origin, Gauss-Legendre on each piece.
pub fn integrate_segments<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    beta: f64,
    subintervals: usize,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    split_at(a, b, breakpoints)
        .into_iter()
        .map(|(lo, hi)| {
            let map = TimeMap::new(lo, hi, beta);
            let hi_prev = prev_float(hi);
            gauss_legendre(
                |u| {
                    let t = map.to_t(u).clamp(lo, hi_prev);
                    f(t) * map.jacobian(u)
                },
                map.u_start(),
                map.u_end(),
                subintervals,
            )
        })
        .sum()
}

/// Largest float strictly below `x` (for `x > 0`), so that piecewise
/// functions are evaluated on the piece to the left of a breakpoint.
pub fn prev_float(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        f64::from_bits(x.to_bits() - 1)
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let v = gauss_legendre(|x| x.powi(15) + 3.0 * x * x, 0.0, 2.0, 1);
        let exact = 2f64.powi(16) / 16.0 + 8.0;
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn substitution_makes_inverse_sqrt_exact() {
        let v = integrate_segments(|t| 0.5 / t.sqrt(), 0.0, 1.0, &[], 0.5, 1);
        assert!((v - 1.0).abs() < 1e-14);
        let v = integrate_segments(|t| t.powf(-0.75), 0.0, 2.0, &[], 0.75, 1);
        let exact = 4.0 * 2f64.powf(0.25);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn time_map_round_trip() {
        let m = TimeMap::new(0.0, 2.0, 0.5);
        for t in [0.0, 0.3, 1.0, 2.0] {
            assert!((m.to_t(m.to_u(t)) - t).abs() < 1e-15);
        }
        assert!(!TimeMap::new(0.5, 1.0, 0.5).is_singular());
    }

    #[test]
    fn split_respects_window() {
        assert_eq!(split_at(0.0, 2.0, &[-1.0, 0.5, 1.0, 3.0]), vec![(0.0, 0.5), (0.5, 1.0), (1.0, 2.0)]);
    }
}
