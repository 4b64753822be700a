//! Fixed Gauss–Legendre rules on `[0, 1]` and adaptive Simpson integration.

#![allow(clippy::excessive_precision)]

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_804_939_476_142_360_18,
    0.525_532_409_916_328_985_817_739_049_189_25,
    0.796_666_477_413_626_739_591_553_936_475_83,
    0.960_289_856_497_536_231_683_560_868_569_47,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_361_982_965_150_449_277_20,
    0.313_706_645_877_887_287_337_962_201_986_60,
    0.222_381_034_453_374_470_544_355_994_426_24,
    0.101_228_536_290_376_259_152_531_354_309_96,
];

const GL4_NODES: [f64; 2] = [
    0.339_981_043_584_856_264_802_665_759_103_24,
    0.861_136_311_594_052_575_223_946_488_892_81,
];
const GL4_WEIGHTS: [f64; 2] = [
    0.652_145_154_862_546_142_626_936_050_778_00,
    0.347_854_845_137_453_857_373_063_949_222_00,
];

/// A symmetric Gauss–Legendre rule mapped onto `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct GaussLegendre {
    nodes: &'static [f64],
    weights: &'static [f64],
}

impl GaussLegendre {
    /// 8-point rule, exact for polynomials up to degree 15.
    pub const EIGHT: GaussLegendre = GaussLegendre {
        nodes: &GL8_NODES,
        weights: &GL8_WEIGHTS,
    };

    /// 4-point rule, exact up to degree 7.
    pub const FOUR: GaussLegendre = GaussLegendre {
        nodes: &GL4_NODES,
        weights: &GL4_WEIGHTS,
    };

    /// Nodes and weights on `[0, 1]`, weights summing to one.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(self.weights)
            .flat_map(|(&x, &w)| [(0.5 * (1.0 - x), 0.5 * w), (0.5 * (1.0 + x), 0.5 * w)])
    }

    /// Integral of `f` over `[0, 1]`.
    pub fn unit<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points().map(|(t, w)| w * f(t)).sum()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let len = b - a;
        len * self.unit(|t| f(a + t * len))
    }
}

/// Adaptive Simpson quadrature with an absolute tolerance.
///
/// Subdivision also stops once the local error estimate is at the rounding
/// level of the local integral, so large integrands cannot force the full
/// recursion depth.
///
/// Returns `None` if the integrand produced a non-finite value.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Option<f64> {
    if a == b {
        return Some(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, 48);
    value.is_finite().then_some(value)
}

const ROUNDING_ULPS: f64 = 32.0;

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = ROUNDING_ULPS * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) || !delta.is_finite() {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let s8: f64 = GaussLegendre::EIGHT.points().map(|(_, w)| w).sum();
        let s4: f64 = GaussLegendre::FOUR.points().map(|(_, w)| w).sum();
        assert!((s8 - 1.0).abs() < 1e-15);
        assert!((s4 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eight_point_is_exact_to_degree_15() {
        for k in 0..=15 {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = GaussLegendre::EIGHT.unit(|t| t.powi(k));
            assert!((got - exact).abs() < 1e-15, "degree {k}: {got} vs {exact}");
        }
        // degree 16 is no longer exact
        let got = GaussLegendre::EIGHT.unit(|t| t.powi(16));
        assert!((got - 1.0 / 17.0).abs() > 1e-14);
    }

    #[test]
    fn four_point_is_exact_to_degree_7() {
        for k in 0..=7 {
            let got = GaussLegendre::FOUR.integrate(-1.0, 2.0, |x| x.powi(k));
            let exact = (2f64.powi(k + 1) - (-1f64).powi(k + 1)) / (k as f64 + 1.0);
            assert!((got - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(0.0, std::f64::consts::PI, 1e-12, f64::sin).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(0.0, 1.5, 1e-12, |x| x.exp()).unwrap();
        assert!((v - (1.5f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(2.0, -1.0, 1e-12, |x| 3.0 * x * x).unwrap();
        assert!((v - (-9.0)).abs() < 1e-11);
    }

    #[test]
    fn simpson_rejects_non_finite() {
        assert!(adaptive_simpson(-1.0, 1.0, 1e-12, |x| 1.0 / x).is_none());
    }
}
