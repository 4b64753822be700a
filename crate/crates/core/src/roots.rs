//! Bracketing root solver for strictly monotone scalar maps.
//!
//! Every equilibrium and inverse map in the crate goes through this one
//! solver: expand a symmetric bracket around zero by doubling, bisect, then
//! polish with at most two Newton steps that must stay inside the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSolver {
    /// Target accuracy of the root, in the units of the unknown.
    pub tol: f64,
    /// Relative bracket width at which bisection stops.
    pub width: f64,
    /// Number of bracket doublings before giving up.
    pub max_doublings: usize,
}

impl Default for MonotoneSolver {
    fn default() -> Self {
        MonotoneSolver {
            tol: 1e-12,
            width: 1e-13,
            max_doublings: 96,
        }
    }
}

impl MonotoneSolver {
    /// Solve `g(x) = 0` for strictly increasing `g`.
    ///
    /// `scale` sets the initial half-width `|scale| + 1` of the bracket.
    pub fn solve_increasing(
        &self,
        what: &'static str,
        scale: f64,
        g: impl Fn(f64) -> f64,
        dg: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<f64> {
        let half = scale.abs() + 1.0;
        let (mut lo, mut hi) = (-half, half);
        let mut g_lo = g(lo);
        let mut g_hi = g(hi);
        let mut k = 0;
        while g_hi < 0.0 {
            if k == self.max_doublings || !g_hi.is_finite() {
                return Err(Error::BracketNotFound {
                    what,
                    at: scale,
                    doublings: k,
                });
            }
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            g_hi = g(hi);
            k += 1;
        }
        k = 0;
        while g_lo > 0.0 {
            if k == self.max_doublings || !g_lo.is_finite() {
                return Err(Error::BracketNotFound {
                    what,
                    at: scale,
                    doublings: k,
                });
            }
            hi = lo;
            g_hi = g_lo;
            lo *= 2.0;
            g_lo = g(lo);
            k += 1;
        }
        if g_lo.is_nan() || g_hi.is_nan() {
            return Err(Error::RootNotConverged { what, lo, hi });
        }
        if g_lo == 0.0 {
            return Ok(lo);
        }
        if g_hi == 0.0 {
            return Ok(hi);
        }

        let mut mid = 0.5 * (lo + hi);
        for _ in 0..256 {
            mid = 0.5 * (lo + hi);
            if hi - lo <= self.width * mid.abs().max(1.0) || mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if gm.is_nan() {
                return Err(Error::RootNotConverged { what, lo, hi });
            }
            if gm == 0.0 {
                return Ok(mid);
            }
            if gm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi - lo > self.tol.max(self.width * mid.abs().max(1.0)) * 16.0 {
            return Err(Error::RootNotConverged { what, lo, hi });
        }

        let mut x = mid;
        if let Some(dg) = dg {
            let mut gx = g(x);
            for _ in 0..2 {
                let d = dg(x);
                if !(d.is_finite() && d > 0.0) || gx == 0.0 {
                    break;
                }
                let cand = x - gx / d;
                if !(lo..=hi).contains(&cand) {
                    break;
                }
                let gc = g(cand);
                if gc.abs() <= gx.abs() {
                    x = cand;
                    gx = gc;
                } else {
                    break;
                }
            }
        }
        Ok(x)
    }

    /// Solve `g(x) = 0` for strictly decreasing `g`.
    pub fn solve_decreasing(
        &self,
        what: &'static str,
        scale: f64,
        g: impl Fn(f64) -> f64,
        dg: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<f64> {
        match dg {
            Some(dg) => {
                let neg = |x: f64| -dg(x);
                self.solve_increasing(what, scale, |x| -g(x), Some(&neg))
            }
            None => self.solve_increasing(what, scale, |x| -g(x), None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let s = MonotoneSolver::default();
        let x = s
            .solve_increasing("cube", 8.0, |x| x * x * x - 8.0, Some(&|x| 3.0 * x * x))
            .unwrap();
        assert!((x - 2.0).abs() < 1e-13);
    }

    #[test]
    fn expands_bracket_for_far_roots() {
        let s = MonotoneSolver::default();
        let x = s.solve_increasing("far", 0.0, |x| x - 1.0e6, None).unwrap();
        assert!((x - 1.0e6).abs() < 1e-6);
        let x = s.solve_increasing("far", 0.0, |x| x + 3.0e5, None).unwrap();
        assert!((x + 3.0e5).abs() < 1e-6);
    }

    #[test]
    fn decreasing_maps() {
        let s = MonotoneSolver::default();
        let x = s.solve_decreasing("dec", 1.0, |x| 0.25 - x, None).unwrap();
        assert!((x - 0.25).abs() < 1e-13);
    }

    #[test]
    fn reports_missing_bracket() {
        let s = MonotoneSolver {
            max_doublings: 10,
            ..Default::default()
        };
        // bounded increasing map that never crosses zero
        let err = s
            .solve_increasing("atan", 0.0, |x| x.atan() - 2.0, None)
            .unwrap_err();
        assert!(matches!(err, Error::BracketNotFound { .. }));
    }
}
