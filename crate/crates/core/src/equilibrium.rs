//! Equilibrium manifold of the reaction chain.
//!
//! `f_i(u_i, u_{i+1}) = 0` iff `u_{i+1} = h_i(u_i)`. Composing the `h_i`
//! parameterises the manifold by the total concentration `v = Σ u_i`, and the
//! equilibrium dynamics reduce to `v_t + h(v)_x = 0` with
//! `h(v) = Σ λ_i u_i(v)`.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::kinetics::KineticsModel;
use crate::roots::MonotoneSolver;

/// Points in a memoised flux table.
pub const DEFAULT_TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone)]
pub struct EquilibriumMap {
    model: KineticsModel,
    solver: MonotoneSolver,
}

impl EquilibriumMap {
    pub fn new(model: KineticsModel) -> Self {
        Self::with_solver(model, MonotoneSolver::default())
    }

    pub fn with_solver(model: KineticsModel, solver: MonotoneSolver) -> Self {
        EquilibriumMap { model, solver }
    }

    pub fn model(&self) -> &KineticsModel {
        &self.model
    }

    pub fn solver(&self) -> &MonotoneSolver {
        &self.solver
    }

    /// `h_i(u)`, 0-based reaction index.
    pub fn h(&self, i: usize, u: f64) -> Result<f64> {
        let f = self.reaction(i)?;
        let dg = |w: f64| f.d_second(u, w);
        self.solver
            .solve_increasing("h_i", u, |w| f.eval(u, w), Some(&dg))
    }

    /// `h_i^{-1}(w)`: the `u` with `f_i(u, w) = 0`.
    pub fn h_inverse(&self, i: usize, w: f64) -> Result<f64> {
        let f = self.reaction(i)?;
        let dg = |u: f64| f.d_first(u, w);
        self.solver
            .solve_decreasing("h_i inverse", w, |u| f.eval(u, w), Some(&dg))
    }

    /// `h_i'(u) = -∂_1 f_i / ∂_2 f_i` on the manifold.
    pub fn h_slope(&self, i: usize, u: f64) -> Result<f64> {
        let f = self.reaction(i)?;
        let w = self.h(i, u)?;
        Ok(-f.d_first(u, w) / f.d_second(u, w))
    }

    fn reaction(&self, i: usize) -> Result<&dyn crate::kinetics::ReactionFunction> {
        self.model
            .reactions()
            .get(i)
            .map(|f| f.as_ref())
            .ok_or_else(|| Error::Usage(format!("reaction index {i} out of range")))
    }

    /// Equilibrium state with first component `u1`.
    pub fn chain_from_first(&self, u1: f64) -> Result<Vec<f64>> {
        let r = self.model.species();
        let mut u = Vec::with_capacity(r);
        u.push(u1);
        for i in 0..r - 1 {
            let next = self.h(i, u[i])?;
            u.push(next);
        }
        Ok(u)
    }

    /// Equilibrium state with last component `ur`.
    pub fn chain_from_last(&self, ur: f64) -> Result<Vec<f64>> {
        let r = self.model.species();
        let mut u = vec![0.0; r];
        u[r - 1] = ur;
        for i in (0..r - 1).rev() {
            u[i] = self.h_inverse(i, u[i + 1])?;
        }
        Ok(u)
    }

    /// `(u_1(v), .., u_r(v))`.
    pub fn u_of_v(&self, v: f64) -> Result<Vec<f64>> {
        if !v.is_finite() {
            return Err(Error::InvalidState(format!("total concentration {v}")));
        }
        if self.model.species() == 1 {
            return Ok(vec![v]);
        }
        if v == 0.0 {
            return Ok(vec![0.0; self.model.species()]);
        }
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let total = |u1: f64| match self.chain_from_first(u1) {
            Ok(u) => u.iter().sum::<f64>() - v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let slope = |u1: f64| {
            self.chain_slopes(u1)
                .map(|d| d.iter().sum())
                .unwrap_or(f64::NAN)
        };
        let solved = self
            .solver
            .solve_increasing("u_1(v)", v, total, Some(&slope));
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        self.chain_from_first(solved?)
    }

    /// `du_i / du_1` along the manifold.
    fn chain_slopes(&self, u1: f64) -> Result<Vec<f64>> {
        let u = self.chain_from_first(u1)?;
        let mut d = vec![1.0; u.len()];
        for (i, f) in self.model.reactions().iter().enumerate() {
            d[i + 1] = d[i] * (-f.d_first(u[i], u[i + 1]) / f.d_second(u[i], u[i + 1]));
        }
        Ok(d)
    }

    /// `(u_1'(v), .., u_r'(v))`.
    pub fn u_slopes(&self, v: f64) -> Result<Vec<f64>> {
        let u = self.u_of_v(v)?;
        let d = self.chain_slopes(u[0])?;
        let s: f64 = d.iter().sum();
        Ok(d.into_iter().map(|x| x / s).collect())
    }

    /// Reduced flux `h(v) = Σ λ_i u_i(v)`.
    pub fn reduced_flux(&self, v: f64) -> Result<f64> {
        let u = self.u_of_v(v)?;
        Ok(dot(self.model.velocities(), &u))
    }

    /// `h'(v)`.
    pub fn reduced_flux_slope(&self, v: f64) -> Result<f64> {
        let d = self.u_slopes(v)?;
        Ok(dot(self.model.velocities(), &d))
    }

    /// Equilibrium state carrying the same total concentration as `u`.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.model.species() {
            return Err(Error::InvalidState(format!(
                "state has {} components, model has {} species",
                u.len(),
                self.model.species()
            )));
        }
        self.u_of_v(u.iter().sum())
    }

    /// `u_r^{-1}(w)`: total concentration of the equilibrium state whose last
    /// component is `w`.
    pub fn total_from_last(&self, w: f64) -> Result<f64> {
        Ok(self.chain_from_last(w)?.iter().sum())
    }

    /// Memoised reduced flux on `[lo, hi]`.
    pub fn flux_table(&self, lo: f64, hi: f64, points: usize) -> Result<FluxTable> {
        if !(hi > lo) || points < 2 {
            return Err(Error::Usage(format!(
                "flux table needs lo < hi and >= 2 points (got [{lo}, {hi}], {points})"
            )));
        }
        let dx = (hi - lo) / (points - 1) as f64;
        let mut ys = Vec::with_capacity(points);
        let mut ms = Vec::with_capacity(points);
        for k in 0..points {
            let v = if k + 1 == points {
                hi
            } else {
                lo + k as f64 * dx
            };
            ys.push(self.reduced_flux(v)?);
            ms.push(self.reduced_flux_slope(v)?);
        }
        Ok(FluxTable {
            table: HermiteTable::monotone(lo, dx, ys, ms),
        })
    }
}

/// Monotone cubic table of the reduced flux `h`.
#[derive(Debug, Clone)]
pub struct FluxTable {
    table: HermiteTable,
}

impl FluxTable {
    pub fn value(&self, v: f64) -> f64 {
        self.table.value(v)
    }

    pub fn slope(&self, v: f64) -> f64 {
        self.table.derivative(v)
    }

    pub fn hermite(&self) -> &HermiteTable {
        &self.table
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
