//! Dissipative entropies built from a convex entropy of the reduced law.
//!
//! Given a strictly convex `η̃(v)`, the per-species entropies are
//!
//! ```text
//! η_r(u)     = ∫₀ᵘ η̃'(u_r⁻¹(w)) dw
//! η_{i-1}(u) = ∫₀ᵘ η_i'(h_{i-1}(w)) dw
//! ```
//!
//! so `η(U) = Σ η_i(u_i) + η̃(0)` restricts to `η̃` on the equilibrium
//! manifold and `η_U · Q(U) ≤ 0` everywhere.

use std::cell::RefCell;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMap;
use crate::error::{Error, Result};
use crate::interp::HermiteTable;
use crate::kinetics::{k_matrix, KineticsModel};
use crate::quadrature::adaptive_simpson;
use crate::scheme::GridState;

/// Default accuracy of the defining integrals.
pub const QUAD_TOL: f64 = 1e-12;
/// Default number of nodes of a cached entropy table.
pub const CACHE_POINTS: usize = 4096;

/// Strictly convex entropy of the reduced scalar law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BaseEntropy {
    /// `v² / 2`
    #[default]
    Quadratic,
    /// `v² / 2 + v⁴ / 12`
    QuadraticQuartic,
    /// `cosh v - 1`
    Cosh,
}

impl BaseEntropy {
    pub fn value(self, v: f64) -> f64 {
        match self {
            BaseEntropy::Quadratic => 0.5 * v * v,
            BaseEntropy::QuadraticQuartic => 0.5 * v * v + v.powi(4) / 12.0,
            BaseEntropy::Cosh => v.cosh() - 1.0,
        }
    }

    pub fn derivative(self, v: f64) -> f64 {
        match self {
            BaseEntropy::Quadratic => v,
            BaseEntropy::QuadraticQuartic => v + v * v * v / 3.0,
            BaseEntropy::Cosh => v.sinh(),
        }
    }

    pub fn second_derivative(self, v: f64) -> f64 {
        match self {
            BaseEntropy::Quadratic => 1.0,
            BaseEntropy::QuadraticQuartic => 1.0 + v * v,
            BaseEntropy::Cosh => v.cosh(),
        }
    }

    /// Sampled strict convexity.
    pub fn check_convex(self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = -10.0 + 0.05 * k as f64;
            let d = self.derivative(v);
            if !(d > prev) || !(self.second_derivative(v) > 0.0) {
                return Err(Error::Rejected(format!(
                    "{self:?} is not strictly convex at {v}"
                )));
            }
            prev = d;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SpeciesTable {
    /// `η_i` with derivative `η_i'`.
    eta: HermiteTable,
    /// `η_i'` with derivative `η_i''`.
    slope: HermiteTable,
}

#[derive(Debug, Clone)]
enum Form {
    /// Constructed from `η̃`; tables when cached.
    Constructed {
        eq: EquilibriumMap,
        base: BaseEntropy,
        tables: Option<Vec<SpeciesTable>>,
    },
    /// `η_i(u) = u²` for every species.
    SquareSum,
}

/// Per-species entropies, with evaluation helpers for the scheme's
/// entropy inequality.
#[derive(Debug, Clone)]
pub struct EntropyPack {
    velocities: Vec<f64>,
    model: KineticsModel,
    form: Form,
    quad_tol: f64,
}

impl EntropyPack {
    /// The entropy induced by `base`, evaluated by direct quadrature.
    pub fn build(eq: &EquilibriumMap, base: BaseEntropy) -> Result<Self> {
        base.check_convex()?;
        let model = eq.model().clone();
        Ok(EntropyPack {
            velocities: model.velocities().to_vec(),
            model,
            form: Form::Constructed {
                eq: eq.clone(),
                base,
                tables: None,
            },
            quad_tol: QUAD_TOL,
        })
    }

    /// As [`EntropyPack::build`], memoised on `points` nodes of
    /// `[-radius, radius]` per species and continued linearly outside.
    pub fn build_cached(
        eq: &EquilibriumMap,
        base: BaseEntropy,
        radius: f64,
        points: usize,
    ) -> Result<Self> {
        let mut pack = Self::build(eq, base)?;
        if !(radius > 0.0 && radius.is_finite()) || points < 3 {
            return Err(Error::Usage(format!(
                "entropy cache needs a positive radius and >= 3 points (got {radius}, {points})"
            )));
        }
        let tables = (0..pack.species())
            .map(|i| pack.species_table(i, radius, points))
            .collect::<Result<Vec<_>>>()?;
        if let Form::Constructed { tables: t, .. } = &mut pack.form {
            *t = Some(tables);
        }
        Ok(pack)
    }

    /// `η(U) = Σ u_i²`, convex and separable but not tied to the kinetics.
    pub fn square_sum(model: &KineticsModel) -> Self {
        EntropyPack {
            velocities: model.velocities().to_vec(),
            model: model.clone(),
            form: Form::SquareSum,
            quad_tol: 0.0,
        }
    }

    pub fn species(&self) -> usize {
        self.velocities.len()
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn is_cached(&self) -> bool {
        matches!(
            self.form,
            Form::Constructed {
                tables: Some(_),
                ..
            }
        )
    }

    pub fn base(&self) -> Option<BaseEntropy> {
        match self.form {
            Form::Constructed { base, .. } => Some(base),
            Form::SquareSum => None,
        }
    }

    /// Allowed positive part of a cell entropy residual.
    pub fn tolerance_budget(&self, fp_tol: f64, tau: f64) -> f64 {
        10.0 * (fp_tol + self.quad_tol) * (1.0 + tau)
    }

    /// Total concentration `u_r⁻¹(h_{r-1} ∘ .. ∘ h_i(u))` of the equilibrium
    /// state whose `i`-th component is `u`, with the equilibrium state.
    fn level(eq: &EquilibriumMap, i: usize, u: f64) -> Result<(f64, Vec<f64>)> {
        let r = eq.model().species();
        let mut w = u;
        for k in i..r - 1 {
            w = eq.h(k, w)?;
        }
        let state = eq.chain_from_last(w)?;
        Ok((state.iter().sum(), state))
    }

    fn direct_prime(eq: &EquilibriumMap, base: BaseEntropy, i: usize, u: f64) -> Result<f64> {
        Ok(base.derivative(Self::level(eq, i, u)?.0))
    }

    fn direct_second(eq: &EquilibriumMap, base: BaseEntropy, i: usize, u: f64) -> Result<f64> {
        let (v, state) = Self::level(eq, i, u)?;
        // dv/du_i along the manifold from the h_k slopes
        let slopes: Vec<f64> = eq
            .model()
            .reactions()
            .iter()
            .enumerate()
            .map(|(k, f)| -f.d_first(state[k], state[k + 1]) / f.d_second(state[k], state[k + 1]))
            .collect();
        let mut dv = 1.0;
        let mut d = 1.0;
        for s in &slopes[i..] {
            d *= s;
            dv += d;
        }
        d = 1.0;
        for s in slopes[..i].iter().rev() {
            d /= s;
            dv += d;
        }
        Ok(base.second_derivative(v) * dv)
    }

    fn direct_integral(
        &self,
        eq: &EquilibriumMap,
        base: BaseEntropy,
        i: usize,
        a: f64,
        b: f64,
    ) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let integral = adaptive_simpson(a, b, self.quad_tol, |w| {
            match Self::direct_prime(eq, base, i, w) {
                Ok(d) => d,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        });
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        integral.ok_or_else(|| {
            Error::InvalidState(format!(
                "entropy integral of species {} on [{a}, {b}]",
                i + 1
            ))
        })
    }

    fn species_table(&self, i: usize, radius: f64, points: usize) -> Result<SpeciesTable> {
        let Form::Constructed { eq, base, .. } = &self.form else {
            unreachable!("tables only exist for constructed packs")
        };
        let dx = 2.0 * radius / (points - 1) as f64;
        let node = |k: usize| -radius + k as f64 * dx;
        let mut d1 = Vec::with_capacity(points);
        let mut d2 = Vec::with_capacity(points);
        for k in 0..points {
            d1.push(Self::direct_prime(eq, *base, i, node(k))?);
            d2.push(Self::direct_second(eq, *base, i, node(k))?);
        }
        if let Some(k) = (1..points).find(|&k| !(d1[k] > d1[k - 1])) {
            return Err(Error::Rejected(format!(
                "eta_{}' is not increasing near {}",
                i + 1,
                node(k)
            )));
        }
        // values by cumulative integration outward from the node nearest 0
        let k0 = ((radius / dx).round() as usize).min(points - 1);
        let mut vals = vec![0.0; points];
        vals[k0] = self.direct_integral(eq, *base, i, 0.0, node(k0))?;
        for k in k0 + 1..points {
            vals[k] = vals[k - 1] + self.direct_integral(eq, *base, i, node(k - 1), node(k))?;
        }
        for k in (0..k0).rev() {
            vals[k] = vals[k + 1] - self.direct_integral(eq, *base, i, node(k), node(k + 1))?;
        }
        Ok(SpeciesTable {
            eta: HermiteTable::new(-radius, dx, vals, d1.clone()),
            slope: HermiteTable::new(-radius, dx, d1, d2),
        })
    }

    /// `η_i(u)`, 0-based species index.
    pub fn eta_species(&self, i: usize, u: f64) -> Result<f64> {
        match &self.form {
            Form::SquareSum => Ok(u * u),
            Form::Constructed {
                tables: Some(t), ..
            } => Ok(t[i].eta.value(u)),
            Form::Constructed { eq, base, .. } => self.direct_integral(eq, *base, i, 0.0, u),
        }
    }

    /// `η_i'(u)`.
    pub fn eta_prime(&self, i: usize, u: f64) -> Result<f64> {
        match &self.form {
            Form::SquareSum => Ok(2.0 * u),
            Form::Constructed {
                tables: Some(t), ..
            } => Ok(t[i].slope.value(u)),
            Form::Constructed { eq, base, .. } => Self::direct_prime(eq, *base, i, u),
        }
    }

    /// `η_i''(u)`.
    pub fn eta_second(&self, i: usize, u: f64) -> Result<f64> {
        match &self.form {
            Form::SquareSum => Ok(2.0),
            Form::Constructed {
                tables: Some(t), ..
            } => Ok(t[i].slope.derivative(u)),
            Form::Constructed { eq, base, .. } => Self::direct_second(eq, *base, i, u),
        }
    }

    /// Uncached `η_i(u)` for verification of a cached pack.
    pub fn eta_species_direct(&self, i: usize, u: f64) -> Result<f64> {
        match &self.form {
            Form::SquareSum => Ok(u * u),
            Form::Constructed { eq, base, .. } => self.direct_integral(eq, *base, i, 0.0, u),
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.species() {
            return Err(Error::InvalidState(format!(
                "state has {} components, entropy has {} species",
                u.len(),
                self.species()
            )));
        }
        Ok(())
    }

    /// `η(U) = Σ η_i(u_i) + η̃(0)`.
    pub fn eta(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let mut s = self.base().map_or(0.0, |b| b.value(0.0));
        for (i, &x) in u.iter().enumerate() {
            s += self.eta_species(i, x)?;
        }
        Ok(s)
    }

    /// `η_U(U)`.
    pub fn eta_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        u.iter()
            .enumerate()
            .map(|(i, &x)| self.eta_prime(i, x))
            .collect()
    }

    /// Entropy production `η_U(U) · Q(U)`, non-positive.
    pub fn dissipation(&self, u: &[f64]) -> Result<f64> {
        let grad = self.eta_gradient(u)?;
        let q = self.model.eval_q(u)?;
        Ok(grad.iter().zip(&q).map(|(a, b)| a * b).sum())
    }

    /// `S(U) = K diag(f_i / (η_i' - η_{i+1}')) Kᵀ`, with `Q(U) = S(U) η_U(U)`.
    pub fn dissipation_matrix(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let grad = self.eta_gradient(u)?;
        let r = self.species();
        let mut s = vec![0.0; r - 1];
        for (i, f) in self.model.reactions().iter().enumerate() {
            let d = grad[i] - grad[i + 1];
            let scale = grad[i].abs() + grad[i + 1].abs() + 1.0;
            s[i] = if d.abs() > 1e-9 * scale {
                f.eval(u[i], u[i + 1]) / d
            } else {
                // equilibrium limit of the quotient
                -f.d_second(u[i], u[i + 1]) / self.eta_second(i + 1, u[i + 1])?
            };
        }
        let k = k_matrix(r);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s));
        Ok(&k * d * k.transpose())
    }

    /// Numerical entropy flux
    /// `Ψ(U, V) = Σ (λ_i/2)(η_i(u_i) + η_i(v_i)) + (|λ_i|/2)(η_i(u_i) - η_i(v_i))`.
    pub fn psi(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let mut s = 0.0;
        for i in 0..self.species() {
            s += psi_term(
                self.velocities[i],
                self.eta_species(i, u[i])?,
                self.eta_species(i, v[i])?,
            );
        }
        Ok(s)
    }

    /// Per-cell residuals of the discrete entropy inequality between two
    /// consecutive layers; each should be `≤ 0` up to
    /// [`EntropyPack::tolerance_budget`].
    pub fn cell_entropy_residual(
        &self,
        prev: &GridState,
        next: &GridState,
        eps: f64,
    ) -> Result<EntropyStep> {
        prev.check_same_grid(next)?;
        if next.n != prev.n + 1 || !(next.t > prev.t) {
            return Err(Error::Usage(format!(
                "layers {} -> {} are not consecutive",
                prev.n, next.n
            )));
        }
        self.check_len(prev.cell(0))?;
        let r = self.species();
        let dt = next.t - prev.t;
        let nu = dt / prev.dx;
        let tau = dt / eps;
        let eta_prev = self.eta_table(prev)?;
        let ncell = prev.len();
        let psi_at = |a: usize, b: usize| -> f64 {
            (0..r)
                .map(|i| psi_term(self.velocities[i], eta_prev[a * r + i], eta_prev[b * r + i]))
                .sum()
        };
        let base0 = self.base().map_or(0.0, |b| b.value(0.0));
        let cells: Vec<(f64, f64)> = (0..ncell)
            .into_par_iter()
            .map(|j| -> Result<(f64, f64)> {
                let w = next.cell(j);
                let mut eta_new = base0;
                for (i, &x) in w.iter().enumerate() {
                    eta_new += self.eta_species(i, x)?;
                }
                let eta_old = base0 + eta_prev[j * r..(j + 1) * r].iter().sum::<f64>();
                let left = j.saturating_sub(1);
                let right = (j + 1).min(ncell - 1);
                let flux = psi_at(j, right) - psi_at(left, j);
                let prod = self.dissipation(w)?;
                Ok((eta_new - eta_old + nu * flux - tau * prod, prod))
            })
            .collect::<Result<_>>()?;
        let mut residuals = Vec::with_capacity(ncell);
        let mut production = 0.0;
        for (res, prod) in cells {
            residuals.push(res);
            production += prod;
        }
        Ok(EntropyStep {
            step: next.n,
            residuals,
            dissipation_integral: production * prev.dx,
            tau,
        })
    }

    fn eta_table(&self, state: &GridState) -> Result<Vec<f64>> {
        let r = self.species();
        state
            .values()
            .par_iter()
            .enumerate()
            .map(|(k, &x)| self.eta_species(k % r, x))
            .collect()
    }
}

fn psi_term(lambda: f64, eu: f64, ev: f64) -> f64 {
    0.5 * lambda * (eu + ev) + 0.5 * lambda.abs() * (eu - ev)
}

/// Entropy residuals of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyStep {
    pub step: usize,
    pub residuals: Vec<f64>,
    /// `Σ_j η_U Q (U_j^{n+1}) Δx`.
    pub dissipation_integral: f64,
    pub tau: f64,
}

impl EntropyStep {
    /// Largest residual and its cell.
    pub fn max(&self) -> (f64, usize) {
        self.residuals
            .iter()
            .enumerate()
            .fold(
                (f64::NEG_INFINITY, 0),
                |(m, k), (j, &x)| if x > m { (x, j) } else { (m, k) },
            )
    }

    pub fn summary(&self) -> EntropyRow {
        let (max_residual, argmax_cell) = self.max();
        EntropyRow {
            step: self.step,
            max_residual,
            argmax_cell,
            dissipation_integral: self.dissipation_integral,
        }
    }
}

/// One line of the entropy residual report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub step: usize,
    pub max_residual: f64,
    pub argmax_cell: usize,
    pub dissipation_integral: f64,
}

pub fn write_entropy_report(path: &Path, rows: &[EntropyRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
