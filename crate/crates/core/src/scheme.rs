//! Semi-implicit upwind scheme.
//!
//! Transport is explicit first-order upwind, the stiff source is taken at the
//! new time level:
//!
//! ```text
//! U_j^{n+1} - τ Q(U_j^{n+1}) = ν⁺ U_{j-1}^n + (I - ν⁺ + ν⁻) U_j^n - ν⁻ U_{j+1}^n
//! ```
//!
//! with `ν± = Δt/Δx Λ±` and `τ = Δt/ε`. Each cell is an independent
//! nonlinear solve; ghost cells repeat the edge values.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumMap;
use crate::error::{ensure_finite, Error, Result};
use crate::kinetics::KineticsModel;
use crate::profile::InitialData;
use crate::tridiag::thomas_solve;

/// Uniform grid on `[x_left, x_right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
}

impl GridSpec {
    pub fn cells(&self) -> Result<usize> {
        let len = self.x_right - self.x_left;
        if !(self.dx > 0.0 && len > 0.0 && len.is_finite()) {
            return Err(Error::Config(format!("bad grid {self:?}")));
        }
        let n = (len / self.dx).round();
        if n < 1.0 || (n * self.dx - len).abs() > 1e-9 * len {
            return Err(Error::Config(format!(
                "dx = {} does not divide the domain length {len}",
                self.dx
            )));
        }
        Ok(n as usize)
    }
}

/// One time level of cell averages, stored cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub dx: f64,
    pub x_left: f64,
    pub t: f64,
    pub n: usize,
    species: usize,
    cells: Vec<f64>,
}

impl GridState {
    pub fn new(x_left: f64, dx: f64, species: usize, cells: Vec<f64>) -> Result<Self> {
        if species == 0 || cells.is_empty() || !cells.len().is_multiple_of(species) {
            return Err(Error::InvalidState(format!(
                "{} values do not form cells of {species} species",
                cells.len()
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && x_left.is_finite()) {
            return Err(Error::InvalidState(format!("bad grid geometry dx = {dx}")));
        }
        ensure_finite(&cells, "cell values")?;
        Ok(GridState {
            dx,
            x_left,
            t: 0.0,
            n: 0,
            species,
            cells,
        })
    }

    /// Project `data` onto `grid`.
    pub fn from_initial(
        grid: &GridSpec,
        data: &InitialData,
        species: usize,
        eq: Option<&EquilibriumMap>,
    ) -> Result<Self> {
        let n = grid.cells()?;
        let cells = data.project(grid.x_left, grid.dx, n, species, eq)?;
        Self::new(grid.x_left, grid.dx, species, cells)
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn len(&self) -> usize {
        self.cells.len() / self.species
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        &self.cells[j * self.species..(j + 1) * self.species]
    }

    pub fn values(&self) -> &[f64] {
        &self.cells
    }

    pub fn iter_cells(&self) -> std::slice::ChunksExact<'_, f64> {
        self.cells.chunks_exact(self.species)
    }

    pub fn x_center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.len() as f64 * self.dx
    }

    /// `Σ_j Σ_i u_ij Δx`.
    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() * self.dx
    }

    /// `Σ_j |U_j - U_{j-1}|` in the 1-norm.
    pub fn total_variation(&self) -> f64 {
        let r = self.species;
        self.cells.windows(r + 1).map(|w| (w[r] - w[0]).abs()).sum()
    }

    /// `max_j |U_j|` in the 1-norm.
    pub fn sup(&self) -> f64 {
        self.iter_cells()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `Σ_j |U_j - V_j| Δx`.
    pub fn l1_distance(&self, other: &GridState) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(s * self.dx)
    }

    pub fn check_same_grid(&self, other: &GridState) -> Result<()> {
        if self.species != other.species
            || self.cells.len() != other.cells.len()
            || self.dx != other.dx
        {
            return Err(Error::Usage("states live on different grids".into()));
        }
        Ok(())
    }

    /// 1-norms of the two edge cells, the values the ghost cells repeat.
    pub fn tail_norms(&self) -> (f64, f64) {
        let norm = |c: &[f64]| c.iter().map(|x| x.abs()).sum::<f64>();
        (norm(self.cell(0)), norm(self.cell(self.len() - 1)))
    }
}

/// Parameters of the time stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub eps: f64,
    pub cfl: f64,
    /// Fixed time step; derived from `cfl` when absent.
    pub dt: Option<f64>,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_fallback: bool,
    pub newton_max_steps: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            eps: 1e-2,
            cfl: 0.9,
            dt: None,
            fp_tol: 1e-12,
            fp_max_iter: 200,
            newton_fallback: true,
            newton_max_steps: 50,
        }
    }
}

impl SchemeParams {
    pub fn with_eps(eps: f64) -> Self {
        SchemeParams {
            eps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(Error::Config(
                "fp_tol and fp_max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Time step satisfying `Δt/Δx max|λ_i| ≤ 1`.
///
/// Without a user `Δt` the step is `cfl Δx / max|λ_i|`; with one, each
/// Courant number is checked. Pure reaction models (all `λ_i = 0`) need a
/// user step.
pub fn check_cfl(params: &SchemeParams, model: &KineticsModel, dx: f64) -> Result<f64> {
    params.validate()?;
    if !(dx > 0.0) {
        return Err(Error::Config(format!("dx must be positive, got {dx}")));
    }
    match params.dt {
        Some(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
            validate_dt(model, dx, dt)?;
            Ok(dt)
        }
        None => {
            let speed = model.max_speed();
            if speed == 0.0 {
                return Err(Error::Config(
                    "all velocities vanish; a time step must be given".into(),
                ));
            }
            Ok(params.cfl * dx / speed)
        }
    }
}

fn validate_dt(model: &KineticsModel, dx: f64, dt: f64) -> Result<()> {
    // a few ulps of slack so that dt = dx / |λ| passes
    let limit = 1.0 + 8.0 * f64::EPSILON;
    for (i, l) in model.velocities().iter().enumerate() {
        let courant = dt / dx * l.abs();
        if courant > limit {
            return Err(Error::Cfl {
                index: i + 1,
                courant,
                limit: 1.0,
            });
        }
    }
    Ok(())
}

/// How one cell solve went.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellReport {
    pub picard_iterations: usize,
    pub newton_steps: usize,
    /// `‖W - τ Q(W) - rhs‖₁` of the returned value.
    pub residual: f64,
    /// Accepted at the rounding floor rather than at `fp_tol`.
    pub at_floor: bool,
}

/// Reusable buffers for cell solves.
#[derive(Debug, Clone)]
pub struct CellWorkspace {
    zero: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    scratch: Vec<f64>,
    q: Vec<f64>,
    g: Vec<f64>,
    next: Vec<f64>,
    best: Vec<f64>,
    z: Vec<f64>,
    dz: Vec<f64>,
    zt: Vec<f64>,
    trial: Vec<f64>,
    history: Vec<f64>,
}

impl CellWorkspace {
    pub fn new(r: usize) -> Self {
        let n = r.saturating_sub(1);
        CellWorkspace {
            zero: vec![0.0; r],
            a: vec![0.0; n],
            b: vec![0.0; n],
            sub: vec![0.0; r],
            diag: vec![0.0; r],
            sup: vec![0.0; r],
            scratch: vec![0.0; r],
            q: vec![0.0; r],
            g: vec![0.0; n],
            next: vec![0.0; r],
            best: vec![0.0; r],
            z: vec![0.0; n],
            dz: vec![0.0; n],
            zt: vec![0.0; n],
            trial: vec![0.0; r],
            history: Vec::new(),
        }
    }
}

const STAGNATION_WINDOW: usize = 5;
const STAGNATION_FACTOR: f64 = 0.999;
const FLOOR_ULPS: f64 = 64.0;

/// Solve `W - τ Q(W) = rhs`, writing `W` into `out`.
///
/// The iteration is `W ← (I - τ 𝒬(V, 0))^{-1} rhs` with `V` the previous
/// iterate, exact in one step for linear kinetics. It is carried out in the
/// reaction extents `z` (`W = rhs + K z`), which keeps `Σ W = Σ rhs` to
/// rounding in the values even when `τ` is huge. If it stalls above
/// `fp_tol`, a damped Newton iteration in the same coordinates takes over. A value is accepted when its residual is at
/// most `fp_tol`, or when it sits at the rounding floor of the residual
/// evaluation, which exceeds `fp_tol` once `τ` is large.
pub fn solve_cell(
    model: &KineticsModel,
    params: &SchemeParams,
    tau: f64,
    rhs: &[f64],
    out: &mut [f64],
    ws: &mut CellWorkspace,
) -> Result<CellReport> {
    let r = model.species();
    if rhs.len() != r || out.len() != r {
        return Err(Error::InvalidState(format!(
            "cell solve: {} / {} values for {r} species",
            rhs.len(),
            out.len()
        )));
    }
    ensure_finite(rhs, "cell right-hand side")?;
    let mut report = CellReport::default();
    out.copy_from_slice(rhs);
    if r == 1 || tau == 0.0 {
        return Ok(report);
    }
    ws.history.clear();

    let mut best_res = residual(model, tau, rhs, out, &mut ws.q);
    ws.best.copy_from_slice(out);
    ws.history.push(best_res);
    let mut since_improvement = 0;
    while best_res > params.fp_tol && report.picard_iterations < params.fp_max_iter {
        picard_update(model, tau, rhs, out, ws)?;
        report.picard_iterations += 1;
        out.copy_from_slice(&ws.next);
        let res = residual(model, tau, rhs, out, &mut ws.q);
        ws.history.push(res);
        if !res.is_finite() {
            break;
        }
        if res < STAGNATION_FACTOR * best_res {
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if res < best_res {
            best_res = res;
            ws.best.copy_from_slice(out);
        }
        if since_improvement >= STAGNATION_WINDOW {
            break;
        }
    }
    out.copy_from_slice(&ws.best);

    if best_res > params.fp_tol && params.newton_fallback {
        let (steps, res) = newton(model, params, tau, rhs, out, ws, best_res);
        report.newton_steps = steps;
        best_res = res;
    }
    report.residual = best_res;
    if best_res <= params.fp_tol {
        return Ok(report);
    }
    if best_res <= rounding_floor(model, tau, rhs, out, ws) {
        report.at_floor = true;
        return Ok(report);
    }
    Err(Error::CellNotConverged {
        cell: None,
        final_residual: best_res,
        history: ws.history.clone(),
    })
}

/// Convenience wrapper allocating its own buffers.
pub fn solve_cell_alloc(
    model: &KineticsModel,
    params: &SchemeParams,
    tau: f64,
    rhs: &[f64],
) -> Result<(Vec<f64>, CellReport)> {
    let mut ws = CellWorkspace::new(model.species());
    let mut out = vec![0.0; rhs.len()];
    let report = solve_cell(model, params, tau, rhs, &mut out, &mut ws)?;
    Ok((out, report))
}

/// `‖W - τ Q(W) - rhs‖₁`.
pub fn cell_residual(model: &KineticsModel, tau: f64, rhs: &[f64], w: &[f64]) -> f64 {
    let mut q = vec![0.0; w.len()];
    residual(model, tau, rhs, w, &mut q)
}

fn residual(model: &KineticsModel, tau: f64, rhs: &[f64], w: &[f64], q: &mut [f64]) -> f64 {
    model.q_into(w, q);
    w.iter()
        .zip(q.iter())
        .zip(rhs)
        .map(|((w, q), b)| (w - tau * q - b).abs())
        .sum()
}

fn picard_update(
    model: &KineticsModel,
    tau: f64,
    rhs: &[f64],
    v: &[f64],
    ws: &mut CellWorkspace,
) -> Result<()> {
    // 𝒬(V, 0) = K 𝓜 with 𝓜 bidiagonal (A_i, B_i), so W = rhs + K z and
    // (I - τ 𝓜 K) z = τ 𝓜 rhs; 𝓜 K has the tridiagonal layout of M
    let n = rhs.len() - 1;
    model.mean_values_into(v, &ws.zero, &mut ws.a, &mut ws.b);
    for i in 0..n {
        ws.diag[i] = 1.0 - tau * (ws.a[i] - ws.b[i]);
        if i + 1 < n {
            ws.sup[i] = -tau * ws.b[i];
            ws.sub[i] = tau * ws.a[i + 1];
        }
        ws.trial[i] = tau * (ws.a[i] * rhs[i] + ws.b[i] * rhs[i + 1]);
    }
    thomas_solve(
        &ws.sub[..n - 1],
        &ws.diag[..n],
        &ws.sup[..n - 1],
        &ws.trial[..n],
        &mut ws.z,
        &mut ws.scratch[..n],
    )?;
    compose(rhs, &ws.z, &mut ws.next);
    Ok(())
}

/// Damped Newton on `F(z) = z - τ G(rhs + K z)`; leaves the best state found
/// in `w` and returns the step count and its residual.
fn newton(
    model: &KineticsModel,
    params: &SchemeParams,
    tau: f64,
    rhs: &[f64],
    w: &mut [f64],
    ws: &mut CellWorkspace,
    start_res: f64,
) -> (usize, f64) {
    let n = rhs.len() - 1;
    // z = K' (W - rhs), partial sums
    let mut acc = 0.0;
    for i in 0..n {
        acc += w[i] - rhs[i];
        ws.z[i] = acc;
    }
    let mut res = start_res;
    let mut steps = 0;
    while steps < params.newton_max_steps && res > params.fp_tol {
        steps += 1;
        model.g_into(w, &mut ws.g);
        model.partials_into(w, &mut ws.a, &mut ws.b);
        // J = I - τ M at W, M = [[A_1 - B_1, B_1], [-A_2, A_2 - B_2, B_2], ...]
        for i in 0..n {
            ws.diag[i] = 1.0 - tau * (ws.a[i] - ws.b[i]);
            if i + 1 < n {
                ws.sup[i] = -tau * ws.b[i];
                ws.sub[i] = tau * ws.a[i + 1];
            }
            ws.trial[i] = -(ws.z[i] - tau * ws.g[i]);
        }
        let solved = thomas_solve(
            &ws.sub[..n - 1],
            &ws.diag[..n],
            &ws.sup[..n - 1],
            &ws.trial[..n],
            &mut ws.dz,
            &mut ws.scratch[..n],
        );
        if solved.is_err() || ws.dz.iter().any(|d| !d.is_finite()) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..params.newton_max_steps {
            for i in 0..n {
                ws.zt[i] = ws.z[i] + step * ws.dz[i];
            }
            compose(rhs, &ws.zt, &mut ws.trial);
            let trial_res = residual(model, tau, rhs, &ws.trial, &mut ws.q);
            if trial_res < res {
                ws.z.copy_from_slice(&ws.zt);
                w.copy_from_slice(&ws.trial);
                res = trial_res;
                ws.history.push(res);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (steps, res)
}

/// `out = rhs + K z`.
fn compose(rhs: &[f64], z: &[f64], out: &mut [f64]) {
    let n = z.len();
    let mut prev = 0.0;
    for i in 0..=n {
        let cur = if i < n { z[i] } else { 0.0 };
        out[i] = rhs[i] + (cur - prev);
        prev = cur;
    }
}

/// Size of the rounding error in evaluating the residual at `w`.
fn rounding_floor(
    model: &KineticsModel,
    tau: f64,
    rhs: &[f64],
    w: &[f64],
    ws: &mut CellWorkspace,
) -> f64 {
    model.partials_into(w, &mut ws.a, &mut ws.b);
    let lip =
        ws.a.iter()
            .zip(&ws.b)
            .fold(0.0f64, |m, (a, b)| m.max(a.abs() + b.abs()));
    let norm = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>();
    FLOOR_ULPS * f64::EPSILON * (norm(rhs) + norm(w) * (1.0 + tau * lip))
}

/// Aggregate solver statistics of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub dt: f64,
    pub tau: f64,
    pub picard_total: usize,
    pub picard_max: usize,
    pub newton_cells: usize,
    pub newton_max: usize,
    pub floor_cells: usize,
    pub max_residual: f64,
}

impl StepStats {
    fn absorb(&mut self, c: &CellReport) {
        self.picard_total += c.picard_iterations;
        self.picard_max = self.picard_max.max(c.picard_iterations);
        if c.newton_steps > 0 {
            self.newton_cells += 1;
            self.newton_max = self.newton_max.max(c.newton_steps);
        }
        if c.at_floor {
            self.floor_cells += 1;
        }
        self.max_residual = self.max_residual.max(c.residual);
    }
}

/// The time stepper for one model, parameter set and grid spacing.
#[derive(Debug, Clone)]
pub struct Scheme {
    model: KineticsModel,
    params: SchemeParams,
    dx: f64,
    dt: f64,
}

impl Scheme {
    pub fn new(model: KineticsModel, params: SchemeParams, dx: f64) -> Result<Self> {
        let dt = check_cfl(&params, &model, dx)?;
        Ok(Scheme {
            model,
            params,
            dx,
            dt,
        })
    }

    pub fn model(&self) -> &KineticsModel {
        &self.model
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Advance one step of size `dt` (at most the validated step).
    pub fn step(&self, state: &GridState, dt: f64) -> Result<(GridState, StepStats)> {
        if state.species() != self.model.species() || state.dx != self.dx {
            return Err(Error::Usage("state does not match the scheme".into()));
        }
        if !(dt > 0.0) || dt > self.dt * (1.0 + 1e-12) {
            return Err(Error::Usage(format!("step {dt} outside (0, {}]", self.dt)));
        }
        validate_dt(&self.model, self.dx, dt)?;
        let r = self.model.species();
        let ncell = state.len();
        let nu: Vec<(f64, f64)> = self
            .model
            .velocities()
            .iter()
            .map(|&l| (dt / self.dx * l.max(0.0), dt / self.dx * l.min(0.0)))
            .collect();
        let tau = dt / self.params.eps;
        let old = state.values();
        let mut next = vec![0.0; old.len()];
        let mut reports: Vec<Result<CellReport>> =
            (0..ncell).map(|_| Ok(CellReport::default())).collect();
        next.par_chunks_mut(r)
            .zip(reports.par_iter_mut())
            .enumerate()
            .for_each_init(
                || (CellWorkspace::new(r), vec![0.0; r]),
                |(ws, rhs), (j, (out, report))| {
                    let left = j.saturating_sub(1);
                    let right = (j + 1).min(ncell - 1);
                    for i in 0..r {
                        let (p, m) = nu[i];
                        rhs[i] = p * old[left * r + i] + (1.0 - p + m) * old[j * r + i]
                            - m * old[right * r + i];
                    }
                    *report = solve_cell(&self.model, &self.params, tau, rhs, out, ws);
                },
            );
        let mut stats = StepStats {
            dt,
            tau,
            ..Default::default()
        };
        for (j, rep) in reports.into_iter().enumerate() {
            match rep {
                Ok(c) => stats.absorb(&c),
                Err(Error::CellNotConverged {
                    final_residual,
                    history,
                    ..
                }) => {
                    return Err(Error::CellNotConverged {
                        cell: Some(j),
                        final_residual,
                        history,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        let mut new_state = GridState::new(state.x_left, state.dx, r, next)?;
        new_state.t = state.t + dt;
        new_state.n = state.n + 1;
        Ok((new_state, stats))
    }

    /// Step until `t_end`, shortening the last step to land on it exactly.
    /// `observer` sees every consecutive pair of layers.
    pub fn run<F>(&self, mut state: GridState, t_end: f64, mut observer: F) -> Result<GridState>
    where
        F: FnMut(&GridState, &GridState, &StepStats) -> Result<()>,
    {
        if !(t_end >= state.t) {
            return Err(Error::Usage(format!(
                "t_end {t_end} before t = {}",
                state.t
            )));
        }
        while state.t < t_end {
            let remaining = t_end - state.t;
            let last = remaining <= self.dt * (1.0 + 1e-10);
            let dt = if last { remaining } else { self.dt };
            let (mut next, stats) = self.step(&state, dt)?;
            if last {
                next.t = t_end;
            }
            observer(&state, &next, &stats)?;
            state = next;
        }
        Ok(state)
    }
}

/// `snap_t<t>_eps<ε>_dx<Δx>.csv`.
pub fn snapshot_name(t: f64, eps: f64, dx: f64) -> String {
    format!("snap_t{t}_eps{eps}_dx{dx}.csv")
}

/// Write `x_center, u_1..u_r` rows into `dir`, returning the file path.
pub fn write_snapshot(dir: &Path, state: &GridState, eps: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(snapshot_name(state.t, eps, state.dx));
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["x_center".to_string()];
    header.extend((1..=state.species()).map(|i| format!("u_{i}")));
    w.write_record(&header)?;
    for j in 0..state.len() {
        let mut row = vec![state.x_center(j).to_string()];
        row.extend(state.cell(j).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    fn linear2() -> KineticsModel {
        KineticsModel::linear_chain(vec![1.0, 0.0], &[1.0], &[1.0]).unwrap()
    }

    fn cubic3() -> KineticsModel {
        KineticsModel::cubic_chain(vec![1.0, 0.0, -1.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let model = KineticsModel::linear_chain(vec![2.0, -1.0], &[1.0], &[1.0]).unwrap();
        let p = SchemeParams {
            cfl: 1.0,
            ..Default::default()
        };
        assert!((check_cfl(&p, &model, 0.01).unwrap() - 0.005).abs() < 1e-18);

        let model = KineticsModel::linear_chain(vec![1.0, -1.0], &[1.0], &[1.0]).unwrap();
        let p = SchemeParams {
            dt: Some(0.03),
            ..Default::default()
        };
        match check_cfl(&p, &model, 0.02) {
            Err(Error::Cfl { index, courant, .. }) => {
                assert_eq!(index, 1);
                assert!((courant - 1.5).abs() < 1e-12);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }

        let still = KineticsModel::linear_chain(vec![0.0, 0.0], &[1.0], &[1.0]).unwrap();
        assert!(matches!(
            check_cfl(&SchemeParams::default(), &still, 0.1),
            Err(Error::Config(_))
        ));
        let p = SchemeParams {
            dt: Some(0.5),
            ..Default::default()
        };
        assert_eq!(check_cfl(&p, &still, 0.1).unwrap(), 0.5);
    }

    #[test]
    fn cell_solve_examples() {
        let model = linear2();
        let p = SchemeParams::default();
        let (w, rep) = solve_cell_alloc(&model, &p, 1.0, &[1.0, 0.0]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-14 && (w[1] - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(rep.picard_iterations, 1);
        assert!(cell_residual(&model, 1.0, &[1.0, 0.0], &w) <= 1e-15);

        let (w, _) = solve_cell_alloc(&model, &p, 1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
        let (w, rep) = solve_cell_alloc(&model, &p, 1e3, &[0.4, 0.4]).unwrap();
        assert_eq!(w, vec![0.4, 0.4]);
        assert_eq!(rep.picard_iterations, 0);
    }

    #[test]
    fn nonlinear_cell_solve_converges() {
        let model = cubic3();
        let p = SchemeParams::default();
        for &tau in &[1e-2, 1.0, 50.0] {
            let rhs = [1.3, -0.4, 0.7];
            let (w, rep) = solve_cell_alloc(&model, &p, tau, &rhs).unwrap();
            assert!(rep.residual <= 1e-12, "tau {tau}: {rep:?}");
            assert!((w.iter().sum::<f64>() - 1.6).abs() < 1e-13);
        }
    }

    #[test]
    fn stiff_cell_solve_reaches_equilibrium() {
        let model = cubic3();
        let p = SchemeParams::default();
        let rhs = [2.0, 0.0, -0.5];
        let (w, rep) = solve_cell_alloc(&model, &p, 1e6, &rhs).unwrap();
        assert!(rep.residual <= rounding_floor(&model, 1e6, &rhs, &w, &mut CellWorkspace::new(3)));
        let g = model.eval_g(&w).unwrap();
        assert!(g.iter().map(|x| x.abs()).sum::<f64>() < 1e-5);
        assert!((w.iter().sum::<f64>() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn newton_alone_solves_the_cell() {
        // forcing the fallback immediately
        let model = cubic3();
        let p = SchemeParams {
            fp_max_iter: 1,
            ..Default::default()
        };
        let rhs = [3.0, -1.0, 0.5];
        let (_, rep) = solve_cell_alloc(&model, &p, 20.0, &rhs).unwrap();
        assert!(rep.newton_steps > 0 && rep.residual <= 1e-12, "{rep:?}");
        let no_newton = SchemeParams {
            newton_fallback: false,
            ..p
        };
        assert!(matches!(
            solve_cell_alloc(&model, &no_newton, 20.0, &rhs),
            Err(Error::CellNotConverged { .. })
        ));
    }

    fn state(species: usize, values: Vec<f64>, dx: f64) -> GridState {
        GridState::new(0.0, dx, species, values).unwrap()
    }

    #[test]
    fn zero_and_uniform_equilibrium_are_stationary() {
        let scheme = Scheme::new(cubic3(), SchemeParams::default(), 0.1).unwrap();
        let zero = state(3, vec![0.0; 30], 0.1);
        let dt = scheme.dt();
        let (next, _) = scheme.step(&zero, dt).unwrap();
        assert_eq!(next.values(), zero.values());

        let eq = EquilibriumMap::new(cubic3());
        let u = eq.u_of_v(1.2).unwrap();
        let uniform = state(3, u.repeat(10), 0.1);
        let end = scheme
            .run(uniform.clone(), 10.0 * dt, |_, _, _| Ok(()))
            .unwrap();
        assert_eq!(end.n, 10);
        for (a, b) in end.values().iter().zip(uniform.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_courant_transport_is_an_exact_shift() {
        let model = KineticsModel::transport_only(1.0).unwrap();
        let p = SchemeParams {
            cfl: 1.0,
            ..Default::default()
        };
        let scheme = Scheme::new(model, p, 0.1).unwrap();
        let mut values = vec![0.0; 20];
        values[3] = 1.0;
        values[4] = 0.25;
        let s = state(1, values.clone(), 0.1);
        let (next, _) = scheme.step(&s, scheme.dt()).unwrap();
        assert_eq!(next.values()[4], 1.0);
        assert_eq!(next.values()[5], 0.25);
        assert_eq!(next.values()[3], 0.0);
    }

    #[test]
    fn run_lands_on_t_end() {
        let scheme = Scheme::new(linear2(), SchemeParams::default(), 0.1).unwrap();
        let s = state(2, vec![0.0; 20], 0.1);
        let unchanged = scheme.run(s.clone(), 0.0, |_, _, _| Ok(())).unwrap();
        assert_eq!(unchanged, s);
        let mut seen = 0;
        let end = scheme
            .run(s, 0.25, |_, _, _| {
                seen += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(end.t, 0.25);
        assert_eq!(seen, 3);
    }

    #[test]
    fn mass_is_conserved_for_step_data() {
        let model = linear2();
        let params = SchemeParams::with_eps(1e-3);
        let grid = GridSpec {
            x_left: -1.0,
            x_right: 3.0,
            dx: 0.02,
        };
        let data = InitialData::PerSpecies {
            species: vec![
                Profile::Step {
                    left: 0.0,
                    right: 1.0,
                    inside: 1.0,
                    outside: 0.0,
                },
                Profile::Constant { value: 0.0 },
            ],
        };
        let s0 = GridState::from_initial(&grid, &data, 2, None).unwrap();
        let scheme = Scheme::new(model, params, grid.dx).unwrap();
        let m0 = s0.mass();
        let end = scheme.run(s0, 0.5, |_, _, _| Ok(())).unwrap();
        assert!((end.mass() - m0).abs() <= 1e-12);
    }

    #[test]
    fn grid_measures() {
        let s = state(2, vec![1.0, 0.0, 0.0, -2.0, 0.0, 0.0], 0.5);
        assert_eq!(s.total_variation(), 1.0 + 2.0 + 2.0);
        assert_eq!(s.sup(), 2.0);
        assert_eq!(s.mass(), -0.5);
        assert_eq!(s.x_center(1), 0.75);
        assert!(GridSpec {
            x_left: 0.0,
            x_right: 1.0,
            dx: 0.3
        }
        .cells()
        .is_err());
    }

    #[test]
    fn snapshot_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = state(2, vec![1.0, 0.5, 0.25, 0.125], 0.5);
        s.t = 0.25;
        let path = write_snapshot(dir.path(), &s, 0.01).unwrap();
        assert_eq!(path.file_name().unwrap(), "snap_t0.25_eps0.01_dx0.5.csv");
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "x_center,u_1,u_2\n0.25,1,0.5\n0.75,0.25,0.125\n");
    }
}
