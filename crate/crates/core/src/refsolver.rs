//! First-order reference solver for the equilibrium conservation law
//! `v_t + h(v)_x = 0`, with Engquist–Osher fluxes from a monotone table of `h`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::equilibrium::{EquilibriumMap, FluxTable};
use crate::error::{ensure_finite, Error, Result};
use crate::profile::Profile;
use crate::scheme::{GridSpec, GridState};

/// Cell averages of the total concentration `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarState {
    pub dx: f64,
    pub x_left: f64,
    pub t: f64,
    pub n: usize,
    cells: Vec<f64>,
}

impl ScalarState {
    pub fn new(x_left: f64, dx: f64, cells: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !x_left.is_finite() {
            return Err(Error::Usage(format!(
                "bad grid: x_left = {x_left}, dx = {dx}"
            )));
        }
        if cells.is_empty() {
            return Err(Error::Usage("empty grid".into()));
        }
        ensure_finite(&cells, "scalar state")?;
        Ok(ScalarState {
            dx,
            x_left,
            t: 0.0,
            n: 0,
            cells,
        })
    }

    pub fn from_profile(grid: &GridSpec, v: &Profile) -> Result<Self> {
        v.validate()?;
        let n = grid.cells()?;
        let cells = (0..n)
            .map(|j| {
                let a = grid.x_left + j as f64 * grid.dx;
                v.cell_average(a, a + grid.dx)
            })
            .collect();
        Self::new(grid.x_left, grid.dx, cells)
    }

    /// Totals `Σ_i u_ij` of a relaxation state.
    pub fn from_grid(state: &GridState) -> Result<Self> {
        let cells = state.iter_cells().map(|c| c.iter().sum()).collect();
        let mut s = Self::new(state.x_left, state.dx, cells)?;
        s.t = state.t;
        s.n = state.n;
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn x_center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.dx
    }

    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() * self.dx
    }

    pub fn total_variation(&self) -> f64 {
        self.cells.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    fn range(&self) -> (f64, f64) {
        self.cells
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Increasing and decreasing parts of a tabulated flux, `h = h⁺ + h⁻`.
///
/// The table is monotone on each interval, so each interval's increment is
/// assigned wholly to one part; past the ends the linear continuation is
/// assigned by the sign of its slope.
#[derive(Debug, Clone)]
struct FluxSplit {
    table: FluxTable,
    plus: Vec<f64>,
    minus: Vec<f64>,
    max_slope: f64,
}

impl FluxSplit {
    fn new(table: FluxTable) -> Self {
        let h = table.hermite();
        let mut plus = vec![h.node_value(0)];
        let mut minus = vec![0.0];
        for k in 0..h.len() - 1 {
            let d = h.node_value(k + 1) - h.node_value(k);
            plus.push(plus[k] + d.max(0.0));
            minus.push(minus[k] + d.min(0.0));
        }
        let max_slope = max_abs_slope(&table);
        FluxSplit {
            table,
            plus,
            minus,
            max_slope,
        }
    }

    /// `(h⁺(v), h⁻(v))`.
    fn parts(&self, v: f64) -> (f64, f64) {
        let h = self.table.hermite();
        let (k, inc) = match h.locate(v) {
            Some((k, t)) => {
                // sign of the whole interval, not of the partial increment
                let d = h.node_value(k + 1) - h.node_value(k);
                let inc = h.eval_interval(k, t) - h.node_value(k);
                return if d >= 0.0 {
                    (self.plus[k] + inc, self.minus[k])
                } else {
                    (self.plus[k], self.minus[k] + inc)
                };
            }
            None if v < h.lo() => (0, self.table.value(v) - h.node_value(0)),
            None => (h.len() - 1, self.table.value(v) - h.node_value(h.len() - 1)),
        };
        // beyond the table the slope sign decides; inc has the sign of
        // slope·(v - end), so compare with the direction of travel
        let outward = if k == 0 { -1.0 } else { 1.0 };
        if inc * outward >= 0.0 {
            (self.plus[k] + inc, self.minus[k])
        } else {
            (self.plus[k], self.minus[k] + inc)
        }
    }

    fn engquist_osher(&self, left: f64, right: f64) -> f64 {
        self.parts(left).0 + self.parts(right).1
    }
}

/// `max |h′|` of the table: the derivative is quadratic on each interval, so
/// the endpoints and the vertex suffice.
fn max_abs_slope(table: &FluxTable) -> f64 {
    let h = table.hermite();
    let dx = h.node(1) - h.node(0);
    let mut best = 0.0f64;
    for k in 0..h.len() - 1 {
        let x0 = h.node(k);
        let m0 = h.derivative(x0);
        let m1 = h.derivative(x0 + dx);
        let delta = (h.node_value(k) - h.node_value(k + 1)) / dx;
        let alpha = 6.0 * delta + 3.0 * m0 + 3.0 * m1;
        let beta = -6.0 * delta - 4.0 * m0 - 2.0 * m1;
        best = best.max(m0.abs()).max(m1.abs());
        if alpha != 0.0 {
            let t = -beta / (2.0 * alpha);
            if t > 0.0 && t < 1.0 {
                best = best.max((alpha * t * t + beta * t + m0).abs());
            }
        }
    }
    best
}

/// Engquist–Osher stepper for the reduced flux of one model.
#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    eq: EquilibriumMap,
    split: FluxSplit,
    speed: f64,
}

impl ReferenceSolver {
    /// Tabulate `h` on `[lo, hi]` with `points` nodes.
    pub fn new(eq: EquilibriumMap, lo: f64, hi: f64, points: usize) -> Result<Self> {
        let table = eq.flux_table(lo, hi, points)?;
        let speed = eq.model().max_speed();
        let split = FluxSplit::new(table);
        // h′ is a convex combination of the λ_i; allow interpolation overshoot
        if split.max_slope > speed * (1.0 + 1e-3) + 1e-12 {
            return Err(Error::InvalidModel(format!(
                "tabulated |h'| = {} exceeds max |λ| = {speed}",
                split.max_slope
            )));
        }
        Ok(ReferenceSolver { eq, split, speed })
    }

    /// Table covering the values of `state` with a margin.
    pub fn for_state(eq: EquilibriumMap, state: &ScalarState, points: usize) -> Result<Self> {
        let (lo, hi) = state.range();
        let margin = 0.05 * (hi - lo).max(1.0);
        Self::new(eq, lo - margin, hi + margin, points)
    }

    pub fn equilibrium(&self) -> &EquilibriumMap {
        &self.eq
    }

    /// `max_i |λ_i|`, an upper bound for `|h′|`.
    pub fn speed_bound(&self) -> f64 {
        self.speed
    }

    /// `max |h′|` over the table, the speed the CFL check uses.
    pub fn max_slope(&self) -> f64 {
        self.split.max_slope
    }

    /// Tabulated `h(v)`.
    pub fn flux(&self, v: f64) -> f64 {
        self.split.table.value(v)
    }

    /// Largest step allowed by `Δt max |h′| ≤ cfl Δx`.
    pub fn max_dt(&self, dx: f64, cfl: f64) -> f64 {
        if self.max_slope() == 0.0 {
            f64::INFINITY
        } else {
            cfl * dx / self.max_slope()
        }
    }

    pub fn step(&self, state: &ScalarState, dt: f64) -> Result<ScalarState> {
        let courant = dt * self.max_slope() / state.dx;
        if !(dt > 0.0) || courant > 1.0 + 8.0 * f64::EPSILON {
            return Err(Error::Cfl {
                index: 0,
                courant,
                limit: 1.0,
            });
        }
        let v = &state.cells;
        let n = v.len();
        // fluxes[j] sits at the left face of cell j, ghosts repeat the edges
        let fluxes: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|f| {
                self.split
                    .engquist_osher(v[f.saturating_sub(1)], v[f.min(n - 1)])
            })
            .collect();
        let ratio = dt / state.dx;
        let cells: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| v[j] - ratio * (fluxes[j + 1] - fluxes[j]))
            .collect();
        ensure_finite(&cells, "reference step")?;
        Ok(ScalarState {
            dx: state.dx,
            x_left: state.x_left,
            t: state.t + dt,
            n: state.n + 1,
            cells,
        })
    }

    /// Step with `dt` until `t_end`, shortening the last step.
    pub fn run(&self, mut state: ScalarState, dt: f64, t_end: f64) -> Result<ScalarState> {
        if !(t_end >= state.t) {
            return Err(Error::Usage(format!(
                "t_end {t_end} before t = {}",
                state.t
            )));
        }
        while state.t < t_end {
            let remaining = t_end - state.t;
            let last = remaining <= dt * (1.0 + 1e-10);
            state = self.step(&state, if last { remaining } else { dt })?;
            if last {
                state.t = t_end;
            }
        }
        Ok(state)
    }

    /// Equilibrium field `U*(v_j)` cell by cell.
    pub fn lift(&self, state: &ScalarState) -> Result<GridState> {
        lift(&self.eq, state)
    }
}

pub fn lift(eq: &EquilibriumMap, state: &ScalarState) -> Result<GridState> {
    let r = eq.model().species();
    let lifted: Vec<Vec<f64>> = state
        .cells
        .par_iter()
        .map(|&v| eq.u_of_v(v))
        .collect::<Result<_>>()?;
    let mut g = GridState::new(state.x_left, state.dx, r, lifted.concat())?;
    g.t = state.t;
    g.n = state.n;
    Ok(g)
}

/// CSV with columns `x_center, v, u_1, …, u_r`.
pub fn write_reference_snapshot(
    path: &Path,
    state: &ScalarState,
    lifted: &GridState,
) -> Result<PathBuf> {
    if lifted.len() != state.len() {
        return Err(Error::Usage("lifted state does not match".into()));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["x_center".to_string(), "v".to_string()];
    header.extend((1..=lifted.species()).map(|i| format!("u_{i}")));
    w.write_record(&header)?;
    for j in 0..state.len() {
        let mut row = vec![state.x_center(j).to_string(), state.cells[j].to_string()];
        row.extend(lifted.cell(j).iter().map(|u| u.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::KineticsModel;
    use crate::scheme::{Scheme, SchemeParams};

    fn half_speed() -> EquilibriumMap {
        EquilibriumMap::new(KineticsModel::linear_chain(vec![1.0, 0.0], &[1.0], &[1.0]).unwrap())
    }

    fn step_data(n: usize, dx: f64) -> ScalarState {
        let cells = (0..n)
            .map(|j| if (10..20).contains(&j) { 1.0 } else { 0.0 })
            .collect();
        ScalarState::new(0.0, dx, cells).unwrap()
    }

    #[test]
    fn unit_courant_is_a_shift() {
        let solver = ReferenceSolver::new(half_speed(), -1.0, 2.0, 257).unwrap();
        assert!((solver.max_slope() - 0.5).abs() < 1e-12);
        let dx = 0.05;
        let s0 = step_data(60, dx);
        // h' = 1/2, so dt = 2 dx is unit local Courant
        assert!(solver.step(&s0, 2.01 * dx).is_err());
        let mut s = s0.clone();
        for _ in 0..10 {
            s = solver.step(&s, 2.0 * dx).unwrap();
        }
        for j in 0..60 {
            let expect = if (20..30).contains(&j) { 1.0 } else { 0.0 };
            assert!((s.cells[j] - expect).abs() < 1e-14, "cell {j}");
        }
    }

    #[test]
    fn unit_local_courant_shift_with_one_species() {
        // single species at speed 1: h(v) = v, unit Courant is exact
        let eq = EquilibriumMap::new(KineticsModel::transport_only(1.0).unwrap());
        let solver = ReferenceSolver::new(eq, -1.0, 2.0, 65).unwrap();
        let dx = 0.05;
        let s0 = step_data(60, dx);
        let s1 = solver.step(&s0, dx).unwrap();
        for j in 1..60 {
            assert!((s1.cells[j] - s0.cells[j - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn half_speed_matches_advection() {
        // local Courant number 1/2
        let solver = ReferenceSolver::new(half_speed(), -1.0, 2.0, 257).unwrap();
        let s0 = step_data(40, 0.1);
        let s1 = solver.step(&s0, 0.1).unwrap();
        for j in 0..40 {
            let expect = s0.cells[j] - 0.5 * (s0.cells[j] - s0.cells[j.saturating_sub(1)]);
            assert!((s1.cells[j] - expect).abs() < 1e-14, "cell {j}");
        }
        assert!((solver.flux(0.7) - 0.35).abs() < 1e-14);
    }

    #[test]
    fn constant_is_unchanged() {
        let solver = ReferenceSolver::new(half_speed(), 0.0, 5.0, 129).unwrap();
        let s0 = ScalarState::new(0.0, 0.1, vec![1.7; 30]).unwrap();
        let s = solver.run(s0.clone(), 0.05, 1.0).unwrap();
        assert_eq!(s.t, 1.0);
        for v in s.values() {
            assert!((v - 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn transport_only_matches_scheme() {
        let model = KineticsModel::transport_only(-0.8).unwrap();
        let solver =
            ReferenceSolver::new(EquilibriumMap::new(model.clone()), -2.0, 2.0, 65).unwrap();
        let dx = 0.02;
        let mut cells = vec![0.0; 100];
        for (j, c) in cells.iter_mut().enumerate() {
            *c = ((j as f64) * 0.3).sin();
        }
        let scheme = Scheme::new(model, SchemeParams::with_eps(1.0), dx).unwrap();
        let u0 = GridState::new(0.0, dx, 1, cells.clone()).unwrap();
        let u = scheme
            .run(u0, 40.0 * scheme.dt(), |_, _, _| Ok(()))
            .unwrap();
        let v = solver
            .run(
                ScalarState::new(0.0, dx, cells).unwrap(),
                scheme.dt(),
                40.0 * scheme.dt(),
            )
            .unwrap();
        for j in 0..100 {
            assert!((u.cell(j)[0] - v.cells[j]).abs() < 1e-13, "cell {j}");
        }
    }

    #[test]
    fn mixed_signs_keep_tv() {
        // h is a sum of a right-going and a left-going contribution
        let model =
            KineticsModel::cubic_chain(vec![1.0, -1.0, 0.3], &[1.0, 0.5], &[0.7, 1.2]).unwrap();
        let eq = EquilibriumMap::new(model);
        let mut cells = vec![0.0; 80];
        for (j, c) in cells.iter_mut().enumerate() {
            *c = if (20..45).contains(&j) { 2.0 } else { -0.5 };
        }
        let s0 = ScalarState::new(0.0, 0.05, cells).unwrap();
        let solver = ReferenceSolver::for_state(eq, &s0, 1025).unwrap();
        let dt = solver.max_dt(0.05, 0.9);
        let mut s = s0.clone();
        let mut tv = s.total_variation();
        for _ in 0..15 {
            s = solver.step(&s, dt).unwrap();
            let next = s.total_variation();
            assert!(next <= tv + 1e-12);
            tv = next;
        }
        assert!((s.mass() - s0.mass()).abs() < 1e-12);
    }

    #[test]
    fn split_sums_to_flux() {
        let model = KineticsModel::cubic_chain(vec![1.0, -1.0], &[1.0], &[2.0]).unwrap();
        let solver = ReferenceSolver::new(EquilibriumMap::new(model), -3.0, 3.0, 513).unwrap();
        for k in 0..50 {
            let v = -4.0 + 0.16 * k as f64;
            let (p, m) = solver.split.parts(v);
            assert!((p + m - solver.flux(v)).abs() < 1e-12, "v = {v}");
            assert!(solver.split.engquist_osher(v, v) - solver.flux(v) < 1e-12);
        }
    }

    #[test]
    fn lift_and_snapshot() {
        let eq = half_speed();
        let s = ScalarState::new(0.0, 0.5, vec![3.0, 0.0]).unwrap();
        let g = lift(&eq, &s).unwrap();
        assert_eq!(g.cell(0), &[1.5, 1.5]);
        assert_eq!(g.cell(1), &[0.0, 0.0]);
        let dir = tempfile::tempdir().unwrap();
        let p = write_reference_snapshot(&dir.path().join("ref.csv"), &s, &g).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "x_center,v,u_1,u_2\n0.25,3,1.5,1.5\n0.75,0,0,0\n");
    }
}
