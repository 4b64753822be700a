//! Experiment drivers: single runs, ε sweeps, grid refinement and matrix
//! audits. Every driver writes a config echo, a summary and its audit
//! verdicts next to the data it produces.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, PairMode, FORMAT_TAG};
use crate::diagnostics::{
    cell_solve_audit, entropy_audit, l1_contraction_audit, mass_audit, matrix_audit, sample_pairs,
    source_decay_audit, star_norm_audit, sup_audit, time_lipschitz_audit, tv_audit,
    write_audits_json, write_diagnostics_csv, AuditReport, DiagnosticsRecord,
};
use crate::entropy::{write_entropy_report, EntropyPack, EntropyRow, CACHE_POINTS};
use crate::equilibrium::EquilibriumMap;
use crate::error::{Error, Result};
use crate::kinetics::{lambda_bound, KineticsModel, LambdaBound, StateBox};
use crate::profile::{InitialData, Profile};
use crate::refsolver::{lift, write_reference_snapshot, ReferenceSolver, ScalarState};
use crate::scheme::{write_snapshot, GridState, Scheme, StepStats};

/// Model, equilibrium maps and projected data shared by the drivers.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: KineticsModel,
    pub eq: EquilibriumMap,
    pub initial: GridState,
    pub tv0: f64,
    /// 1-norm of the smaller far-field state.
    pub tail: f64,
    /// Bound on the 1-norm of every cell for all time.
    pub radius: f64,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Self::with_dx(cfg, cfg.domain.dx)
    }

    pub fn with_dx(cfg: &ExperimentConfig, dx: f64) -> Result<Self> {
        let model = cfg.model.build()?;
        let eq = EquilibriumMap::new(model.clone());
        let mut grid = cfg.domain.grid();
        grid.dx = dx;
        let initial = GridState::from_initial(&grid, &cfg.initial, model.species(), Some(&eq))?;
        let tv0 = initial.total_variation();
        let (l, r) = initial.tail_norms();
        let tail = l.min(r);
        let radius = (tv0 + tail).max(initial.sup());
        Ok(Prepared {
            model,
            eq,
            initial,
            tv0,
            tail,
            radius,
        })
    }

    pub fn state_box(&self) -> StateBox {
        StateBox::symmetric(self.model.species(), self.radius.max(1e-3))
    }
}

/// Everything one relaxation run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub eps: f64,
    pub dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub stats: Vec<StepStats>,
    pub entropy: Vec<EntropyRow>,
    pub audits: Vec<AuditReport>,
    pub lambda: LambdaBound,
    pub initial: GridState,
    pub final_state: GridState,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.audits.iter().all(|a| a.pass)
    }

    pub fn audit(&self, name: &str) -> Option<&AuditReport> {
        self.audits.iter().find(|a| a.audit == name)
    }
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    format: &'static str,
    seed: u64,
    eps: f64,
    dx: f64,
    dt: f64,
    tau: f64,
    steps: usize,
    t_end: f64,
    lambda: Option<f64>,
    lambda_note: String,
    pass: bool,
    failed: Vec<&'a str>,
}

fn lambda_note(l: &LambdaBound) -> String {
    match l {
        LambdaBound::Available {
            method, sampled, ..
        } => format!(
            "{method:?}{}",
            if *sampled { " (lattice minimum)" } else { "" }
        )
        .to_lowercase(),
        LambdaBound::Unavailable { reason } => format!("unavailable: {reason}"),
    }
}

fn write_config_echo(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Second run of the contraction audit.
fn pair_state(cfg: &ExperimentConfig, initial: &GridState, eps: f64) -> Result<Option<GridState>> {
    let r = initial.species();
    let mut cells = initial.values().to_vec();
    match cfg.audits.pair {
        PairMode::None => return Ok(None),
        PairMode::Shift => {
            let n = cells.len();
            cells.copy_within(..n - r, r);
        }
        PairMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ eps.to_bits());
            let (a, b) = cfg
                .initial
                .support()
                .unwrap_or((initial.x_center(0), initial.x_right()));
            let pieces = 8;
            let width = (b - a) / pieces as f64;
            let bumps: Vec<Vec<f64>> = (0..pieces)
                .map(|_| (0..r).map(|_| rng.random_range(-0.5..0.5)).collect())
                .collect();
            for j in 0..initial.len() {
                let x = initial.x_center(j);
                if x >= a && x < b {
                    let k = (((x - a) / width) as usize).min(pieces - 1);
                    for i in 0..r {
                        cells[j * r + i] += bumps[k][i];
                    }
                }
            }
        }
    }
    let mut s = GridState::new(initial.x_left, initial.dx, r, cells)?;
    s.t = initial.t;
    Ok(Some(s))
}

/// Spatially uniform data: the source then decays without transport.
fn is_uniform(data: &InitialData) -> bool {
    match data {
        InitialData::PerSpecies { species } => species
            .iter()
            .all(|p| matches!(p, Profile::Constant { .. })),
        InitialData::Equilibrium { total } => matches!(total, Profile::Constant { .. }),
    }
}

/// Run one relaxation parameter and write its artifacts into `dir`.
pub fn run_single(cfg: &ExperimentConfig, eps: f64, dir: &Path) -> Result<RunOutcome> {
    run_prepared(
        cfg,
        &Prepared::new(cfg)?,
        cfg.scheme_params(eps).dt,
        eps,
        dir,
    )
}

fn run_prepared(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    fixed_dt: Option<f64>,
    eps: f64,
    dir: &Path,
) -> Result<RunOutcome> {
    let result = run_inner(cfg, prep, fixed_dt, eps, dir);
    if let Err(e) = &result {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("error.txt"), format!("{e}\n"))?;
    }
    result
}

fn run_inner(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    fixed_dt: Option<f64>,
    eps: f64,
    dir: &Path,
) -> Result<RunOutcome> {
    write_config_echo(dir, cfg)?;
    let model = &prep.model;
    let mut params = cfg.scheme_params(eps);
    params.dt = fixed_dt;
    let scheme = Scheme::new(model.clone(), params, prep.initial.dx)?;
    let lambda = lambda_bound(model, &prep.state_box(), cfg.audits.lambda_lattice);
    let pack = if cfg.audits.entropy && model.species() >= 1 {
        let radius = 1.1 * prep.radius + 0.1;
        Some(EntropyPack::build_cached(
            &prep.eq,
            cfg.audits.base_entropy,
            radius,
            CACHE_POINTS,
        )?)
    } else {
        None
    };

    let t_end = cfg.time.t_end;
    let every = cfg.output.snapshot_every;
    let mut state = prep.initial.clone();
    let mut pair = pair_state(cfg, &state, eps)?;
    let mut first = DiagnosticsRecord::of_state(&state, model);
    if let Some(p) = &pair {
        first.l1_pair_distance = Some(state.l1_distance(p)?);
    }
    let mut records = vec![first];
    let mut stats = Vec::new();
    let mut rows = Vec::new();
    write_snapshot(dir, &state, eps)?;
    while state.t < t_end {
        let remaining = t_end - state.t;
        let last = remaining <= scheme.dt() * (1.0 + 1e-10);
        let dt = if last { remaining } else { scheme.dt() };
        let (mut next, st) = scheme.step(&state, dt)?;
        if last {
            next.t = t_end;
        }
        let mut rec = DiagnosticsRecord::after_step(&state, &next, model, &st)?;
        if let Some(p) = pair.as_mut() {
            *p = scheme.step(p, dt)?.0;
            rec.l1_pair_distance = Some(next.l1_distance(p)?);
        }
        if let Some(pack) = &pack {
            let step = pack.cell_entropy_residual(&state, &next, eps)?;
            let row = step.summary();
            rec.entropy_max_residual = Some(row.max_residual);
            rows.push(row);
        }
        if every > 0 && next.n % every == 0 && !last {
            write_snapshot(dir, &next, eps)?;
        }
        records.push(rec);
        stats.push(st);
        state = next;
    }
    if state.n > 0 {
        write_snapshot(dir, &state, eps)?;
    }

    let tau = scheme.dt() / eps;
    let series = |f: fn(&DiagnosticsRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let mut audits = vec![
        cell_solve_audit(&stats, params.fp_tol),
        mass_audit(&series(|r| r.mass), cfg.audits.mass_tol),
        tv_audit(&series(|r| r.tv)),
        sup_audit(&series(|r| r.sup), prep.tv0, prep.tail),
    ];
    if pair.is_some() {
        let d: Vec<f64> = records.iter().filter_map(|r| r.l1_pair_distance).collect();
        audits.push(l1_contraction_audit(&d));
    }
    let g = series(|r| r.g_norm);
    let exact = match (
        is_uniform(&cfg.initial) && model.is_linear() && model.species() == 2,
        lambda.value(),
    ) {
        (true, Some(lam)) => Some(
            stats
                .iter()
                .map(|s| 1.0 / (1.0 + lam * s.tau))
                .collect::<Vec<f64>>(),
        ),
        _ => None,
    };
    audits.push(source_decay_audit(&g, &lambda, tau, eps, exact.as_deref()));
    let l: Vec<f64> = records.iter().filter_map(|r| r.step_change).collect();
    audits.push(time_lipschitz_audit(&l, g[0], &lambda, tau, scheme.dt()));
    if let Some(pack) = &pack {
        audits.push(entropy_audit(
            &rows,
            pack.tolerance_budget(params.fp_tol, tau),
        ));
        write_entropy_report(&dir.join("entropy.csv"), &rows)?;
    }

    write_diagnostics_csv(&dir.join("diagnostics.csv"), &records)?;
    write_audits_json(&dir.join("audits.json"), &audits)?;
    let failed: Vec<&str> = audits
        .iter()
        .filter(|a| !a.pass)
        .map(|a| a.audit.as_str())
        .collect();
    write_json(
        &dir.join("summary.json"),
        &RunSummary {
            format: FORMAT_TAG,
            seed: cfg.seed,
            eps,
            dx: prep.initial.dx,
            dt: scheme.dt(),
            tau,
            steps: state.n,
            t_end,
            lambda: lambda.value(),
            lambda_note: lambda_note(&lambda),
            pass: failed.is_empty(),
            failed: failed.clone(),
        },
    )?;
    Ok(RunOutcome {
        eps,
        dir: dir.to_path_buf(),
        records,
        stats,
        entropy: rows,
        audits,
        lambda,
        initial: prep.initial.clone(),
        final_state: state,
    })
}

fn eps_dir(out: &Path, eps: f64) -> PathBuf {
    out.join(format!("eps_{eps}"))
}

/// `run_single` for every configured ε, as independent jobs.
pub fn run_all(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunOutcome>> {
    let prep = Prepared::new(cfg)?;
    write_config_echo(out, cfg)?;
    cfg.eps
        .par_iter()
        .map(|&eps| run_prepared(cfg, &prep, cfg.time.dt, eps, &eps_dir(out, eps)))
        .collect()
}

/// One line of the ε sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub l1_error: f64,
    /// `Δx TV_0`.
    pub floor: f64,
    pub resolved: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub report: AuditReport,
    pub runs: Vec<RunOutcome>,
    pub reference: ScalarState,
}

/// Distance of each relaxation run to the lifted equilibrium reference.
///
/// Passes when the error does not grow as ε decreases, except between
/// entries that are both below `floor_factor Δx TV_0`.
pub fn sweep_epsilon(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutcome> {
    let prep = Prepared::new(cfg)?;
    if !cfg.initial.is_equilibrium() && !cfg.sweep.layer_mode {
        return Err(Error::Config(
            "sweep-eps needs equilibrium data; set sweep.layer_mode = true to allow an initial layer".into(),
        ));
    }
    write_config_echo(out, cfg)?;
    let v0 = ScalarState::from_grid(&prep.initial)?;
    let solver = ReferenceSolver::for_state(prep.eq.clone(), &v0, cfg.sweep.table_points)?;
    // same space-time grid as the relaxation runs, so both carry the same
    // numerical viscosity in the limit
    let scheme_dt = Scheme::new(
        prep.model.clone(),
        cfg.scheme_params(cfg.eps[0]),
        prep.initial.dx,
    )?
    .dt();
    let dt = scheme_dt.min(solver.max_dt(prep.initial.dx, 1.0));
    let reference = solver.run(v0, dt, cfg.time.t_end)?;
    let lifted = lift(&prep.eq, &reference)?;
    write_reference_snapshot(&out.join("reference.csv"), &reference, &lifted)?;

    let mut eps = cfg.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let runs: Vec<RunOutcome> = eps
        .par_iter()
        .map(|&e| run_prepared(cfg, &prep, cfg.time.dt, e, &eps_dir(out, e)))
        .collect::<Result<_>>()?;
    let floor = prep.initial.dx * prep.tv0;
    let limit = cfg.sweep.floor_factor * floor;
    let rows: Vec<SweepRow> = runs
        .iter()
        .map(|run| {
            let e = run.final_state.l1_distance(&lifted)?;
            Ok(SweepRow {
                eps: run.eps,
                l1_error: e,
                floor,
                resolved: e < limit,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = AuditReport {
        audit: "relaxation_limit".into(),
        pass: true,
        worst_step: None,
        worst_cell: None,
        fitted_constants: Default::default(),
        tolerances: Default::default(),
        note: (!cfg.initial.is_equilibrium())
            .then(|| "layer mode: initial data off equilibrium".to_string()),
    };
    let mut worst = f64::NEG_INFINITY;
    for (k, w) in rows.windows(2).enumerate() {
        let growth = w[1].l1_error - w[0].l1_error;
        let exempt = w[0].resolved && w[1].resolved;
        if !exempt && growth > 1e-12 {
            report.pass = false;
            report.worst_step = Some(k + 1);
        }
        worst = worst.max(growth);
    }
    if let Some(last) = rows.last() {
        report.fitted_constants.insert(
            "final_error_over_floor".into(),
            last.l1_error / floor.max(f64::MIN_POSITIVE),
        );
    }
    report
        .fitted_constants
        .insert("max_growth".into(), worst.max(0.0));
    report.tolerances.insert("floor".into(), limit);
    report.tolerances.insert("growth".into(), 1e-12);

    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_audits_json(&out.join("audits.json"), std::slice::from_ref(&report))?;
    Ok(SweepOutcome {
        rows,
        report,
        runs,
        reference,
    })
}

/// One line of the refinement table: the difference between levels `k`
/// and `k + 1`, measured on the coarser grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineRow {
    pub dx_coarse: f64,
    pub dx_fine: f64,
    pub l1_difference: f64,
    /// Previous difference over this one.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub rows: Vec<RefineRow>,
    pub report: AuditReport,
    pub runs: Vec<RunOutcome>,
}

/// `Σ_j |U_j - avg(V_{2j}, V_{2j+1})| Δx` with `V` on the halved grid.
pub fn coarse_distance(coarse: &GridState, fine: &GridState) -> Result<f64> {
    let r = coarse.species();
    if fine.len() != 2 * coarse.len() || fine.species() != r {
        return Err(Error::Usage(
            "fine grid is not a halving of the coarse one".into(),
        ));
    }
    let mut s = 0.0;
    for j in 0..coarse.len() {
        let (a, b) = (fine.cell(2 * j), fine.cell(2 * j + 1));
        for i in 0..r {
            s += (coarse.cell(j)[i] - 0.5 * (a[i] + b[i])).abs();
        }
    }
    Ok(s * coarse.dx)
}

/// Self-convergence at fixed ε over `levels` halvings of `Δx`.
pub fn refine_grid(cfg: &ExperimentConfig, out: &Path) -> Result<RefineOutcome> {
    let eps = cfg.refine.eps.unwrap_or(cfg.eps[0]);
    write_config_echo(out, cfg)?;
    let levels: Vec<usize> = (0..cfg.refine.levels).collect();
    let runs: Vec<RunOutcome> = levels
        .par_iter()
        .map(|&k| {
            let scale = 0.5f64.powi(k as i32);
            let dx = cfg.domain.dx * scale;
            let prep = Prepared::with_dx(cfg, dx)?;
            let dt = cfg.time.dt.map(|d| d * scale);
            run_prepared(cfg, &prep, dt, eps, &out.join(format!("dx_{dx}")))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<RefineRow> = Vec::new();
    for w in runs.windows(2) {
        let d = coarse_distance(&w[0].final_state, &w[1].final_state)?;
        let ratio = rows.last().map(|p| p.l1_difference / d);
        rows.push(RefineRow {
            dx_coarse: w[0].final_state.dx,
            dx_fine: w[1].final_state.dx,
            l1_difference: d,
            ratio,
        });
    }
    let mut report = AuditReport {
        audit: "grid_refinement".into(),
        pass: true,
        worst_step: None,
        worst_cell: None,
        fitted_constants: Default::default(),
        tolerances: Default::default(),
        note: None,
    };
    let mut min_ratio = f64::INFINITY;
    for (k, w) in rows.windows(2).enumerate() {
        // identical levels (constant data) have nothing left to shrink
        if w[0].l1_difference <= 1e-14 {
            continue;
        }
        let ratio = w[0].l1_difference / w[1].l1_difference;
        if ratio < min_ratio {
            min_ratio = ratio;
            report.worst_step = Some(k + 1);
        }
    }
    report.pass = !(min_ratio < cfg.refine.min_ratio);
    report.fitted_constants.insert(
        "min_ratio".into(),
        if min_ratio.is_finite() {
            min_ratio
        } else {
            0.0
        },
    );
    report.fitted_constants.insert("eps".into(), eps);
    report
        .tolerances
        .insert("min_ratio".into(), cfg.refine.min_ratio);
    if min_ratio.is_infinite() {
        report.note = Some("all differences vanish".into());
    }
    let mut w = csv::Writer::from_path(out.join("refine.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_audits_json(&out.join("audits.json"), std::slice::from_ref(&report))?;
    Ok(RefineOutcome { rows, report, runs })
}

/// Matrix and star-norm audits over seeded random state pairs.
pub fn audit_matrices(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<AuditReport>> {
    write_config_echo(out, cfg)?;
    let model = cfg.model.build()?;
    let region = StateBox::symmetric(model.species(), cfg.audits.matrix_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs = sample_pairs(&mut rng, &region, cfg.audits.matrix_samples);
    let lambda = lambda_bound(&model, &region, cfg.audits.lambda_lattice);
    let reports = vec![
        matrix_audit(&model, &pairs, &cfg.audits.matrix_taus)?,
        star_norm_audit(&model, &pairs, &cfg.audits.matrix_taus, &lambda)?,
    ];
    write_audits_json(&out.join("audits.json"), &reports)?;
    write_json(
        &out.join("summary.json"),
        &serde_json::json!({
            "format": FORMAT_TAG,
            "seed": cfg.seed,
            "samples": pairs.len(),
            "lambda": lambda.value(),
            "lambda_note": lambda_note(&lambda),
            "pass": reports.iter().all(|r| r.pass),
        }),
    )?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    const BASE: &str = r#"
format = "relaxchain-config/1"
eps = [0.1]

[model]
family = "linear"
velocities = [1.0, 0.0]
a = [1.0]
b = [1.0]

[domain]
x_left = -1.0
x_right = 2.0
dx = 0.02

[time]
t_end = 0.3
cfl = 0.9
"#;

    #[test]
    fn zero_data_passes_everything() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"equilibrium\"\ntotal = {{ kind = \"constant\", value = 0.0 }}\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        let run = run_single(&c, 0.1, dir.path()).unwrap();
        assert!(run.pass(), "{:?}", run.audits);
        assert!(run.final_state.values().iter().all(|&v| v == 0.0));
        for name in [
            "config.toml",
            "diagnostics.csv",
            "audits.json",
            "summary.json",
            "entropy.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let snaps = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .starts_with("snap_")
            })
            .count();
        assert_eq!(snaps, 2);
    }

    #[test]
    fn step_run_is_reproducible() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"per-species\"\nspecies = [{{ kind = \"step\", left = 0.0, right = 0.5, inside = 1.0 }}, {{ kind = \"constant\", value = 0.0 }}]\n"
        ));
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_single(&c, 0.1, a.path()).unwrap();
        run_single(&c, 0.1, b.path()).unwrap();
        assert!(ra.pass(), "{:?}", ra.audits);
        for name in [
            "diagnostics.csv",
            "audits.json",
            "entropy.csv",
            "summary.json",
        ] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        let decay = ra.audit("source_decay").unwrap();
        assert!(decay.fitted("C").unwrap().is_finite());
    }

    #[test]
    fn uniform_data_uses_exact_ratio() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"per-species\"\nspecies = [{{ kind = \"constant\", value = 1.0 }}, {{ kind = \"constant\", value = 0.0 }}]\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        let run = run_single(&c, 0.1, dir.path()).unwrap();
        let decay = run.audit("source_decay").unwrap();
        assert!(decay.pass);
        assert!(decay.fitted("ratio_deviation").unwrap() <= 1e-12);
    }

    #[test]
    fn sweep_requires_equilibrium_data() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"per-species\"\nspecies = [{{ kind = \"step\", left = 0.0, right = 0.5, inside = 1.0 }}, {{ kind = \"constant\", value = 0.0 }}]\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            sweep_epsilon(&c, dir.path()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn constant_refinement_has_zero_differences() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"equilibrium\"\ntotal = {{ kind = \"constant\", value = 0.6 }}\n[audits]\nentropy = false\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        let r = refine_grid(&c, dir.path()).unwrap();
        assert!(r.report.pass);
        assert!(r.rows.iter().all(|row| row.l1_difference < 1e-13));
    }

    #[test]
    fn matrix_driver_writes_reports() {
        let c = cfg(&format!(
            "{BASE}\n[initial]\nmode = \"equilibrium\"\ntotal = {{ kind = \"constant\", value = 0.0 }}\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        let reports = audit_matrices(&c, dir.path()).unwrap();
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        let text = fs::read_to_string(dir.path().join("audits.json")).unwrap();
        assert!(text.contains("\"matrix\"") && text.contains("\"star_norm\""));
    }
}
