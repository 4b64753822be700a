//! Experiment configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::BaseEntropy;
use crate::error::{Error, Result};
use crate::kinetics::{KineticsModel, MonotoneTable, SeparableReaction, Shape};
use crate::profile::InitialData;
use crate::scheme::{GridSpec, SchemeParams};

/// Value of the mandatory `format` key.
pub const FORMAT_TAG: &str = "relaxchain-config/1";

fn default_seed() -> u64 {
    20_240_601
}

fn default_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: ModelSpec,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    pub initial: InitialData,
    #[serde(default)]
    pub audits: AuditSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub refine: RefineSpec,
}

/// Piecewise-linear shape given by knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Shapes `φ, ψ` of `f_i = -a_i φ(u_i) + b_i ψ(u_{i+1})`; a missing shape is
/// the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionTables {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<TableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<TableSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `f_i = -a_i u_i + b_i u_{i+1}`.
    Linear {
        velocities: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `f_i = -a_i (u_i + u_i³) + b_i u_{i+1}`.
    Cubic {
        velocities: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    CustomTable {
        velocities: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        tables: Vec<ReactionTables>,
    },
    /// One species, no reactions.
    TransportOnly { velocity: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<KineticsModel> {
        let model = match self {
            ModelSpec::Linear { velocities, a, b } => {
                KineticsModel::linear_chain(velocities.clone(), a, b)
            }
            ModelSpec::Cubic { velocities, a, b } => {
                KineticsModel::cubic_chain(velocities.clone(), a, b)
            }
            ModelSpec::CustomTable {
                velocities,
                a,
                b,
                tables,
            } => {
                if a.len() != tables.len() || b.len() != tables.len() {
                    return Err(Error::Config(format!(
                        "custom-table needs one table entry per reaction ({} coefficients, {} tables)",
                        a.len(),
                        tables.len()
                    )));
                }
                let shape = |t: &Option<TableSpec>| -> Result<Shape> {
                    Ok(match t {
                        None => Shape::Linear,
                        Some(t) => Shape::Table(MonotoneTable::new(t.xs.clone(), t.ys.clone())?),
                    })
                };
                let reactions = tables
                    .iter()
                    .zip(a.iter().zip(b))
                    .map(|(t, (&ai, &bi))| {
                        SeparableReaction::new(ai, bi, shape(&t.first)?, shape(&t.second)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                KineticsModel::separable(velocities.clone(), reactions)
            }
            ModelSpec::TransportOnly { velocity } => KineticsModel::transport_only(*velocity),
        };
        model.map_err(|e| Error::Config(format!("model: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub dx: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            x_left: -2.0,
            x_right: 4.0,
            dx: 1.0 / 200.0,
        }
    }
}

impl DomainSpec {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_left: self.x_left,
            x_right: self.x_right,
            dx: self.dx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec {
            t_end: 1.0,
            cfl: 0.9,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_fallback: bool,
    pub newton_max_steps: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let p = SchemeParams::default();
        SolverSpec {
            fp_tol: p.fp_tol,
            fp_max_iter: p.fp_max_iter,
            newton_fallback: p.newton_fallback,
            newton_max_steps: p.newton_max_steps,
        }
    }
}

/// How the second run of the `L¹` contraction audit is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    None,
    /// The data shifted by one cell, so `d_n = Δx TV_n`.
    Shift,
    /// The data plus a seeded random piecewise-constant perturbation.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSpec {
    pub pair: PairMode,
    pub entropy: bool,
    pub base_entropy: BaseEntropy,
    /// Lattice points per axis for the nonlinear `λ` minimum.
    pub lambda_lattice: usize,
    pub matrix_samples: usize,
    pub matrix_taus: Vec<f64>,
    /// Half-width of the state box the matrix samples are drawn from.
    pub matrix_radius: f64,
    pub mass_tol: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec {
            pair: PairMode::Shift,
            entropy: true,
            base_entropy: BaseEntropy::Quadratic,
            lambda_lattice: 64,
            matrix_samples: 100,
            matrix_taus: vec![1e-2, 1.0, 1e4],
            matrix_radius: 2.0,
            mass_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Snapshot every this many steps; 0 keeps the initial and final layers.
    pub snapshot_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Allow non-equilibrium data; the initial layer is flagged in the output.
    pub layer_mode: bool,
    /// Nodes of the reference flux table.
    pub table_points: usize,
    /// Errors below `floor_factor Δx TV_0` count as resolved.
    pub floor_factor: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            layer_mode: false,
            table_points: crate::equilibrium::DEFAULT_TABLE_POINTS,
            floor_factor: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSpec {
    pub levels: usize,
    /// Relaxation parameter of the study; the first `eps` entry if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub min_ratio: f64,
}

impl Default for RefineSpec {
    fn default() -> Self {
        RefineSpec {
            levels: 3,
            eps: None,
            min_ratio: 1.5,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn scheme_params(&self, eps: f64) -> SchemeParams {
        SchemeParams {
            eps,
            cfl: self.time.cfl,
            dt: self.time.dt,
            fp_tol: self.solver.fp_tol,
            fp_max_iter: self.solver.fp_max_iter,
            newton_fallback: self.solver.newton_fallback,
            newton_max_steps: self.solver.newton_max_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(Error::Config(format!(
                "unsupported format {:?}, expected {FORMAT_TAG:?}",
                self.format
            )));
        }
        let model = self.model.build()?;
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!(
                "eps list must be non-empty and positive: {:?}",
                self.eps
            )));
        }
        for &eps in &self.eps {
            self.scheme_params(eps).validate()?;
        }
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.time.t_end
            )));
        }
        self.domain.grid().cells()?;
        self.initial
            .validate(model.species())
            .map_err(|e| Error::Config(format!("initial data: {e}")))?;
        self.check_domain(&model)?;
        if self.refine.levels < 2 {
            return Err(Error::Config("refine.levels must be at least 2".into()));
        }
        if self
            .audits
            .matrix_taus
            .iter()
            .any(|t| !(*t >= 0.0 && t.is_finite()))
        {
            return Err(Error::Config("matrix_taus must be non-negative".into()));
        }
        Ok(())
    }

    /// Waves must not reach the boundary: `max|λ| t_end` below the distance
    /// from the initial support to either end.
    pub fn check_domain(&self, model: &KineticsModel) -> Result<()> {
        let Some((a, b)) = self.initial.support() else {
            return Ok(());
        };
        let gap = (a - self.domain.x_left).min(self.domain.x_right - b);
        let reach = model.max_speed() * self.time.t_end;
        if reach >= gap {
            return Err(Error::Config(format!(
                "domain too small: waves travel {reach} but the initial support [{a}, {b}] is only {gap} from the boundary"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const STEP: &str = r#"
format = "relaxchain-config/1"
eps = [0.1, 0.01]

[model]
family = "linear"
velocities = [1.0, 0.0]
a = [1.0]
b = [1.0]

[time]
t_end = 0.5
cfl = 0.9

[initial]
mode = "equilibrium"
total = { kind = "step", left = 0.0, right = 1.0, inside = 1.0 }
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(STEP).unwrap();
        assert_eq!(cfg.seed, default_seed());
        assert_eq!(cfg.domain, DomainSpec::default());
        assert_eq!(cfg.audits.pair, PairMode::Shift);
        assert_eq!(cfg.scheme_params(0.1).eps, 0.1);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let wrong_tag = STEP.replace("relaxchain-config/1", "relaxchain-config/0");
        assert!(matches!(
            ExperimentConfig::from_toml(&wrong_tag),
            Err(Error::Config(_))
        ));
        let bad_eps = STEP.replace("eps = [0.1, 0.01]", "eps = [0.1, 0.0]");
        assert!(ExperimentConfig::from_toml(&bad_eps).is_err());
        let unknown = format!("{STEP}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let long = STEP.replace("t_end = 0.5", "t_end = 2.5");
        let err = ExperimentConfig::from_toml(&long).unwrap_err();
        assert!(err.to_string().contains("domain too small"), "{err}");
    }

    #[test]
    fn custom_table_family() {
        let text = STEP.replace(
            "family = \"linear\"",
            "family = \"custom-table\"\ntables = [{ first = { xs = [-1.0, 0.0, 1.0], ys = [-2.0, 0.0, 1.0] } }]",
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let model = cfg.model.build().unwrap();
        let g = model.eval_g(&[0.5, 0.0]).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15);
        let g = model.eval_g(&[-0.5, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
    }
}
