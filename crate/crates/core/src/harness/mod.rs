//! Configuration and experiment orchestration.

mod config;
mod runner;

pub use config::{
    AuditSpec, DomainSpec, ExperimentConfig, ModelSpec, OutputSpec, PairMode, ReactionTables,
    RefineSpec, SolverSpec, SweepSpec, TableSpec, TimeSpec, FORMAT_TAG,
};
pub use runner::{
    audit_matrices, coarse_distance, refine_grid, run_all, run_single, sweep_epsilon, Prepared,
    RefineOutcome, RefineRow, RunOutcome, SweepOutcome, SweepRow,
};
