use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relaxchain::diagnostics::AuditReport;
use relaxchain::harness::{audit_matrices, refine_grid, run_all, sweep_epsilon, ExperimentConfig};

/// Semi-implicit relaxation experiments with stability audits.
#[derive(Parser, Debug)]
#[command(name = "relaxchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every configured ε with all enabled audits.
    Run(Common),
    /// Compare runs over the ε list with the equilibrium reference solution.
    SweepEps(Common),
    /// Self-convergence under repeated halving of Δx.
    Refine(Common),
    /// Matrix and star-norm audits over random state pairs.
    Audit(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
        }
        let out = cfg.output.dir.clone();
        Ok((cfg, out))
    }
}

fn print_reports(label: &str, reports: &[AuditReport]) -> bool {
    let mut ok = true;
    for r in reports {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let note = r
            .note
            .as_deref()
            .map(|n| format!(" ({n})"))
            .unwrap_or_default();
        println!("{label} {:<16} {verdict}{note}", r.audit);
        ok &= r.pass;
    }
    ok
}

fn execute(command: &Command) -> Result<bool> {
    let (common, which) = match command {
        Command::Run(c) => (c, "run"),
        Command::SweepEps(c) => (c, "sweep-eps"),
        Command::Refine(c) => (c, "refine"),
        Command::Audit(c) => (c, "audit"),
    };
    let (cfg, out) = common.load()?;
    let out: &Path = &out;
    let ok = match which {
        "run" => {
            let runs = run_all(&cfg, out)?;
            let mut ok = true;
            for run in &runs {
                ok &= print_reports(&format!("eps={}", run.eps), &run.audits);
            }
            ok
        }
        "sweep-eps" => {
            let sweep = sweep_epsilon(&cfg, out)?;
            println!("{:>12} {:>14} {:>14}", "eps", "l1_error", "floor");
            for row in &sweep.rows {
                println!(
                    "{:>12e} {:>14.6e} {:>14.6e}",
                    row.eps, row.l1_error, row.floor
                );
            }
            let mut ok = true;
            for run in &sweep.runs {
                ok &= print_reports(&format!("eps={}", run.eps), &run.audits);
            }
            ok & print_reports("sweep", std::slice::from_ref(&sweep.report))
        }
        "refine" => {
            let refine = refine_grid(&cfg, out)?;
            println!(
                "{:>12} {:>12} {:>14} {:>8}",
                "dx_coarse", "dx_fine", "l1_difference", "ratio"
            );
            for row in &refine.rows {
                let ratio = row
                    .ratio
                    .map(|r| format!("{r:.3}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "{:>12} {:>12} {:>14.6e} {:>8}",
                    row.dx_coarse, row.dx_fine, row.l1_difference, ratio
                );
            }
            print_reports("refine", std::slice::from_ref(&refine.report))
        }
        _ => print_reports("audit", &audit_matrices(&cfg, out)?),
    };
    println!("outputs in {}", out.display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
