//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or I/O error (and dimension mismatches in `verify`),
//! 2 infeasibility found by presolve or a solution that violates the original problem.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::PresolveError;
use crate::io::{self, stats, GeneratorSpec};
use crate::kernels::Kernel;
use crate::postsolve::{evaluate, postsolve, replay, ReductionJournal};
use crate::runtime::{run_presolve, PresolveConfig};
use crate::sync::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "blockpresolve", version, about = "Parallel presolve for block-structured linear programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Presolve a BLOCKLP file.
    Presolve(PresolveArgs),
    /// Generate a synthetic instance from a TOML spec.
    Generate(GenerateArgs),
    /// Lift a presolved solution and check it against the original problem.
    Verify(VerifyArgs),
    /// Print a size summary of a BLOCKLP file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct PresolveArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub rounds: u32,
    #[arg(long, value_parser = positive)]
    pub tol_tiny: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub tol_feas: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub tol_parallel: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub tol_improve: Option<f64>,
    /// Kernel to skip: cleanup, singleton, bounds or parallel.
    #[arg(long, value_parser = kernel)]
    pub disable: Vec<Kernel>,
    /// Presolved problem.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reduction journal.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Statistics document.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Seed for row hashing.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Planted-structure manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Original problem.
    pub original: PathBuf,
    #[arg(long)]
    pub journal: PathBuf,
    /// Presolved solution, one value per line.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, value_parser = positive)]
    pub tol_feas: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn kernel(s: &str) -> Result<Kernel, String> {
    Kernel::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Kernel::ALL.iter().map(|k| k.name()).collect();
        format!("unknown kernel {s:?} (expected one of {})", names.join(", "))
    })
}

/// A failed command: exit code plus message for stderr.
struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Reads a solution file: one number per line, blank lines and `#` comments ignored.
pub fn read_solution(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut x = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| format!("{}: line {}: invalid number {t:?}", path.display(), i + 1))?;
        x.push(v);
    }
    Ok(x)
}

pub fn write_solution(path: &Path, x: &[f64]) -> std::io::Result<()> {
    let text: String = x.iter().map(|v| io::fmt_f64(*v) + "\n").collect();
    std::fs::write(path, text)
}

fn presolve_cmd(a: &PresolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let lp = io::read(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let defaults = Tolerances::default();
    let mut cfg = PresolveConfig {
        workers: a.workers as usize,
        max_rounds: a.rounds as usize,
        tolerances: Tolerances {
            tiny: a.tol_tiny.unwrap_or(defaults.tiny),
            feas: a.tol_feas.unwrap_or(defaults.feas),
            parallel: a.tol_parallel.unwrap_or(defaults.parallel),
            improve: a.tol_improve.unwrap_or(defaults.improve),
        },
        seed: a.seed,
        ..Default::default()
    };
    for &k in &a.disable {
        cfg.kernels.set(k, false);
    }
    let start = Instant::now();
    let res = run_presolve(&lp, &cfg).map_err(|e| match e {
        PresolveError::Infeasible { .. } => Failure(EXIT_INFEASIBLE, e.to_string()),
        other => usage(other.to_string()),
    })?;
    let secs = start.elapsed().as_secs_f64();
    if let Some(p) = &a.out {
        write_file(p, &io::format::to_string(&res.lp))?;
    }
    if let Some(p) = &a.journal {
        write_file(p, &io::journal::to_string(&res.journal))?;
    }
    if let Some(p) = &a.stats {
        write_file(p, &stats::presolve_doc(&a.input.display().to_string(), &res.stats))?;
    }
    let s = &res.stats;
    writeln!(
        out,
        "nnz {} -> {} rows -{} cols -{} time {secs:.6}",
        s.nnz_before,
        s.nnz_after,
        s.rows_before - s.rows_after,
        s.cols_before - s.cols_after
    )
    .map_err(|e| usage(e.to_string()))
}

fn generate_cmd(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
    let mut spec: GeneratorSpec = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let g = io::generate(&spec).map_err(|e| usage(e.to_string()))?;
    write_file(&a.out, &io::format::to_string(&g.lp))?;
    if let Some(p) = &a.manifest {
        write_file(p, &g.manifest())?;
    }
    writeln!(out, "nnz {} removable {} plants {}", g.lp.total_nnz(), g.removable_nnz(), g.plants.len())
        .map_err(|e| usage(e.to_string()))
}

fn verify_cmd(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let lp = io::read(&a.original).map_err(|e| usage(format!("{}: {e}", a.original.display())))?;
    let journal: ReductionJournal =
        io::journal::read(&a.journal).map_err(|e| usage(format!("{}: {e}", a.journal.display())))?;
    let x = read_solution(&a.solution).map_err(usage)?;
    let presolved = replay(&lp, &journal).map_err(|e| usage(e.to_string()))?;
    let inner = evaluate(&presolved, &x).map_err(|e| usage(e.to_string()))?;
    let lifted = postsolve(&journal, &x).map_err(|e| usage(e.to_string()))?;
    let report = evaluate(&lp, &lifted).map_err(|e| usage(e.to_string()))?;
    let tol = a.tol_feas.unwrap_or(Tolerances::default().feas);
    let gap = (report.objective - inner.objective).abs() / inner.objective.abs().max(1.0);
    writeln!(
        out,
        "max_violation {:e} objective {} presolved_objective {} relative_gap {:e}",
        report.max_violation, report.objective, inner.objective, gap
    )
    .map_err(|e| usage(e.to_string()))?;
    report.check(tol).map_err(|e| Failure(EXIT_INFEASIBLE, e.to_string()))?;
    if gap > 1e-9 {
        return Err(Failure(EXIT_INFEASIBLE, format!("objective differs by {gap:e} (relative)")));
    }
    Ok(())
}

fn stats_cmd(a: &StatsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let lp = io::read(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let doc = stats::problem_doc(&a.input.display().to_string(), &lp);
    match &a.out {
        Some(p) => write_file(p, &doc),
        None => out.write_all(doc.as_bytes()).map_err(|e| usage(e.to_string())),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let res = match &cli.command {
        Command::Presolve(a) => presolve_cmd(a, out),
        Command::Generate(a) => generate_cmd(a, out),
        Command::Verify(a) => verify_cmd(a, out),
        Command::Stats(a) => stats_cmd(a, out),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
