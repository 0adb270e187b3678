//! Command-line definitions and handlers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use resbench_core::channel::{max_fidelity_channel, verify_free_channel};
use resbench_core::distillation::{fidelity_bounds, fidelity_max_golden, g_program, golden_search, golden_target, yield_bounds, FidelityReport};
use resbench_core::monotones::{r_max, r_max_affine, r_min, r_std, Extended};
use resbench_core::theory::TheoryDescriptor;
use resbench_core::{Error, PureStateVector};
use serde_json::{json, Value};

use crate::io::{load_state, load_theory, vector_to_pairs, IoError, LoadedState};
use crate::record::{real, ResultRecord};
use crate::solver::RecordingSolver;
use crate::validate::{run_criteria, suite_criteria, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "resbench", version, about = "Resource-theory monotones, distillation bounds and validation suites")]
pub struct Cli {
    /// Tolerance for reported assertions (e.g. whether a state is free).
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Target relative gap and residual for the conic solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub solver_tol: f64,
    /// Omit `timing_ms` from records so output is reproducible byte for byte.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Measure {
    Rmax,
    Rstd,
    Rmin,
    RmaxAffine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a robustness measure.
    Monotone {
        #[arg(long, value_enum)]
        measure: Measure,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        theory: PathBuf,
    },
    /// Evaluate G(rho; k), or its affine variant.
    Gvalue {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        affine: bool,
    },
    /// Bounds on the distillation fidelity to a pure target.
    Fidelity {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Pure-state file, or `golden` (default).
        #[arg(long)]
        target: Option<String>,
        /// Also solve the channel program (affine theories only).
        #[arg(long)]
        oracle: bool,
    },
    /// Search for a golden state.
    Golden {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One-shot distillable-resource bounds at error epsilon.
    Yield {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        epsilon: f64,
    },
    /// Optimal resource non-generating channel (affine theories only).
    Oracle {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Pure-state file, or `golden` (default).
        #[arg(long)]
        target: Option<String>,
    },
    /// Run a validation suite.
    Validate {
        #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Input(_) => EXIT_INPUT,
            CliError::Core(Error::Solver(_)) => EXIT_SOLVER,
            CliError::Core(Error::UnsupportedTheory(_)) => EXIT_UNSUPPORTED,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command, writing records to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    if !(cli.solver_tol > 0.0 && cli.solver_tol < 1.0) || !(cli.tol >= 0.0) {
        return Err(CliError::Input("tolerances must be positive and below 1".into()));
    }
    if let Command::Validate { suite, seed } = &cli.command {
        return Ok(validate(suite, *seed, cli.solver_tol, out, err));
    }
    let start = Instant::now();
    let solver = RecordingSolver::new(cli.solver_tol);
    let mut record = match &cli.command {
        Command::Monotone { measure, state, theory } => monotone(*measure, state, theory, cli.tol, &solver)?,
        Command::Gvalue { state, theory, k, affine } => gvalue(state, theory, *k, *affine, &solver)?,
        Command::Fidelity { state, theory, target, oracle } => fidelity(state, theory, target.as_deref(), *oracle, &solver)?,
        Command::Golden { theory, restarts, seed } => golden(theory, *restarts, *seed, &solver)?,
        Command::Yield { state, theory, epsilon } => yield_cmd(state, theory, *epsilon, &solver)?,
        Command::Oracle { state, theory, target } => oracle(state, theory, target.as_deref(), &solver)?,
        Command::Validate { .. } => unreachable!(),
    };
    let (solver_gap, _) = solver.worst_gap();
    record.set_real("solver_gap", solver_gap);
    if !cli.no_timing {
        record.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    writeln!(out, "{}", record.to_line()).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(EXIT_OK)
}

fn status_of(v: Extended) -> &'static str {
    if v.is_finite() {
        "optimal"
    } else {
        "infinite"
    }
}

fn inputs(record: &mut ResultRecord, state: &Path, theory: &Path) -> CliResult<(LoadedState, TheoryDescriptor)> {
    let s = load_state(state)?;
    let t = load_theory(theory)?;
    if s.value.density().dim() != t.value.dim() {
        return Err(CliError::Input(format!("state has dimension {}, theory has {}", s.value.density().dim(), t.value.dim())));
    }
    record.input("state", &s.digest).input("theory", &t.digest);
    Ok((s.value, t.value))
}

fn monotone(measure: Measure, state: &Path, theory: &Path, tol: f64, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("monotone");
    let (state, t) = inputs(&mut record, state, theory)?;
    let rho = state.density();
    let (name, result) = match measure {
        Measure::Rmax => ("rmax", r_max(&rho, &t, s)?),
        Measure::Rstd => ("rstd", r_std(&rho, &t, s)?),
        Measure::Rmin => ("rmin", r_min(&rho, &t, s)?),
        Measure::RmaxAffine => ("rmax-affine", r_max_affine(&rho, &t, s)?),
    };
    record.set("measure", name).set_extended("value", result.value).set_extended("log_value", result.log_value);
    if let Some(p) = result.primal_value {
        record.set_real("primal_value", p);
    }
    record.set("free", result.value.finite().is_some_and(|v| v <= 1.0 + tol));
    record.status = status_of(result.value).to_string();
    record.gap = result.gap;
    if let Some(w) = &result.witness {
        record.set_witness(w);
    }
    Ok(record)
}

fn gvalue(state: &Path, theory: &Path, k: f64, affine: bool, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("gvalue");
    let (state, t) = inputs(&mut record, state, theory)?;
    let g = g_program(&state.density(), k, &t, affine, s)?;
    record.set_real("k", k).set("affine", affine).set_real("g", g.value);
    record.gap = s.worst_gap().0;
    record.set_witness(&g.witness);
    Ok(record)
}

fn target_state(target: Option<&str>, t: &TheoryDescriptor, record: &mut ResultRecord, s: &RecordingSolver) -> CliResult<(PureStateVector, bool)> {
    match target {
        None | Some("golden") => Ok((golden_target(t, s)?, true)),
        Some(path) => {
            let loaded = load_state(Path::new(path))?;
            let phi = loaded.value.pure().cloned().ok_or_else(|| CliError::Input(format!("{path}: target must be a pure state vector")))?;
            if phi.dim() != t.dim() {
                return Err(CliError::Input(format!("target has dimension {}, theory has {}", phi.dim(), t.dim())));
            }
            record.input("target", &loaded.digest);
            Ok((phi, false))
        }
    }
}

fn mechanism(m: impl std::fmt::Debug) -> Value {
    let name = format!("{m:?}");
    let mut out = String::new();
    for (i, ch) in name.chars().enumerate() {
        if ch.is_uppercase() && i > 0 {
            out.push('-');
        }
        out.push(ch.to_ascii_lowercase());
    }
    Value::String(out)
}

fn report_values(record: &mut ResultRecord, r: &FidelityReport) {
    record
        .set_real("upper", r.upper)
        .set_real("lower", r.lower)
        .set("exact", r.exact)
        .set("upper_mechanism", mechanism(r.upper_mechanism))
        .set("lower_mechanism", mechanism(r.lower_mechanism))
        .set("exact_reason", r.exact_reason.map(mechanism).unwrap_or(Value::Null))
        .set(
            "flags",
            json!({
                "constant_overlap": r.flags.constant_overlap,
                "rs_finite": r.flags.rs_finite,
                "target_is_golden": r.flags.target_is_golden,
            }),
        )
        .set("target", json!(vector_to_pairs(r.target.amplitudes())));
}

fn fidelity(state: &Path, theory: &Path, target: Option<&str>, oracle: bool, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("fidelity");
    let (state, t) = inputs(&mut record, state, theory)?;
    if oracle && !t.is_affine() {
        return Err(Error::UnsupportedTheory(format!("--oracle needs an affine theory, got {}", t.describe())).into());
    }
    let rho = state.density();
    let report = match target {
        None | Some("golden") => fidelity_max_golden(&rho, &t, s)?,
        Some(_) => {
            let (phi, _) = target_state(target, &t, &mut record, s)?;
            fidelity_bounds(&rho, &phi, &t, s)?
        }
    };
    report_values(&mut record, &report);
    if oracle {
        let (value, _) = max_fidelity_channel(&rho, &report.target, &t, s)?;
        record.set_real("oracle", value);
    }
    record.gap = s.worst_gap().0;
    Ok(record)
}

fn golden(theory: &Path, restarts: usize, seed: u64, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("golden");
    let t = load_theory(theory)?;
    record.input("theory", &t.digest);
    let cert = golden_search(&t.value, restarts, 1e-9, seed, s)?;
    record
        .set_real("r_min", cert.r_min)
        .set_real("r_max", cert.r_max)
        .set("matched", cert.matched)
        .set("analytic", cert.analytic)
        .set("method", if cert.analytic { "closed-form" } else { "heuristic-search" })
        .set("restarts", restarts)
        .set("seed", seed)
        .set("search_steps", cert.search_trace.len())
        .set("state", json!(vector_to_pairs(cert.state.amplitudes())));
    record.gap = (cert.r_max - cert.r_min).abs();
    Ok(record)
}

fn yield_cmd(state: &Path, theory: &Path, epsilon: f64, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("yield");
    let (state, t) = inputs(&mut record, state, theory)?;
    let b = yield_bounds(&state.density(), epsilon, &t, s)?;
    record
        .set_real("epsilon", epsilon)
        .set_extended("upper_log_r", b.upper_log_r)
        .set_extended("lower_log_r", b.lower_log_r)
        .set("lower_log_rs", b.lower_log_rs.map(crate::record::extended).unwrap_or(Value::Null));
    record.status = status_of(b.upper_log_r).to_string();
    record.gap = s.worst_gap().0;
    Ok(record)
}

fn oracle(state: &Path, theory: &Path, target: Option<&str>, s: &RecordingSolver) -> CliResult<ResultRecord> {
    let mut record = ResultRecord::new("oracle");
    let (state, t) = inputs(&mut record, state, theory)?;
    if !t.is_affine() {
        return Err(Error::UnsupportedTheory(format!("no channel program for {}", t.describe())).into());
    }
    let (phi, _) = target_state(target, &t, &mut record, s)?;
    let (value, choi) = max_fidelity_channel(&state.density(), &phi, &t, s)?;
    let check = verify_free_channel(&choi, &t, 4, s)?;
    record
        .set_real("oracle", value)
        .set("free", check.free)
        .set("target", json!(vector_to_pairs(phi.amplitudes())))
        .set("choi_dims", json!([choi.dims().0, choi.dims().1]));
    record.gap = s.worst_gap().0;
    record.set_witness(choi.matrix());
    Ok(record)
}

fn validate(suite: &str, seed: u64, solver_tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let ids = suite_criteria(suite).expect("suite names are checked by the parser");
    let reports = run_criteria(&ids, seed, solver_tol);
    let mut failed = Vec::new();
    for r in &reports {
        for c in &r.checks {
            let mut line = serde_json::to_value(c).expect("serializable");
            line["worst"] = real(c.worst);
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(err, "{}", r.summary_line());
        if !r.passed() {
            failed.push(r.id);
        }
    }
    let passed: Vec<u32> = reports.iter().filter(|r| r.passed()).map(|r| r.id).collect();
    let summary = json!({ "summary": { "suite": suite, "seed": seed, "passed": passed, "failed": failed } });
    let _ = writeln!(out, "{summary}");
    match reports.iter().find_map(|r| r.first_failure()) {
        None => EXIT_OK,
        Some(c) => {
            let _ = writeln!(err, "first failing check: criterion {}: {}", c.criterion, c.check);
            EXIT_CHECK_FAILED
        }
    }
}
