//! Subcommand implementations behind the `visolve` binary.
//!
//! Each command writes its artifact to the supplied writer and returns the
//! process exit status; errors map to exit code 1.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, ScheduleConfig};
use crate::operators::{
    check_cocoercive, check_expansive, check_forward_step_factor, check_lipschitz, PointSampler,
    VerifierReport,
};
use crate::oracle::{
    check_g_contraction, fixed_point_g, induced_stages, picard_from, remark_bound_check, vi_residual,
    viscosity_vi_value, OracleError, ORACLE_TOL,
};
use crate::solver::{contraction_factor, fmt_float, solve, SolverError, StopRule, Trace, ValidatedSpec, ValidationError};
use crate::space::{SpaceError, Vector};

/// Environment variable overriding the configured iteration cap.
pub const MAX_ITER_ENV: &str = "VISOLVE_MAX_ITER";

/// Tolerance of the viscosity inequality check.
pub const VI_TOL: f64 = 1e-6;

/// Number of random Picard starts used to probe uniqueness of the fixed point.
pub const SINGLETON_STARTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Invalid = 1,
    MaxIter = 2,
    VerificationFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::Invalid
    }
}

/// Loads a config and applies the command-line and environment overrides.
pub fn load_config(
    path: &std::path::Path,
    seed: Option<u64>,
    max_iter_env: Option<&str>,
) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(raw) = max_iter_env {
        let cap: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| CliError::Usage(format!("{MAX_ITER_ENV}={raw:?} is not a positive integer")))?;
        config.max_iter = cap;
    }
    Ok(config)
}

fn prepare(config: &RunConfig) -> Result<(ValidatedSpec, Vector), CliError> {
    let spec = ValidatedSpec::new(config.build_problem()?)?;
    let p = match &config.reference_p {
        Some(p) => p.clone(),
        None => fixed_point_g(&spec, ORACLE_TOL)?,
    };
    Ok((spec, p))
}

pub struct RunOutcome {
    pub status: ExitStatus,
    pub trace: Trace,
    pub reference_p: Vector,
}

/// Solves the configured problem and writes the trace CSV.
pub fn cmd_run(config: &RunConfig, out: impl Write) -> Result<RunOutcome, CliError> {
    let (spec, p) = prepare(config)?;
    let stop = StopRule { tol: config.tol(), max_iter: config.max_iter };
    let trace = solve(&spec, &config.x1, stop, Some(&p))?;
    trace.write_csv(out)?;
    let status = if trace.converged() { ExitStatus::Success } else { ExitStatus::MaxIter };
    Ok(RunOutcome { status, trace, reference_p: p })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vector,
    pub y: Vector,
}

impl From<VerifierReport> for CheckResult {
    fn from(r: VerifierReport) -> Self {
        CheckResult {
            passed: r.passed,
            worst_margin: r.worst_margin,
            witness: r.witness.map(|(x, y)| Witness { x, y }),
        }
    }
}

impl CheckResult {
    fn from_margin(margin: f64) -> Self {
        CheckResult { passed: margin >= 0.0, worst_margin: margin, witness: None }
    }

    fn failed() -> Self {
        CheckResult { passed: false, worst_margin: f64::NEG_INFINITY, witness: None }
    }
}

pub type VerifyReport = BTreeMap<String, CheckResult>;

/// Runs every sampled and oracle check and writes the JSON report.
pub fn cmd_verify(config: &RunConfig, n_samples: usize, mut out: impl Write) -> Result<(ExitStatus, VerifyReport), CliError> {
    if n_samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let spec = ValidatedSpec::new(config.build_problem()?)?;
    let seed = config.seed;
    let k_squared = spec.space.k_squared();
    let mut report = VerifyReport::new();

    for (i, (op, &lambda)) in spec.operators.iter().zip(&spec.lambdas).enumerate() {
        let name = format!("A{}", i + 1);
        let s = seed.wrapping_add(100 * (i as u64 + 1));
        report.insert(format!("{name}.cocoercive"), check_cocoercive(op, n_samples, s).into());
        report.insert(format!("{name}.lipschitz"), check_lipschitz(op, n_samples, s + 1).into());
        report.insert(format!("{name}.expansive"), check_expansive(op, n_samples, s + 2).into());
        report.insert(
            format!("{name}.forward_step_factor"),
            check_forward_step_factor(op, lambda, k_squared, n_samples, s + 3).into(),
        );
    }
    report.insert("G.contraction".into(), check_g_contraction(&spec, n_samples, seed.wrapping_add(7))?.into());

    let oracle = match &config.reference_p {
        Some(p) => Ok(p.clone()),
        None => fixed_point_g(&spec, ORACLE_TOL),
    };
    match oracle {
        Ok(p) => {
            let (y, z) = induced_stages(&spec, &p)?;
            let residual = vi_residual(&spec, &p, &y, &z)?;
            report.insert("oracle.fixed_point".into(), CheckResult::from_margin(1e-9 - residual));

            let mut sampler = PointSampler::new(spec.dim(), seed.wrapping_add(11), Some(&spec.set));
            let mut spread: f64 = 0.0;
            let mut singleton = CheckResult::from_margin(0.0);
            for _ in 0..SINGLETON_STARTS {
                let start = sampler.point()?;
                match picard_from(&spec, &start, ORACLE_TOL) {
                    Ok(result) => spread = spread.max(result.point.distance(&p)),
                    Err(_) => singleton = CheckResult::failed(),
                }
            }
            if singleton.passed {
                singleton = CheckResult::from_margin(2.0 * ORACLE_TOL - spread);
            }
            report.insert("oracle.singleton".into(), singleton);

            let stop = StopRule { tol: config.tol(), max_iter: config.max_iter };
            let trace = solve(&spec, &config.x1, stop, Some(&p))?;
            report.insert("remark_bound".into(), remark_bound_check(&trace, &spec, &p).into());
            let vi = viscosity_vi_value(&trace.final_point, &p, &spec.contraction)?;
            report.insert("viscosity_vi".into(), CheckResult::from_margin(VI_TOL - vi));
        }
        Err(e) => {
            log::error!("oracle fixed point failed: {e}");
            for name in ["oracle.fixed_point", "oracle.singleton", "remark_bound", "viscosity_vi"] {
                report.insert(name.into(), CheckResult::failed());
            }
        }
    }

    serde_json::to_writer_pretty(&mut out, &report).map_err(io::Error::from)?;
    writeln!(out)?;
    let status = if report.values().all(|r| r.passed) {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    };
    Ok((status, report))
}

/// Parameter varied by `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// Step size of stage `1..=3`.
    Lambda(usize),
    Tol,
    /// Shift of a harmonic `schedule_a`.
    ScheduleShift,
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "lambda1" | "lambda_1" => Ok(SweepParam::Lambda(1)),
            "lambda2" | "lambda_2" => Ok(SweepParam::Lambda(2)),
            "lambda3" | "lambda_3" => Ok(SweepParam::Lambda(3)),
            "tol" => Ok(SweepParam::Tol),
            "schedule_shift" => Ok(SweepParam::ScheduleShift),
            other => Err(CliError::Usage(format!(
                "unknown sweep parameter {other:?} (expected lambda1, lambda2, lambda3, tol or schedule_shift)"
            ))),
        }
    }
}

/// Parses a comma-separated list of values.
pub fn parse_values(raw: &str) -> Result<Vec<f64>, CliError> {
    let values = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Usage(format!("invalid sweep value {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("--values must list at least one value".into()));
    }
    Ok(values)
}

fn apply_param(base: &RunConfig, param: SweepParam, value: f64) -> Result<RunConfig, String> {
    let mut config = base.clone();
    match param {
        SweepParam::Lambda(stage) => config.problem.lambdas[stage - 1] = value.into(),
        SweepParam::Tol => {
            if !(value > 0.0) {
                return Err(format!("tol must be positive, got {value}"));
            }
            config.tol = value.into();
        }
        SweepParam::ScheduleShift => {
            if value.fract() != 0.0 || !(1.0..=f64::from(u32::MAX)).contains(&value) {
                return Err(format!("schedule shift must be a positive integer, got {value}"));
            }
            match &mut config.problem.schedule_a {
                ScheduleConfig::Harmonic { shift } => *shift = value as u32,
                other => return Err(format!("schedule_a is {other:?}, not harmonic")),
            }
        }
    }
    Ok(config)
}

fn sweep_row(base: &RunConfig, param: SweepParam, value: f64) -> String {
    let value_field = fmt_float(value);
    let outcome = apply_param(base, param, value).and_then(|config| {
        let (spec, p) = prepare(&config).map_err(|e| e.to_string())?;
        let stop = StopRule { tol: config.tol(), max_iter: config.max_iter };
        let trace = solve(&spec, &config.x1, stop, Some(&p)).map_err(|e| e.to_string())?;
        Ok((trace, p, contraction_factor(&spec)))
    });
    match outcome {
        Ok((trace, p, r)) => {
            let iterations = if trace.converged() { trace.iterations().to_string() } else { "max_iter".into() };
            format!("{value_field},{iterations},{},{}", fmt_float(trace.final_point.distance(&p)), fmt_float(r))
        }
        Err(reason) => {
            log::warn!("sweep value {value} skipped: {reason}");
            format!("{value_field},skipped,,")
        }
    }
}

/// Re-solves the base problem for each value and writes one summary row per value,
/// in input order.
pub fn cmd_sweep(base: &RunConfig, param: SweepParam, values: &[f64], mut out: impl Write) -> Result<ExitStatus, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("--values must list at least one value".into()));
    }
    let rows: Vec<String> = values.par_iter().map(|&v| sweep_row(base, param, v)).collect();
    writeln!(out, "value,iterations_to_tol,final_dist_to_p,contraction_factor_r")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(ExitStatus::Success)
}
