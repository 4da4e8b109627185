//! The three-stage projected viscosity iteration.
//!
//! For a validated problem the solver runs
//!
//! ```text
//! z_n     = Q_C(x_n - l3 A3 x_n)
//! y_n     = Q_C(z_n - l2 A2 z_n)
//! t_n     = Q_C(y_n - l1 A1 y_n)
//! x_{n+1} = a_n f(x_n) + b_n x_n + (1 - a_n - b_n) S(t_n)
//! ```
//!
//! where `t_n = G(x_n)`. Each stage is a strict contraction when its step size
//! lies inside the window `(0, (d - cL^2)/(K^2 L^2))`, so `G` has a unique
//! fixed point.

use std::fmt;
use std::io::{self, Write};
use std::ops::Deref;

use thiserror::Error;

use crate::operators::{
    check_cocoercive, check_contraction, check_expansive, check_lipschitz, check_nonexpansive,
    expansivity_constant, forward_step, nonexpansive_factor, CertifiedOperator, ContractionMap,
    NonexpansiveMap, PointSampler, VerifierReport,
};
use crate::space::{ConvexSet, SpaceError, SpaceParams, Vector};

/// Default iteration cap of [`solve`].
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Points produced by the maps `f` and `S` must land within this distance of C.
const RANGE_TOL: f64 = 1e-10;

const VALIDATION_SEED: u64 = 0x5eed;
const VALIDATION_SAMPLES: usize = 512;

/// Step-size schedule for the weights `a_n` and `b_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleSpec {
    /// `1 / (n + shift)`
    Harmonic { shift: u32 },
    Constant { value: f64 },
    /// `(n + 1)^(-exponent)`
    PowerLaw { exponent: f64 },
}

/// Value of the schedule at iteration `n >= 1`.
pub fn schedule_value(schedule: &ScheduleSpec, n: usize) -> f64 {
    debug_assert!(n >= 1);
    match *schedule {
        ScheduleSpec::Harmonic { shift } => 1.0 / (n as f64 + f64::from(shift)),
        ScheduleSpec::Constant { value } => value,
        ScheduleSpec::PowerLaw { exponent } => (n as f64 + 1.0).powf(-exponent),
    }
}

impl ScheduleSpec {
    /// `sup_n` of the schedule. Every family is nonincreasing, so this is the value at `n = 1`.
    pub fn supremum(&self) -> f64 {
        schedule_value(self, 1)
    }

    fn range_violation(&self, role: &'static str) -> Option<Violation> {
        let ok = match *self {
            ScheduleSpec::Harmonic { shift } => shift >= 1,
            ScheduleSpec::Constant { value } => value > 0.0 && value < 1.0,
            ScheduleSpec::PowerLaw { exponent } => exponent > 0.0 && exponent <= 1.0,
        };
        (!ok).then_some(Violation::ScheduleRange { role, schedule: *self })
    }
}

/// A full problem instance: constraint set, the three operators `A1, A2, A3`
/// (in that order), step sizes, viscosity map `f`, nonexpansive map `S` and
/// the weight schedules.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub set: ConvexSet,
    pub operators: [CertifiedOperator; 3],
    pub lambdas: [f64; 3],
    pub contraction: ContractionMap,
    pub nonexpansive: NonexpansiveMap,
    pub schedule_a: ScheduleSpec,
    pub schedule_b: ScheduleSpec,
    pub space: SpaceParams,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `A3`, the operator of the first stage and of the convergence bound.
    pub fn a3(&self) -> &CertifiedOperator {
        &self.operators[2]
    }
}

/// A broken hypothesis of the convergence theorem.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Dimension { what: String, expected: usize, found: usize },
    StepSize { stage: usize, lambda: f64, window: f64 },
    EmptyWindow { stage: usize, d: f64, bound: f64 },
    ScheduleRange { role: &'static str, schedule: ScheduleSpec },
    VanishingWeights { schedule: ScheduleSpec },
    BoundedWeights { schedule: ScheduleSpec },
    WeightSum { sum: f64 },
    ContractionLeavesSet { distance: f64 },
    ContractionConstant { alpha: f64, worst_margin: f64 },
    NonexpansiveLeavesSet { distance: f64 },
    NotNonexpansive { worst_margin: f64 },
    CustomOperator { stage: usize, check: &'static str, worst_margin: f64 },
    Set(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension { what, expected, found } => {
                write!(f, "{what} has dimension {found}, expected {expected}")
            }
            Violation::StepSize { stage, lambda, window } => write!(
                f,
                "step size lambda{stage} = {lambda} outside window 0 < lambda < (d - cL^2)/(K^2 L^2) = {window}: step size exceeds window ({window})"
            ),
            Violation::EmptyWindow { stage, d, bound } => {
                write!(f, "operator A{stage} has d = {d} <= cL^2 = {bound}, step-size window is empty")
            }
            Violation::ScheduleRange { role, schedule } => {
                write!(f, "schedule_{role} = {schedule:?} does not produce values in (0, 1)")
            }
            Violation::VanishingWeights { schedule } => write!(
                f,
                "schedule_a = {schedule:?} violates the vanishing-weight condition: a_n must tend to 0 with divergent sum"
            ),
            Violation::BoundedWeights { schedule } => write!(
                f,
                "schedule_b = {schedule:?} violates the bounded-weight condition: 0 < liminf b_n <= limsup b_n < 1 required"
            ),
            Violation::WeightSum { sum } => {
                write!(f, "a_n + b_n reaches {sum} >= 1; the weight of S(t_n) must stay positive")
            }
            Violation::ContractionLeavesSet { distance } => {
                write!(f, "contraction f maps a point of C to distance {distance:e} outside C")
            }
            Violation::ContractionConstant { alpha, worst_margin } => write!(
                f,
                "contraction f violates its declared constant {alpha} (worst margin {worst_margin:e})"
            ),
            Violation::NonexpansiveLeavesSet { distance } => {
                write!(f, "nonexpansive map S maps a point of C to distance {distance:e} outside C")
            }
            Violation::NotNonexpansive { worst_margin } => {
                write!(f, "map S is not nonexpansive on C (worst margin {worst_margin:e})")
            }
            Violation::CustomOperator { stage, check, worst_margin } => write!(
                f,
                "custom operator A{stage} fails the sampled {check} check (worst margin {worst_margin:e})"
            ),
            Violation::Set(msg) => write!(f, "constraint set: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("problem fails {} hypothesis check(s): {}", .violations.len(), join(.violations))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Checks every hypothesis of the convergence theorem, collecting all violations.
pub fn validate(spec: &ProblemSpec) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let dim = spec.dim();

    let mut dims: Vec<(String, usize)> = vec![("constraint set".into(), spec.set.dim())];
    for (i, op) in spec.operators.iter().enumerate() {
        dims.push((format!("operator A{}", i + 1), op.dim()));
    }
    if let Some(d) = spec.contraction.dim() {
        dims.push(("contraction f".into(), d));
    }
    if let Some(d) = spec.nonexpansive.dim() {
        dims.push(("nonexpansive map S".into(), d));
    }
    for (what, found) in dims {
        if found != dim {
            out.push(Violation::Dimension { what, expected: dim, found });
        }
    }
    if !out.is_empty() {
        return Err(out);
    }

    let k_squared = spec.space.k_squared();
    for (i, (op, &lambda)) in spec.operators.iter().zip(&spec.lambdas).enumerate() {
        let stage = i + 1;
        let slack = expansivity_constant(op);
        if slack <= 0.0 {
            out.push(Violation::EmptyWindow { stage, d: op.d(), bound: op.d() - slack });
            continue;
        }
        let window = op.step_window(k_squared);
        if !(lambda > 0.0 && lambda < window) {
            out.push(Violation::StepSize { stage, lambda, window });
        }
        if op.is_custom() {
            let seed = VALIDATION_SEED + stage as u64;
            let checks: [(&'static str, VerifierReport); 3] = [
                ("cocoercive", check_cocoercive(op, VALIDATION_SAMPLES, seed)),
                ("lipschitz", check_lipschitz(op, VALIDATION_SAMPLES, seed)),
                ("expansive", check_expansive(op, VALIDATION_SAMPLES, seed)),
            ];
            for (check, report) in checks {
                if !report.passed {
                    out.push(Violation::CustomOperator { stage, check, worst_margin: report.worst_margin });
                }
            }
        }
    }

    let mut schedules_ok = true;
    for (role, schedule) in [("a", &spec.schedule_a), ("b", &spec.schedule_b)] {
        if let Some(v) = schedule.range_violation(role) {
            out.push(v);
            schedules_ok = false;
        }
    }
    if matches!(spec.schedule_a, ScheduleSpec::Constant { .. }) {
        out.push(Violation::VanishingWeights { schedule: spec.schedule_a });
        schedules_ok = false;
    }
    if !matches!(spec.schedule_b, ScheduleSpec::Constant { .. }) {
        out.push(Violation::BoundedWeights { schedule: spec.schedule_b });
        schedules_ok = false;
    }
    if schedules_ok {
        let sum = spec.schedule_a.supremum() + spec.schedule_b.supremum();
        if sum >= 1.0 {
            out.push(Violation::WeightSum { sum });
        }
    }

    if let Err(e) = check_maps_on_set(spec, &mut out) {
        out.push(Violation::Set(e.to_string()));
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn check_maps_on_set(spec: &ProblemSpec, out: &mut Vec<Violation>) -> Result<(), SpaceError> {
    let set = &spec.set;
    let mut sampler = PointSampler::new(spec.dim(), VALIDATION_SEED, Some(set));
    let mut f_gap: f64 = 0.0;
    let mut s_gap: f64 = 0.0;
    for _ in 0..VALIDATION_SAMPLES {
        let x = sampler.point()?;
        f_gap = f_gap.max(set.distance(&spec.contraction.apply(&x))?);
        s_gap = s_gap.max(set.distance(&spec.nonexpansive.apply(&x)?)?);
    }
    if f_gap > RANGE_TOL {
        out.push(Violation::ContractionLeavesSet { distance: f_gap });
    }
    if s_gap > RANGE_TOL {
        out.push(Violation::NonexpansiveLeavesSet { distance: s_gap });
    }
    let report = check_contraction(&spec.contraction, set, VALIDATION_SAMPLES, VALIDATION_SEED + 10)?;
    if !report.passed {
        out.push(Violation::ContractionConstant {
            alpha: spec.contraction.alpha(),
            worst_margin: report.worst_margin,
        });
    }
    let report = check_nonexpansive(&spec.nonexpansive, set, VALIDATION_SAMPLES, VALIDATION_SEED + 11)?;
    if !report.passed {
        out.push(Violation::NotNonexpansive { worst_margin: report.worst_margin });
    }
    Ok(())
}

/// A problem that has passed [`validate`]. Solver entry points require one.
#[derive(Clone, Debug)]
pub struct ValidatedSpec(ProblemSpec);

impl ValidatedSpec {
    pub fn new(spec: ProblemSpec) -> Result<Self, ValidationError> {
        validate(&spec).map_err(|violations| ValidationError { violations })?;
        Ok(ValidatedSpec(spec))
    }

    pub fn into_inner(self) -> ProblemSpec {
        self.0
    }
}

impl Deref for ValidatedSpec {
    type Target = ProblemSpec;

    fn deref(&self) -> &ProblemSpec {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("iteration {n}: a_n + b_n = {sum} >= 1")]
    WeightSum { n: usize, sum: f64 },
    #[error("iteration index must start at 1")]
    ZeroIndex,
}

/// Intermediate points of one evaluation of `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stages {
    pub z: Vector,
    pub y: Vector,
    /// `t = G(x)`
    pub t: Vector,
}

fn stage(spec: &ProblemSpec, index: usize, x: &Vector) -> Result<Vector, SpaceError> {
    spec.set.project(&forward_step(&spec.operators[index], spec.lambdas[index], x))
}

/// The three projected forward steps, innermost (`A3`) first.
pub fn g_stages(spec: &ValidatedSpec, x: &Vector) -> Result<Stages, SpaceError> {
    x.check_dim(spec.dim())?;
    let z = stage(spec, 2, x)?;
    let y = stage(spec, 1, &z)?;
    let t = stage(spec, 0, &y)?;
    Ok(Stages { z, y, t })
}

/// `G(x) = Q_C(I - l1 A1) Q_C(I - l2 A2) Q_C(I - l3 A3) x`
pub fn g_map(spec: &ValidatedSpec, x: &Vector) -> Result<Vector, SpaceError> {
    Ok(g_stages(spec, x)?.t)
}

/// Product of the three forward-step factors, a Lipschitz constant of `G`.
pub fn contraction_factor(spec: &ProblemSpec) -> f64 {
    let k_squared = spec.space.k_squared();
    spec.operators
        .iter()
        .zip(&spec.lambdas)
        .map(|(op, &lambda)| nonexpansive_factor(op, lambda, k_squared))
        .product()
}

/// Result of one viscosity step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub x_next: Vector,
    pub stages: Stages,
    pub a: f64,
    pub b: f64,
}

/// One iteration from `x_n` with the schedule weights at index `n >= 1`.
pub fn iterate_once(spec: &ValidatedSpec, x: &Vector, n: usize) -> Result<Step, SolverError> {
    if n == 0 {
        return Err(SolverError::ZeroIndex);
    }
    let a = schedule_value(&spec.schedule_a, n);
    let b = schedule_value(&spec.schedule_b, n);
    if a + b >= 1.0 {
        return Err(SolverError::WeightSum { n, sum: a + b });
    }
    step_with_weights(spec, x, a, b)
}

/// The viscosity combination with explicit weights; no constraint on `a + b`.
pub fn step_with_weights(spec: &ValidatedSpec, x: &Vector, a: f64, b: f64) -> Result<Step, SolverError> {
    let stages = g_stages(spec, x)?;
    let s_t = spec.nonexpansive.apply(&stages.t)?;
    let fx = spec.contraction.apply(x);
    let rest = 1.0 - a - b;
    let x_next = (a * &fx).add_scaled(b, x).add_scaled(rest, &s_t);
    Ok(Step { x_next, stages, a, b })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { tol: 1e-8, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub x: Vector,
    pub z: Vector,
    pub y: Vector,
    pub t: Vector,
    pub a: f64,
    pub b: f64,
    /// `|x_{n+1} - x_n|`
    pub step_norm: f64,
    /// `|x_n - p|`
    pub dist_to_p: Option<f64>,
    /// `|A3 x_n - A3 p|`
    pub a3_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub terminated_by: Termination,
    /// The last computed iterate `x_{N+1}`.
    pub final_point: Vector,
    pub tol: f64,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn converged(&self) -> bool {
        self.terminated_by == Termination::Tolerance
    }

    /// Writes `n,x_1..,z_1..,y_1..,t_1..,a_n,b_n,step_norm,dist_to_p,A3_gap`,
    /// floats with 17 significant digits. Unknown distances are left empty.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let dim = self.final_point.dim();
        let mut header = vec!["n".to_string()];
        for name in ["x", "z", "y", "t"] {
            header.extend((1..=dim).map(|i| format!("{name}_{i}")));
        }
        header.extend(["a_n", "b_n", "step_norm", "dist_to_p", "A3_gap"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![r.n.to_string()];
            for v in [&r.x, &r.z, &r.y, &r.t] {
                row.extend(v.as_slice().iter().map(|&e| fmt_float(e)));
            }
            row.extend([r.a, r.b, r.step_norm].map(fmt_float));
            row.push(r.dist_to_p.map(fmt_float).unwrap_or_default());
            row.push(r.a3_gap.map(fmt_float).unwrap_or_default());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs the iteration from `x1` until both `|x_{n+1} - x_n| <= tol max(1, |x_n|)`
/// and `|x_n - G(x_n)| <= tol`, or until `max_iter` iterations.
pub fn solve(
    spec: &ValidatedSpec,
    x1: &Vector,
    stop: StopRule,
    reference_p: Option<&Vector>,
) -> Result<Trace, SolverError> {
    x1.check_dim(spec.dim())?;
    if let Some(p) = reference_p {
        p.check_dim(spec.dim())?;
    }
    let mut x = if spec.set.contains(x1, crate::space::ABS_TOL)? {
        x1.clone()
    } else {
        let projected = spec.set.project(x1)?;
        log::warn!("starting point {x1} lies outside C; using its projection {projected}");
        projected
    };
    let a3 = spec.a3();
    let a3_p = reference_p.map(|p| a3.apply(p));

    let mut records = Vec::new();
    let mut terminated_by = Termination::MaxIter;
    for n in 1..=stop.max_iter {
        let step = iterate_once(spec, &x, n)?;
        let step_norm = step.x_next.distance(&x);
        let residual = x.distance(&step.stages.t);
        let done = step_norm <= stop.tol * x.norm().max(1.0) && residual <= stop.tol;
        let (dist_to_p, a3_gap) = match (reference_p, &a3_p) {
            (Some(p), Some(a3_p)) => (Some(x.distance(p)), Some(a3.apply(&x).distance(a3_p))),
            _ => (None, None),
        };
        let Step { x_next, stages, a, b } = step;
        let Stages { z, y, t } = stages;
        records.push(TraceRecord {
            n,
            x: std::mem::replace(&mut x, x_next),
            z,
            y,
            t,
            a,
            b,
            step_norm,
            dist_to_p,
            a3_gap,
        });
        if done {
            terminated_by = Termination::Tolerance;
            break;
        }
    }
    Ok(Trace { records, terminated_by, final_point: x, tol: stop.tol })
}
