//! Projected viscosity iteration for a general system of variational
//! inequalities over a closed convex set in a finite-dimensional Hilbert space.
//!
//! - [`space`]: vectors, the duality map and metric projections.
//! - [`operators`]: relaxed cocoercive, Lipschitz operators with certified
//!   constants and sampled verifiers.
//! - [`solver`]: hypothesis validation, the composite map `G` and the
//!   three-stage iteration.
//! - [`oracle`]: Picard fixed point of `G` and checks of the convergence argument.
//! - [`config`] and [`cli`]: the JSON configuration and the `visolve` commands.

pub mod cli;
pub mod config;
pub mod operators;
pub mod oracle;
pub mod solver;
pub mod space;

pub use operators::{
    certify_affine, check_cocoercive, check_expansive, check_lipschitz, expansivity_constant, forward_step,
    nonexpansive_factor, CertifiedOperator, ContractionMap, NonexpansiveMap, VerifierReport,
};
pub use oracle::{fixed_point_g, remark_bound_check, vi_residual, viscosity_vi_check};
pub use solver::{g_map, iterate_once, schedule_value, solve, validate, ProblemSpec, ScheduleSpec, Trace, ValidatedSpec};
pub use space::{duality_map, inner, ConvexSet, SpaceParams, Vector};
