//! Ground truth for the solver: the Picard fixed point of `G`, residuals of
//! the variational-inequality system, and sampled checks of the convergence
//! argument (contraction of `G`, the expansivity bound along a trajectory and
//! the viscosity inequality).

use thiserror::Error;

use crate::operators::{check_pairs, expansivity_constant, forward_step, ContractionMap, VerifierReport, VERIFY_TOL};
use crate::solver::{contraction_factor, g_map, Trace, ValidatedSpec};
use crate::space::{duality_map, inner, SpaceError, Vector};

/// Default tolerance of [`fixed_point_g`].
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("G is not a certified contraction (factor {0} >= 1)")]
    NotContraction(f64),
    #[error("Picard iteration exceeded its a-priori bound of {bound} steps (residual {residual:e})")]
    BoundExceeded { bound: usize, residual: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardResult {
    pub point: Vector,
    pub iterations: usize,
    /// Length of the last Picard step; the returned point is within
    /// `r / (1 - r)` times this of the fixed point.
    pub residual: f64,
    /// `ceil(log(tol (1 - r) / |x0 - G(x0)|) / log r)`
    pub bound: usize,
}

/// Fixed point of `G` by Picard iteration from the projection of the origin onto C.
pub fn fixed_point_g(spec: &ValidatedSpec, tol: f64) -> Result<Vector, OracleError> {
    let start = spec.set.anchor_point()?;
    Ok(picard_from(spec, &start, tol)?.point)
}

/// Picard iteration `x <- G(x)` from `start` until the a-posteriori estimate
/// `r / (1 - r) |x - G(x)|` of the distance to the fixed point is at most `tol`.
///
/// Fails if the contraction factor certified by the operator constants is not
/// below one, or if more steps are needed than the Banach a-priori estimate
/// allows (which exposes constants that overstate the contraction).
pub fn picard_from(spec: &ValidatedSpec, start: &Vector, tol: f64) -> Result<PicardResult, OracleError> {
    if !(tol > 0.0) {
        return Err(OracleError::BadTolerance(tol));
    }
    let r = contraction_factor(spec);
    if r >= 1.0 {
        return Err(OracleError::NotContraction(r));
    }
    // After x -> G(x), |G(x) - p| <= r / (1 - r) |x - G(x)|.
    let error_bound = |step: f64| r / (1.0 - r) * step;
    let mut x = spec.set.project(start)?;
    let mut gx = g_map(spec, &x)?;
    let initial = x.distance(&gx);
    if initial == 0.0 {
        return Ok(PicardResult { point: x, iterations: 0, residual: 0.0, bound: 0 });
    }
    let bound = if r == 0.0 {
        1
    } else {
        ((tol * (1.0 - r) / initial).ln() / r.ln()).ceil().max(1.0) as usize
    };
    // Two extra steps absorb rounding in the final residual.
    for iterations in 1..=bound + 2 {
        let step = x.distance(&gx);
        if error_bound(step) <= tol {
            return Ok(PicardResult { point: gx, iterations, residual: step, bound });
        }
        x = gx;
        gx = g_map(spec, &x)?;
    }
    Err(OracleError::BoundExceeded { bound, residual: x.distance(&gx) })
}

/// Solution of `G` seen through the stage values `(y*, z*)` it induces.
pub fn induced_stages(spec: &ValidatedSpec, p: &Vector) -> Result<(Vector, Vector), SpaceError> {
    let z = spec.set.project(&forward_step(&spec.operators[2], spec.lambdas[2], p))?;
    let y = spec.set.project(&forward_step(&spec.operators[1], spec.lambdas[1], &z))?;
    Ok((y, z))
}

/// Largest residual of the three projection equations
/// `x = Q_C(y - l1 A1 y)`, `y = Q_C(z - l2 A2 z)`, `z = Q_C(x - l3 A3 x)`.
pub fn vi_residual(spec: &ValidatedSpec, x: &Vector, y: &Vector, z: &Vector) -> Result<f64, SpaceError> {
    for v in [x, y, z] {
        v.check_dim(spec.dim())?;
    }
    let equation = |lhs: &Vector, index: usize, rhs: &Vector| -> Result<f64, SpaceError> {
        let image = spec.set.project(&forward_step(&spec.operators[index], spec.lambdas[index], rhs))?;
        Ok(lhs.distance(&image))
    };
    Ok(equation(x, 0, y)?.max(equation(y, 1, z)?).max(equation(z, 2, x)?))
}

/// Samples `|G(x) - G(y)| <= r |x - y|` over pairs in C, with `r` the product
/// of the forward-step factors.
pub fn check_g_contraction(spec: &ValidatedSpec, n_samples: usize, seed: u64) -> Result<VerifierReport, SpaceError> {
    let r = contraction_factor(spec);
    check_pairs(spec.dim(), n_samples, seed, Some(&spec.set), VERIFY_TOL, |x, y| {
        Ok(r * x.distance(y) - g_map(spec, x)?.distance(&g_map(spec, y)?))
    })
}

/// Checks the expansivity bound `|x_n - p| <= |A3 x_n - A3 p| / (d3 - c3 L3^2)`
/// at every recorded iterate, and that `|A3 x_N - A3 p| <= 10 (d3 - c3 L3^2) tol`
/// at termination.
///
/// Distances are recomputed from the recorded iterates and `p`, so the
/// recorded diagnostic columns are not trusted. The reported margin is the
/// smaller of the two slacks.
pub fn remark_bound_check(trace: &Trace, spec: &ValidatedSpec, p: &Vector) -> VerifierReport {
    let a3 = spec.a3();
    let alpha = expansivity_constant(a3);
    let a3_p = a3.apply(p);
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    for record in &trace.records {
        let gap = a3.apply(&record.x).distance(&a3_p);
        let margin = gap / alpha - record.x.distance(p);
        if margin < worst {
            worst = margin;
            worst_pair = Some((record.x.clone(), p.clone()));
        }
    }
    let bound_ok = worst >= -VERIFY_TOL;
    let terminal = match trace.records.last() {
        Some(last) => {
            let gap = a3.apply(&last.x).distance(&a3_p);
            10.0 * alpha * trace.tol - gap
        }
        None => f64::NEG_INFINITY,
    };
    let terminal_ok = terminal >= 0.0;
    if terminal < worst {
        worst = terminal;
        worst_pair = trace.records.last().map(|r| (r.x.clone(), p.clone()));
    }
    let passed = bound_ok && terminal_ok;
    VerifierReport {
        samples: trace.records.len(),
        worst_margin: worst,
        tolerance: VERIFY_TOL,
        passed,
        witness: if passed { None } else { worst_pair },
    }
}

/// `<q - f(q), J(q - p)>`
pub fn viscosity_vi_value(q: &Vector, p: &Vector, f: &ContractionMap) -> Result<f64, SpaceError> {
    p.check_dim(q.dim())?;
    inner(&(q - &f.apply(q)), &duality_map(&(q - p)))
}

/// `<q - f(q), J(q - p)> <= tol`
pub fn viscosity_vi_check(q: &Vector, p: &Vector, f: &ContractionMap, tol: f64) -> Result<bool, SpaceError> {
    Ok(viscosity_vi_value(q, p, f)? <= tol)
}
