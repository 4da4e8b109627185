//! Certified operator classes and sample-based verifiers.
//!
//! A [`CertifiedOperator`] is a map `A` carrying constants `(c, d, L)` such that
//!
//! ```text
//! <Ax - Ay, x - y> >= -c |Ax - Ay|^2 + d |x - y|^2     (relaxed (c,d)-cocoercive)
//! |Ax - Ay| <= L |x - y|                               (L-Lipschitz)
//! ```
//!
//! with `d > c L^2`. Such an operator is `(d - c L^2)`-expansive, and for
//! `0 < lambda < (d - c L^2) / (K^2 L^2)` the forward step `I - lambda A` is a
//! strict contraction with factor [`nonexpansive_factor`].
//!
//! For affine maps `Ax = Mx + q` the tight constants are computed from the
//! matrix: `L = |M|_2` and `d = lambda_min(sym(M) + c M^T M)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::space::{ConvexSet, SpaceError, Vector};

/// Margin tolerance shared by every sampled verifier.
pub const VERIFY_TOL: f64 = 1e-10;

/// Half-width of the sampling box centred at the origin.
pub const SAMPLE_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has {expected} rows but shift has dimension {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("constant {name} must be positive and finite, got {value}")]
    NonPositiveConstant { name: &'static str, value: f64 },
    #[error("matrix is not relaxed cocoercive for c = {c}: certified d = {d} <= 0")]
    NotCocoercive { c: f64, d: f64 },
    #[error("step-size window is empty: d = {d} <= c L^2 = {bound}")]
    EmptyWindow { d: f64, bound: f64 },
    #[error("contraction constant must lie in (0, 1), got {0}")]
    BadContraction(f64),
    #[error("rotation plane ({0}, {1}) is invalid for dimension {2}")]
    BadPlane(usize, usize, usize),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub type VectorMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

#[derive(Clone)]
pub enum OperatorKind {
    /// `x -> M x + q`
    Affine { matrix: DMatrix<f64>, shift: Vector },
    /// An opaque map whose constants are declared by the caller.
    Custom { name: String, map: VectorMap },
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Affine { matrix, shift } => f
                .debug_struct("Affine")
                .field("matrix", matrix)
                .field("shift", shift)
                .finish(),
            OperatorKind::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

/// How the constants of an operator were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certification {
    /// Computed from the matrix by the eigenvalue rule.
    Derived,
    /// Supplied by the caller; only sampling can confirm them.
    Declared,
}

#[derive(Clone, Debug)]
pub struct CertifiedOperator {
    kind: OperatorKind,
    dim: usize,
    c: f64,
    d: f64,
    lipschitz: f64,
    certification: Certification,
}

fn positive(name: &'static str, value: f64) -> Result<f64, OperatorError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(OperatorError::NonPositiveConstant { name, value })
    }
}

fn check_window(c: f64, d: f64, lipschitz: f64) -> Result<(), OperatorError> {
    let bound = c * lipschitz * lipschitz;
    if d > bound {
        Ok(())
    } else {
        Err(OperatorError::EmptyWindow { d, bound })
    }
}

fn check_affine_shape(matrix: &DMatrix<f64>, shift: &Vector) -> Result<(), OperatorError> {
    if !matrix.is_square() {
        return Err(OperatorError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
    }
    if shift.dim() != matrix.nrows() {
        return Err(OperatorError::DimensionMismatch { expected: matrix.nrows(), found: shift.dim() });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(OperatorError::Space(SpaceError::InvalidSet("matrix has non-finite entries".into())));
    }
    Ok(())
}

/// Spectral norm `|M|_2`.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    matrix.singular_values().max()
}

/// `lambda_min(sym(M) + c M^T M)`, the largest `d` for which `x -> Mx + q`
/// is relaxed `(c, d)`-cocoercive.
pub fn tight_cocoercivity(matrix: &DMatrix<f64>, c: f64) -> f64 {
    let sym = (matrix + matrix.transpose()) * 0.5;
    let form = sym + matrix.transpose() * matrix * c;
    form.symmetric_eigenvalues().min()
}

/// Certifies `x -> Mx + q` with the tight constants for slack `c`.
pub fn certify_affine(
    matrix: DMatrix<f64>,
    shift: Vector,
    c: f64,
) -> Result<CertifiedOperator, OperatorError> {
    check_affine_shape(&matrix, &shift)?;
    let c = positive("c", c)?;
    let lipschitz = spectral_norm(&matrix);
    let d = tight_cocoercivity(&matrix, c);
    if d <= 0.0 {
        return Err(OperatorError::NotCocoercive { c, d });
    }
    positive("L", lipschitz)?;
    check_window(c, d, lipschitz)?;
    Ok(CertifiedOperator {
        dim: matrix.nrows(),
        kind: OperatorKind::Affine { matrix, shift },
        c,
        d,
        lipschitz,
        certification: Certification::Derived,
    })
}

impl CertifiedOperator {
    /// An operator with caller-supplied constants. Only positivity and
    /// `d > c L^2` are checked; run the sampled verifiers to audit the rest.
    pub fn declared(
        kind: OperatorKind,
        dim: usize,
        c: f64,
        d: f64,
        lipschitz: f64,
    ) -> Result<Self, OperatorError> {
        if let OperatorKind::Affine { matrix, shift } = &kind {
            check_affine_shape(matrix, shift)?;
            if matrix.nrows() != dim {
                return Err(OperatorError::DimensionMismatch { expected: dim, found: matrix.nrows() });
            }
        }
        let c = positive("c", c)?;
        let d = positive("d", d)?;
        let lipschitz = positive("L", lipschitz)?;
        check_window(c, d, lipschitz)?;
        Ok(CertifiedOperator { kind, dim, c, d, lipschitz, certification: Certification::Declared })
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        map: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        c: f64,
        d: f64,
        lipschitz: f64,
    ) -> Result<Self, OperatorError> {
        Self::declared(OperatorKind::Custom { name: name.into(), map: Arc::new(map) }, dim, c, d, lipschitz)
    }

    /// Replaces the certified constants with declared ones, keeping the map.
    pub fn with_declared_constants(
        self,
        d: Option<f64>,
        lipschitz: Option<f64>,
    ) -> Result<Self, OperatorError> {
        if d.is_none() && lipschitz.is_none() {
            return Ok(self);
        }
        let d = d.unwrap_or(self.d);
        let lipschitz = lipschitz.unwrap_or(self.lipschitz);
        Self::declared(self.kind, self.dim, self.c, d, lipschitz)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn certification(&self) -> Certification {
        self.certification
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, OperatorKind::Custom { .. })
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "operator dimension mismatch");
        match &self.kind {
            OperatorKind::Affine { matrix, shift } => {
                let y = matrix * DVector::from_column_slice(x.as_slice());
                Vector::new(y.iter().zip(shift.as_slice()).map(|(a, b)| a + b).collect())
                    .expect("affine image of a finite vector is finite")
            }
            OperatorKind::Custom { map, .. } => map(x),
        }
    }

    /// Upper end of the open step-size window, `(d - c L^2) / (K^2 L^2)`.
    pub fn step_window(&self, k_squared: f64) -> f64 {
        expansivity_constant(self) / (k_squared * self.lipschitz * self.lipschitz)
    }
}

/// `d - c L^2`, the expansivity constant implied by cocoercivity and the Lipschitz bound.
pub fn expansivity_constant(op: &CertifiedOperator) -> f64 {
    op.d - op.c * op.lipschitz * op.lipschitz
}

/// `x - lambda A(x)`
pub fn forward_step(op: &CertifiedOperator, lambda: f64, x: &Vector) -> Vector {
    if lambda == 0.0 {
        return x.clone();
    }
    x.add_scaled(-lambda, &op.apply(x))
}

/// Lipschitz factor of `I - lambda A`:
/// `sqrt(max(0, 1 + 2 (lambda c L^2 - lambda d + K^2 lambda^2 L^2)))`.
pub fn nonexpansive_factor(op: &CertifiedOperator, lambda: f64, k_squared: f64) -> f64 {
    let l2 = op.lipschitz * op.lipschitz;
    let inner = lambda * op.c * l2 - lambda * op.d + k_squared * lambda * lambda * l2;
    (1.0 + 2.0 * inner).max(0.0).sqrt()
}

/// A contraction `f` with constant `alpha in (0, 1)`.
#[derive(Clone)]
pub enum ContractionMap {
    /// `x -> anchor + alpha (x - anchor)`
    Toward { anchor: Vector, alpha: f64 },
    /// `x -> point`; any `alpha` in (0, 1) is a valid constant.
    Constant { point: Vector, alpha: f64 },
    Custom { name: String, map: VectorMap, alpha: f64 },
}

impl fmt::Debug for ContractionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractionMap::Toward { anchor, alpha } => {
                write!(f, "Toward {{ anchor: {anchor}, alpha: {alpha} }}")
            }
            ContractionMap::Constant { point, alpha } => {
                write!(f, "Constant {{ point: {point}, alpha: {alpha} }}")
            }
            ContractionMap::Custom { name, alpha, .. } => {
                write!(f, "Custom {{ name: {name:?}, alpha: {alpha} }}")
            }
        }
    }
}

impl ContractionMap {
    pub fn toward(anchor: Vector, alpha: f64) -> Result<Self, OperatorError> {
        Ok(ContractionMap::Toward { anchor, alpha: contraction_constant(alpha)? })
    }

    pub fn constant(point: Vector, alpha: f64) -> Result<Self, OperatorError> {
        Ok(ContractionMap::Constant { point, alpha: contraction_constant(alpha)? })
    }

    pub fn custom(
        name: impl Into<String>,
        map: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        alpha: f64,
    ) -> Result<Self, OperatorError> {
        Ok(ContractionMap::Custom { name: name.into(), map: Arc::new(map), alpha: contraction_constant(alpha)? })
    }

    pub fn alpha(&self) -> f64 {
        match self {
            ContractionMap::Toward { alpha, .. }
            | ContractionMap::Constant { alpha, .. }
            | ContractionMap::Custom { alpha, .. } => *alpha,
        }
    }

    /// Dimension fixed by the map's data, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ContractionMap::Toward { anchor, .. } => Some(anchor.dim()),
            ContractionMap::Constant { point, .. } => Some(point.dim()),
            ContractionMap::Custom { .. } => None,
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            ContractionMap::Toward { anchor, alpha } => anchor.add_scaled(*alpha, &(x - anchor)),
            ContractionMap::Constant { point, .. } => point.clone(),
            ContractionMap::Custom { map, .. } => map(x),
        }
    }
}

fn contraction_constant(alpha: f64) -> Result<f64, OperatorError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(OperatorError::BadContraction(alpha))
    }
}

/// A nonexpansive self-map `S` of the constraint set.
#[derive(Clone, Debug, PartialEq)]
pub enum NonexpansiveMap {
    Identity,
    /// Rotation by `angle` radians in coordinate plane `plane`, about `center`.
    FixedPointRotation { center: Vector, plane: (usize, usize), angle: f64 },
    ProjectionOnto(ConvexSet),
}

impl NonexpansiveMap {
    pub fn rotation(center: Vector, plane: (usize, usize), angle: f64) -> Result<Self, OperatorError> {
        let dim = center.dim();
        if plane.0 == plane.1 || plane.0 >= dim || plane.1 >= dim {
            return Err(OperatorError::BadPlane(plane.0, plane.1, dim));
        }
        if !angle.is_finite() {
            return Err(OperatorError::NonPositiveConstant { name: "angle", value: angle });
        }
        Ok(NonexpansiveMap::FixedPointRotation { center, plane, angle })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            NonexpansiveMap::Identity => None,
            NonexpansiveMap::FixedPointRotation { center, .. } => Some(center.dim()),
            NonexpansiveMap::ProjectionOnto(set) => Some(set.dim()),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector, SpaceError> {
        match self {
            NonexpansiveMap::Identity => Ok(x.clone()),
            NonexpansiveMap::FixedPointRotation { center, plane: (i, j), angle } => {
                x.check_dim(center.dim())?;
                let (sin, cos) = angle.sin_cos();
                let mut entries = x.clone().into_inner();
                let (u, v) = (x[*i] - center[*i], x[*j] - center[*j]);
                entries[*i] = center[*i] + cos * u - sin * v;
                entries[*j] = center[*j] + sin * u + cos * v;
                Vector::new(entries)
            }
            NonexpansiveMap::ProjectionOnto(set) => set.project(x),
        }
    }
}

/// Outcome of a sampled inequality check.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifierReport {
    pub samples: usize,
    /// Smallest observed slack; negative means the inequality was violated.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The pair attaining `worst_margin`, kept only on failure.
    pub witness: Option<(Vector, Vector)>,
}

impl VerifierReport {
    pub(crate) fn from_margins(
        samples: usize,
        worst_margin: f64,
        tolerance: f64,
        worst_pair: Option<(Vector, Vector)>,
    ) -> Self {
        let passed = worst_margin >= -tolerance;
        VerifierReport {
            samples,
            worst_margin,
            tolerance,
            passed,
            witness: if passed { None } else { worst_pair },
        }
    }
}

/// Deterministic sampler of points uniform in `[-10, 10]^dim`, optionally
/// projected into a constraint set.
pub struct PointSampler<'a> {
    rng: ChaCha8Rng,
    dim: usize,
    set: Option<&'a ConvexSet>,
}

impl<'a> PointSampler<'a> {
    pub fn new(dim: usize, seed: u64, set: Option<&'a ConvexSet>) -> Self {
        PointSampler { rng: ChaCha8Rng::seed_from_u64(seed), dim, set }
    }

    pub fn point(&mut self) -> Result<Vector, SpaceError> {
        let raw: Vec<f64> = (0..self.dim)
            .map(|_| self.rng.random_range(-SAMPLE_HALF_WIDTH..=SAMPLE_HALF_WIDTH))
            .collect();
        let raw = Vector::new(raw)?;
        match self.set {
            Some(set) => set.project(&raw),
            None => Ok(raw),
        }
    }

    pub fn pair(&mut self) -> Result<(Vector, Vector), SpaceError> {
        Ok((self.point()?, self.point()?))
    }
}

/// Runs `margin` over `n` sampled pairs and reports the worst one.
pub fn check_pairs(
    dim: usize,
    n_samples: usize,
    seed: u64,
    set: Option<&ConvexSet>,
    tolerance: f64,
    mut margin: impl FnMut(&Vector, &Vector) -> Result<f64, SpaceError>,
) -> Result<VerifierReport, SpaceError> {
    let mut sampler = PointSampler::new(dim, seed, set);
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    for _ in 0..n_samples {
        let (x, y) = sampler.pair()?;
        let m = margin(&x, &y)?;
        if m < worst || worst_pair.is_none() {
            worst = m;
            worst_pair = Some((x, y));
        }
    }
    Ok(VerifierReport::from_margins(n_samples, worst, tolerance, worst_pair))
}

/// Samples the relaxed cocoercivity inequality. The margin
/// `<Ax-Ay, x-y> + c|Ax-Ay|^2 - d|x-y|^2` is normalized by `1 + |x-y|^2`.
pub fn check_cocoercive(op: &CertifiedOperator, n_samples: usize, seed: u64) -> VerifierReport {
    check_pairs(op.dim, n_samples, seed, None, VERIFY_TOL, |x, y| {
        let diff = x - y;
        let image = &op.apply(x) - &op.apply(y);
        let margin = image.dot(&diff) + op.c * image.norm_squared() - op.d * diff.norm_squared();
        Ok(margin / (1.0 + diff.norm_squared()))
    })
    .expect("unconstrained sampling cannot fail")
}

/// Samples `|Ax - Ay| >= (d - cL^2) |x - y|`.
pub fn check_expansive(op: &CertifiedOperator, n_samples: usize, seed: u64) -> VerifierReport {
    let alpha = expansivity_constant(op);
    check_pairs(op.dim, n_samples, seed, None, VERIFY_TOL, |x, y| {
        Ok((&op.apply(x) - &op.apply(y)).norm() - alpha * x.distance(y))
    })
    .expect("unconstrained sampling cannot fail")
}

/// Samples `|Ax - Ay| <= L |x - y|`.
pub fn check_lipschitz(op: &CertifiedOperator, n_samples: usize, seed: u64) -> VerifierReport {
    check_pairs(op.dim, n_samples, seed, None, VERIFY_TOL, |x, y| {
        Ok(op.lipschitz * x.distance(y) - (&op.apply(x) - &op.apply(y)).norm())
    })
    .expect("unconstrained sampling cannot fail")
}

/// Samples `|(I - lambda A)x - (I - lambda A)y| <= factor |x - y|`.
pub fn check_forward_step_factor(
    op: &CertifiedOperator,
    lambda: f64,
    k_squared: f64,
    n_samples: usize,
    seed: u64,
) -> VerifierReport {
    let factor = nonexpansive_factor(op, lambda, k_squared);
    check_pairs(op.dim, n_samples, seed, None, VERIFY_TOL, |x, y| {
        let lhs = forward_step(op, lambda, x).distance(&forward_step(op, lambda, y));
        Ok(factor * x.distance(y) - lhs)
    })
    .expect("unconstrained sampling cannot fail")
}

/// Samples `|f(x) - f(y)| <= alpha |x - y|` over pairs in `set`.
pub fn check_contraction(
    f: &ContractionMap,
    set: &ConvexSet,
    n_samples: usize,
    seed: u64,
) -> Result<VerifierReport, SpaceError> {
    let alpha = f.alpha();
    check_pairs(set.dim(), n_samples, seed, Some(set), VERIFY_TOL, |x, y| {
        Ok(alpha * x.distance(y) - f.apply(x).distance(&f.apply(y)))
    })
}

/// Samples `|S(x) - S(y)| <= |x - y|` over pairs in `set`.
pub fn check_nonexpansive(
    s: &NonexpansiveMap,
    set: &ConvexSet,
    n_samples: usize,
    seed: u64,
) -> Result<VerifierReport, SpaceError> {
    check_pairs(set.dim(), n_samples, seed, Some(set), VERIFY_TOL, |x, y| {
        Ok(x.distance(y) - s.apply(x)?.distance(&s.apply(y)?))
    })
}

/// A randomly drawn affine operator that passes certification, reproducible from `seed`.
///
/// `M = diag(u) + 0.4 G / sqrt(dim)` with `u ~ U[1, 3]`, `G_ij ~ U[-1, 1]`,
/// shift `q ~ U[-1, 1]^dim` and slack `c ~ U[0.01, 0.05]`; draws that fail
/// certification are discarded.
pub fn random_certified_affine(dim: usize, seed: u64) -> CertifiedOperator {
    assert!(dim > 0, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.4 / (dim as f64).sqrt();
    loop {
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let noise = scale * rng.random_range(-1.0..=1.0);
            if i == j {
                noise + rng.random_range(1.0..=3.0)
            } else {
                noise
            }
        });
        let shift = Vector::new((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .expect("finite draw");
        let c = rng.random_range(0.01..=0.05);
        if let Ok(op) = certify_affine(matrix, shift, c) {
            return op;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    fn diag(entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(entries))
    }

    fn identity_1d(c: f64, d: f64) -> CertifiedOperator {
        certify_affine(diag(&[1.0]), v(&[0.0]), c)
            .unwrap()
            .with_declared_constants(Some(d), None)
            .unwrap()
    }

    #[test]
    fn certify_diagonal() {
        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        assert!((op.lipschitz() - 3.0).abs() < 1e-14);
        // min(2 + 0.05*4, 3 + 0.05*9)
        assert!((op.d() - 2.2).abs() < 1e-14);
        assert_eq!(op.certification(), Certification::Derived);
    }

    #[test]
    fn certify_scalar_identity() {
        let op = certify_affine(diag(&[1.0]), v(&[0.0]), 0.1).unwrap();
        assert!((op.lipschitz() - 1.0).abs() < 1e-15);
        assert!((op.d() - 1.1).abs() < 1e-15);
        // Any declared d <= 1.1 is still a valid certificate.
        let capped = op.with_declared_constants(Some(1.0), None).unwrap();
        assert_eq!(capped.d(), 1.0);
        assert!(check_cocoercive(&capped, 1000, 3).passed);
    }

    #[test]
    fn certify_rejects_indefinite_matrix() {
        let err = certify_affine(diag(&[1.0, -1.0]), v(&[0.0, 0.0]), 0.05).unwrap_err();
        assert!(matches!(err, OperatorError::NotCocoercive { .. }), "{err}");
    }

    #[test]
    fn certify_rejects_empty_window() {
        // d = 1 + c, L = 1: d > cL^2 always for the identity, so use a large c on diag(1, 10).
        // d = min(1 + c, 10 + 100c), cL^2 = 100c, so c = 0.5 gives 1.5 <= 50.
        let err = certify_affine(diag(&[1.0, 10.0]), v(&[0.0, 0.0]), 0.5).unwrap_err();
        assert!(matches!(err, OperatorError::EmptyWindow { .. }), "{err}");
    }

    #[test]
    fn certify_rejects_bad_shapes() {
        let rect = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(matches!(certify_affine(rect, v(&[0.0]), 0.1), Err(OperatorError::NotSquare { .. })));
        assert!(matches!(
            certify_affine(diag(&[1.0, 1.0]), v(&[0.0]), 0.1),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            certify_affine(diag(&[1.0]), v(&[0.0]), 0.0),
            Err(OperatorError::NonPositiveConstant { name: "c", .. })
        ));
    }

    #[test]
    fn declared_constants_must_leave_a_window() {
        let op = certify_affine(diag(&[1.0]), v(&[0.0]), 0.1).unwrap();
        // d = cL^2 exactly is rejected.
        let err = op.with_declared_constants(Some(0.1), None).unwrap_err();
        assert!(matches!(err, OperatorError::EmptyWindow { .. }));
    }

    #[test]
    fn tight_cocoercivity_matches_sphere_minimization() {
        // Oracle: minimize <Mw, w> + c|Mw|^2 over a fine grid of the unit circle / sphere.
        let cases = [
            (DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 3.0]), 0.05),
            (DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.5]), 0.02),
            (DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, -0.2, 1.5, 0.4, 0.1, 0.0, 2.5]), 0.03),
        ];
        for (m, c) in cases {
            let n = m.nrows();
            let margin = |w: &[f64]| {
                let w = DVector::from_column_slice(w);
                let mw = &m * &w;
                mw.dot(&w) + c * mw.dot(&mw)
            };
            let mut best = f64::INFINITY;
            if n == 2 {
                for k in 0..200_000 {
                    let t = k as f64 / 200_000.0 * std::f64::consts::TAU;
                    best = best.min(margin(&[t.cos(), t.sin()]));
                }
            } else {
                let steps = 1500;
                for a in 0..=steps {
                    let theta = a as f64 / steps as f64 * std::f64::consts::PI;
                    for b in 0..(2 * steps) {
                        let phi = b as f64 / steps as f64 * std::f64::consts::PI;
                        best = best.min(margin(&[
                            theta.sin() * phi.cos(),
                            theta.sin() * phi.sin(),
                            theta.cos(),
                        ]));
                    }
                }
            }
            let d = tight_cocoercivity(&m, c);
            assert!(d <= best + 1e-12, "eigen d {d} exceeds sampled minimum {best}");
            assert!(best - d < 1e-5, "eigen d {d} far below sampled minimum {best}");
        }
    }

    #[test]
    fn expansivity_constant_examples() {
        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        assert!((expansivity_constant(&op) - 1.75).abs() < 1e-14);
        let op = identity_1d(0.1, 1.0);
        assert!((expansivity_constant(&op) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn forward_step_examples() {
        let op = identity_1d(0.1, 1.0);
        assert_eq!(forward_step(&op, 0.5, &v(&[1.0])), v(&[0.5]));
        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        let out = forward_step(&op, 0.2, &v(&[1.0, 1.0]));
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.4).abs() < 1e-15, "{out}");
        assert_eq!(forward_step(&op, 0.0, &v(&[7.0, -2.0])), v(&[7.0, -2.0]));
    }

    #[test]
    fn nonexpansive_factor_examples() {
        let op = CertifiedOperator::declared(
            OperatorKind::Affine { matrix: diag(&[2.0, 3.0]), shift: v(&[0.0, 0.0]) },
            2,
            0.05,
            2.2,
            3.0,
        )
        .unwrap();
        let expected = (1.0f64 + 2.0 * (0.09 - 0.44 + 0.18)).sqrt();
        assert!((expected - 0.66f64.sqrt()).abs() < 1e-15);
        assert!((nonexpansive_factor(&op, 0.2, 0.5) - expected).abs() < 1e-14);
        assert!((nonexpansive_factor(&op, 0.2, 0.5) - 0.8124).abs() < 1e-4);

        let op = identity_1d(0.1, 1.0);
        assert!((nonexpansive_factor(&op, 0.5, 0.5) - 0.35f64.sqrt()).abs() < 1e-15);
        assert!((nonexpansive_factor(&op, 0.5, 0.5) - 0.5916).abs() < 1e-4);

        let edge = op.step_window(0.5);
        assert!((edge - 1.8).abs() < 1e-15);
        assert!((nonexpansive_factor(&op, edge, 0.5) - 1.0).abs() < 1e-12);
        assert!(nonexpansive_factor(&op, 0.999 * edge, 0.5) < 1.0);
    }

    #[test]
    fn nonexpansive_factor_is_clamped_at_zero() {
        // Inflated d drives 1 + 2(...) negative; the factor stays real.
        let op = identity_1d(0.01, 5.0);
        assert_eq!(nonexpansive_factor(&op, 1.0, 0.5), 0.0);
    }

    #[test]
    fn cocoercive_verifier_examples() {
        let op = identity_1d(0.1, 1.0);
        assert!(check_cocoercive(&op, 2000, 0).passed);

        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        let report = check_cocoercive(&op, 10_000, 1);
        assert!(report.passed && report.witness.is_none(), "{report:?}");

        let forged = op.with_declared_constants(Some(5.0), None).unwrap();
        let report = check_cocoercive(&forged, 1000, 1);
        assert!(!report.passed);
        let (x, y) = report.witness.expect("failure carries a witness");
        let w = &x - &y;
        // margin = (2.2 - 5) w1^2 + (3.45 - 5) w2^2 recomputed by hand
        let margin = (2.2 - 5.0) * w[0] * w[0] + (3.45 - 5.0) * w[1] * w[1];
        assert!(margin < 0.0);
        assert!((report.worst_margin - margin / (1.0 + w.norm_squared())).abs() < 1e-9);
    }

    #[test]
    fn expansive_verifier_examples() {
        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        let report = check_expansive(&op, 10_000, 2);
        assert!(report.passed);
        assert!(check_expansive(&identity_1d(0.1, 1.0), 1000, 2).passed);

        // x = y: both sides vanish.
        let x = v(&[1.5, -2.0]);
        let lhs = (&op.apply(&x) - &op.apply(&x)).norm();
        assert_eq!(lhs, expansivity_constant(&op) * x.distance(&x));
    }

    #[test]
    fn lipschitz_verifier_examples() {
        let op = certify_affine(diag(&[2.0, 3.0]), v(&[0.0, 0.0]), 0.05).unwrap();
        assert!(check_lipschitz(&op, 10_000, 4).passed);

        let constant = CertifiedOperator::custom("zero", 2, |x| Vector::zeros(x.dim()), 1.0, 0.5, 0.1).unwrap();
        assert!(check_lipschitz(&constant, 1000, 4).passed);

        let forged = op.with_declared_constants(None, Some(2.5)).unwrap();
        let report = check_lipschitz(&forged, 1000, 4);
        assert!(!report.passed);
        let (x, y) = report.witness.unwrap();
        let w = &x - &y;
        // ratio^2 = (4 w1^2 + 9 w2^2) / |w|^2 > 6.25 forces |w2| > 0.9 |w1|
        assert!(w[1].abs() > 0.9 * w[0].abs(), "witness {w}");
    }

    #[test]
    fn contraction_and_rotation_maps() {
        let f = ContractionMap::toward(v(&[1.0, 1.0]), 0.5).unwrap();
        assert_eq!(f.apply(&v(&[3.0, -1.0])), v(&[2.0, 0.0]));
        assert!(ContractionMap::toward(v(&[0.0]), 1.0).is_err());
        assert!(ContractionMap::constant(v(&[0.0]), 0.0).is_err());

        let s = NonexpansiveMap::rotation(v(&[1.0, 0.0]), (0, 1), std::f64::consts::FRAC_PI_2).unwrap();
        let out = s.apply(&v(&[2.0, 0.0])).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-15 && (out[1] - 1.0).abs() < 1e-15, "{out}");
        assert_eq!(s.apply(&v(&[1.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        assert!(NonexpansiveMap::rotation(v(&[0.0, 0.0]), (1, 1), 0.3).is_err());
        assert!(NonexpansiveMap::rotation(v(&[0.0, 0.0]), (0, 2), 0.3).is_err());

        let ball = ConvexSet::ball(v(&[1.0, 0.0]), 2.0).unwrap();
        assert!(check_nonexpansive(&s, &ball, 1000, 0).unwrap().passed);
        assert!(check_contraction(&f, &ball, 1000, 0).unwrap().passed);
    }

    #[test]
    fn random_operators_are_reproducible() {
        let a = random_certified_affine(3, 11);
        let b = random_certified_affine(3, 11);
        assert_eq!(a.d(), b.d());
        assert_eq!(a.lipschitz(), b.lipschitz());
        assert!(expansivity_constant(&a) > 0.0);
    }
}
