//! Finite-dimensional real Hilbert space primitives.
//!
//! Points are [`Vector`]s of finite `f64` entries. The duality map is the
//! identity and the retraction onto a closed convex set is the metric
//! projection, computed in closed form for boxes, balls and halfspaces and
//! by Dykstra's cyclic projection scheme for intersections.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Decimal;

/// Absolute tolerance used by membership tests and projection convergence.
pub const ABS_TOL: f64 = 1e-12;

/// Convergence tolerance of the cyclic projection onto an intersection.
pub const INTERSECTION_TOL: f64 = 1e-12;

/// Sweep cap of the cyclic projection onto an intersection.
pub const INTERSECTION_MAX_SWEEPS: usize = 100_000;

/// A converged intersection iterate must lie within this distance of every member set.
const INTERSECTION_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vectors must have at least one entry")]
    Empty,
    #[error("entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid convex set: {0}")]
    InvalidSet(String),
    #[error("intersection is empty or cyclic projection did not converge after {sweeps} sweeps (distance to members {gap:e})")]
    Infeasible { sweeps: usize, gap: f64 },
}

/// A point of the ambient space `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Decimal>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SpaceError> {
        if entries.is_empty() {
            return Err(SpaceError::Empty);
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SpaceError::NonFinite { index, value });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Vector(vec![0.0; dim])
    }

    /// The `index`-th standard basis vector.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Inner product without the dimension check; callers guarantee matching dims.
    pub(crate) fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_dim(&self, expected: usize) -> Result<(), SpaceError> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(SpaceError::DimensionMismatch { expected, found: self.dim() })
        }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl TryFrom<Vec<Decimal>> for Vector {
    type Error = SpaceError;

    fn try_from(entries: Vec<Decimal>) -> Result<Self, Self::Error> {
        Vector::new(entries.into_iter().map(f64::from).collect())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = SpaceError;

    fn try_from(entries: Vec<f64>) -> Result<Self, Self::Error> {
        Vector::new(entries)
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Vector {
    type Output = Vector;

    fn sub(self, rhs: &Vector) -> Vector {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;

    fn mul(self, rhs: &Vector) -> Vector {
        rhs.map(|v| self * v)
    }
}

/// Smoothness data of the ambient space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceParams {
    dim: usize,
    k_squared: f64,
}

impl SpaceParams {
    /// Real Hilbert space of dimension `dim`, where `K = 1/sqrt(2)`.
    pub fn hilbert(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        SpaceParams { dim, k_squared: 0.5 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The 2-uniform smoothness constant `K`.
    pub fn k(&self) -> f64 {
        self.k_squared.sqrt()
    }

    /// `K^2`, kept exact (`0.5`) so step-size windows print cleanly.
    pub fn k_squared(&self) -> f64 {
        self.k_squared
    }
}

/// Inner product `sum_i x_i y_i`.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64, SpaceError> {
    y.check_dim(x.dim())?;
    Ok(x.dot(y))
}

/// Normalized duality map. Single-valued and equal to the identity in a Hilbert space.
pub fn duality_map(x: &Vector) -> Vector {
    x.clone()
}

/// A nonempty closed convex subset of `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "ConvexSetRepr")]
pub enum ConvexSet {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    /// `{x : <normal, x> <= offset}`
    Halfspace { normal: Vector, offset: f64 },
    Intersection { sets: Vec<ConvexSet> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ConvexSetRepr {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: Decimal },
    Halfspace { normal: Vector, offset: Decimal },
    Intersection { sets: Vec<ConvexSet> },
}

impl TryFrom<ConvexSetRepr> for ConvexSet {
    type Error = SpaceError;

    fn try_from(repr: ConvexSetRepr) -> Result<Self, Self::Error> {
        match repr {
            ConvexSetRepr::Box { lower, upper } => ConvexSet::new_box(lower, upper),
            ConvexSetRepr::Ball { center, radius } => ConvexSet::ball(center, radius.into()),
            ConvexSetRepr::Halfspace { normal, offset } => {
                ConvexSet::halfspace(normal, offset.into())
            }
            ConvexSetRepr::Intersection { sets } => ConvexSet::intersection(sets),
        }
    }
}

impl ConvexSet {
    pub fn new_box(lower: Vector, upper: Vector) -> Result<Self, SpaceError> {
        upper.check_dim(lower.dim())?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(SpaceError::InvalidSet(format!(
                "box lower bound exceeds upper bound in coordinate {i} ({} > {})",
                lower[i], upper[i]
            )));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, SpaceError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(SpaceError::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self, SpaceError> {
        if normal.norm_squared() == 0.0 {
            return Err(SpaceError::InvalidSet("halfspace normal must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(SpaceError::InvalidSet(format!("halfspace offset must be finite, got {offset}")));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn intersection(sets: Vec<ConvexSet>) -> Result<Self, SpaceError> {
        let Some(first) = sets.first() else {
            return Err(SpaceError::InvalidSet("intersection of zero sets".into()));
        };
        let dim = first.dim();
        for s in &sets[1..] {
            if s.dim() != dim {
                return Err(SpaceError::DimensionMismatch { expected: dim, found: s.dim() });
            }
        }
        Ok(ConvexSet::Intersection { sets })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { normal, .. } => normal.dim(),
            ConvexSet::Intersection { sets } => sets[0].dim(),
        }
    }

    /// Metric projection `P_C(x)`.
    pub fn project(&self, x: &Vector) -> Result<Vector, SpaceError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::Box { lower, upper } => Vector(
                x.0.iter()
                    .zip(lower.0.iter().zip(&upper.0))
                    .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
                    .collect(),
            ),
            ConvexSet::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.add_scaled(radius / dist, &offset)
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.add_scaled(-excess / normal.norm_squared(), normal)
                }
            }
            ConvexSet::Intersection { sets } => dykstra(sets, x)?,
        })
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &Vector) -> Result<f64, SpaceError> {
        Ok(self.project(x)?.distance(x))
    }

    /// Membership up to `tol`, evaluated without projecting onto intersections.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool, SpaceError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::Box { lower, upper } => {
                (0..x.dim()).all(|i| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)
            }
            ConvexSet::Ball { center, radius } => x.distance(center) <= radius + tol,
            ConvexSet::Halfspace { normal, offset } => {
                (normal.dot(x) - offset) / normal.norm() <= tol
            }
            ConvexSet::Intersection { sets } => {
                for s in sets {
                    if !s.contains(x, tol)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    /// A point that is guaranteed to be in the set (the projection of the origin).
    pub fn anchor_point(&self) -> Result<Vector, SpaceError> {
        self.project(&Vector::zeros(self.dim()))
    }
}

/// Dykstra's cyclic projection. Plain alternating projection only finds some
/// point of the intersection; the correction terms make the limit the metric
/// projection of `x`.
fn dykstra(sets: &[ConvexSet], x: &Vector) -> Result<Vector, SpaceError> {
    let mut current = x.clone();
    let mut corrections = vec![Vector::zeros(x.dim()); sets.len()];
    let mut gap = f64::INFINITY;
    for sweep in 1..=INTERSECTION_MAX_SWEEPS {
        let start = current.clone();
        let mut correction_change: f64 = 0.0;
        for (set, correction) in sets.iter().zip(corrections.iter_mut()) {
            let shifted = &current + correction;
            let projected = set.project(&shifted)?;
            let updated = &shifted - &projected;
            correction_change = correction_change.max(updated.distance(correction));
            *correction = updated;
            current = projected;
        }
        // The iterate can stall for a sweep while the corrections still move.
        if current.distance(&start) <= INTERSECTION_TOL && correction_change <= INTERSECTION_TOL {
            gap = sets
                .iter()
                .map(|s| s.distance(&current))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            if gap <= INTERSECTION_FEASIBILITY_TOL {
                return Ok(current);
            }
            // Converged iterates that miss a member set mean the sets do not meet.
            return Err(SpaceError::Infeasible { sweeps: sweep, gap });
        }
    }
    Err(SpaceError::Infeasible { sweeps: INTERSECTION_MAX_SWEEPS, gap })
}
