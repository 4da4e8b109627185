//! JSON run configuration.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "problem": {
//!     "set": {"type": "box", "lower": [-1], "upper": [1]},
//!     "operators": [
//!       {"matrix": [1], "c": "0.1", "d": "1.0"},
//!       {"matrix": [1], "c": "0.1", "d": "1.0"},
//!       {"matrix": [1], "c": "0.1", "d": "1.0"}
//!     ],
//!     "lambdas": [0.5, 0.5, 0.5],
//!     "contraction": {"type": "toward", "anchor": [0], "alpha": 0.5},
//!     "nonexpansive": {"type": "identity"},
//!     "schedule_a": {"type": "harmonic", "shift": 2},
//!     "schedule_b": {"type": "constant", "value": "0.3333333333333333"}
//!   },
//!   "x1": [1],
//!   "tol": 1e-8,
//!   "max_iter": 100000
//! }
//! ```
//!
//! Operators are listed `A1, A2, A3`; matrices are row-major. `d` and
//! `lipschitz` override the constants certified from the matrix.

mod decimal;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decimal::Decimal;

use crate::operators::{certify_affine, CertifiedOperator, ContractionMap, NonexpansiveMap, OperatorError};
use crate::solver::{ProblemSpec, ScheduleSpec};
use crate::space::{ConvexSet, SpaceParams, Vector};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub problem: ProblemConfig,
    pub x1: Vector,
    pub tol: Decimal,
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Known solution; when absent the oracle fixed point is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_p: Option<Vector>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub set: ConvexSet,
    pub operators: [OperatorConfig; 3],
    pub lambdas: [Decimal; 3],
    pub contraction: ContractionConfig,
    pub nonexpansive: NonexpansiveConfig,
    pub schedule_a: ScheduleConfig,
    pub schedule_b: ScheduleConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// Row-major `dimension x dimension` entries.
    pub matrix: Vec<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vector>,
    pub c: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<Decimal>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionConfig {
    Toward { anchor: Vector, alpha: Decimal },
    Constant { point: Vector, alpha: Decimal },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonexpansiveConfig {
    Identity,
    Rotation { center: Vector, plane: (usize, usize), angle: Decimal },
    Projection { set: ConvexSet },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Harmonic { shift: u32 },
    Constant { value: Decimal },
    PowerLaw { exponent: Decimal },
}

impl From<ScheduleConfig> for ScheduleSpec {
    fn from(s: ScheduleConfig) -> Self {
        match s {
            ScheduleConfig::Harmonic { shift } => ScheduleSpec::Harmonic { shift },
            ScheduleConfig::Constant { value } => ScheduleSpec::Constant { value: value.into() },
            ScheduleConfig::PowerLaw { exponent } => ScheduleSpec::PowerLaw { exponent: exponent.into() },
        }
    }
}

impl OperatorConfig {
    pub fn build(&self, dim: usize, field: &str) -> Result<CertifiedOperator, ConfigError> {
        if self.matrix.len() != dim * dim {
            return Err(ConfigError::invalid(
                format!("{field}.matrix"),
                format!("has {} entries, expected {} (row-major {dim}x{dim})", self.matrix.len(), dim * dim),
            ));
        }
        let entries: Vec<f64> = self.matrix.iter().map(|&d| d.into()).collect();
        let matrix = DMatrix::from_row_slice(dim, dim, &entries);
        let shift = self.shift.clone().unwrap_or_else(|| Vector::zeros(dim));
        let wrap = |e: OperatorError| ConfigError::invalid(field, e);
        certify_affine(matrix, shift, self.c.into())
            .map_err(wrap)?
            .with_declared_constants(self.d.map(f64::from), self.lipschitz.map(f64::from))
            .map_err(wrap)
    }
}

impl ProblemConfig {
    pub fn build(&self, dim: usize) -> Result<ProblemSpec, ConfigError> {
        if dim == 0 {
            return Err(ConfigError::invalid("dimension", "must be positive"));
        }
        let [o1, o2, o3] = &self.operators;
        let operators = [
            o1.build(dim, "problem.operators[0]")?,
            o2.build(dim, "problem.operators[1]")?,
            o3.build(dim, "problem.operators[2]")?,
        ];
        let contraction = match &self.contraction {
            ContractionConfig::Toward { anchor, alpha } => ContractionMap::toward(anchor.clone(), (*alpha).into()),
            ContractionConfig::Constant { point, alpha } => ContractionMap::constant(point.clone(), (*alpha).into()),
        }
        .map_err(|e| ConfigError::invalid("problem.contraction", e))?;
        let nonexpansive = match &self.nonexpansive {
            NonexpansiveConfig::Identity => Ok(NonexpansiveMap::Identity),
            NonexpansiveConfig::Rotation { center, plane, angle } => {
                NonexpansiveMap::rotation(center.clone(), *plane, (*angle).into())
            }
            NonexpansiveConfig::Projection { set } => Ok(NonexpansiveMap::ProjectionOnto(set.clone())),
        }
        .map_err(|e| ConfigError::invalid("problem.nonexpansive", e))?;
        Ok(ProblemSpec {
            set: self.set.clone(),
            operators,
            lambdas: self.lambdas.map(f64::from),
            contraction,
            nonexpansive,
            schedule_a: self.schedule_a.into(),
            schedule_b: self.schedule_b.into(),
            space: SpaceParams::hilbert(dim),
        })
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.check_shape()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    fn check_shape(&self) -> Result<(), ConfigError> {
        let dim = self.dimension;
        if dim == 0 {
            return Err(ConfigError::invalid("dimension", "must be positive"));
        }
        if self.x1.dim() != dim {
            return Err(ConfigError::invalid("x1", format!("has dimension {}, expected {dim}", self.x1.dim())));
        }
        if let Some(p) = &self.reference_p {
            if p.dim() != dim {
                return Err(ConfigError::invalid("reference_p", format!("has dimension {}, expected {dim}", p.dim())));
            }
        }
        let tol = f64::from(self.tol);
        if !(tol > 0.0) {
            return Err(ConfigError::invalid("tol", format!("must be positive, got {tol}")));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<ProblemSpec, ConfigError> {
        self.problem.build(self.dimension)
    }

    pub fn tol(&self) -> f64 {
        self.tol.into()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
