//! Python bindings: `import visolve`.
//!
//! Vectors cross the boundary as lists of floats; problems are built from the
//! same JSON configuration the CLI reads. Errors surface as `ValueError`.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::visolve::cli::{self, SweepParam};
use ::visolve::config::RunConfig;
use ::visolve::operators::{self, CertifiedOperator, VerifierReport};
use ::visolve::oracle;
use ::visolve::solver::{self, StopRule, Termination, ValidatedSpec};
use ::visolve::space::{self, ConvexSet, Vector};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(entries: Vec<f64>) -> PyResult<Vector> {
    Vector::new(entries).map_err(value_err)
}

fn report_dict<'py>(py: Python<'py>, report: &VerifierReport) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("samples", report.samples)?;
    dict.set_item("worst_margin", report.worst_margin)?;
    dict.set_item("passed", report.passed)?;
    match &report.witness {
        Some((x, y)) => dict.set_item("witness", (x.as_slice().to_vec(), y.as_slice().to_vec()))?,
        None => dict.set_item("witness", py.None())?,
    }
    Ok(dict)
}

#[pyfunction]
fn inner(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    space::inner(&vector(x)?, &vector(y)?).map_err(value_err)
}

#[pyfunction]
fn duality_map(x: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(space::duality_map(&vector(x)?).into_inner())
}

#[pyclass(name = "ConvexSet", frozen, from_py_object)]
#[derive(Clone)]
struct PyConvexSet {
    inner: ConvexSet,
}

#[pymethods]
impl PyConvexSet {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        let inner = ConvexSet::new_box(vector(lower)?, vector(upper)?).map_err(value_err)?;
        Ok(PyConvexSet { inner })
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Ok(PyConvexSet { inner: ConvexSet::ball(vector(center)?, radius).map_err(value_err)? })
    }

    /// `{x : <normal, x> <= offset}`
    #[staticmethod]
    fn halfspace(normal: Vec<f64>, offset: f64) -> PyResult<Self> {
        Ok(PyConvexSet { inner: ConvexSet::halfspace(vector(normal)?, offset).map_err(value_err)? })
    }

    #[staticmethod]
    fn intersection(sets: Vec<PyConvexSet>) -> PyResult<Self> {
        let sets = sets.into_iter().map(|s| s.inner).collect();
        Ok(PyConvexSet { inner: ConvexSet::intersection(sets).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyConvexSet { inner: serde_json::from_str(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("set serializes")
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.project(&vector(x)?).map_err(value_err)?.into_inner())
    }

    fn distance(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.distance(&vector(x)?).map_err(value_err)
    }

    #[pyo3(signature = (x, tol = space::ABS_TOL))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.inner.contains(&vector(x)?, tol).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("ConvexSet({})", self.to_json())
    }
}

/// An affine operator `x -> M x + q` with certified constants `(c, d, L)`.
#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    inner: CertifiedOperator,
}

#[pymethods]
impl PyOperator {
    /// Certifies `M x + q` for slack `c`; `d` and `lipschitz` override the
    /// certified constants without checking them.
    #[staticmethod]
    #[pyo3(signature = (matrix, c, shift = None, d = None, lipschitz = None))]
    fn affine(
        matrix: Vec<Vec<f64>>,
        c: f64,
        shift: Option<Vec<f64>>,
        d: Option<f64>,
        lipschitz: Option<f64>,
    ) -> PyResult<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("matrix must be a non-empty list of equal-length rows"));
        }
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        let m = DMatrix::from_row_slice(rows, cols, &flat);
        let shift = match shift {
            Some(s) => vector(s)?,
            None => Vector::zeros(rows),
        };
        let inner = operators::certify_affine(m, shift, c)
            .and_then(|op| op.with_declared_constants(d, lipschitz))
            .map_err(value_err)?;
        Ok(PyOperator { inner })
    }

    #[staticmethod]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        if dim == 0 {
            return Err(PyValueError::new_err("dimension must be positive"));
        }
        Ok(PyOperator { inner: operators::random_certified_affine(dim, seed) })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = vector(x)?;
        x.check_dim(self.inner.dim()).map_err(value_err)?;
        Ok(self.inner.apply(&x).into_inner())
    }

    fn expansivity_constant(&self) -> f64 {
        operators::expansivity_constant(&self.inner)
    }

    #[pyo3(signature = (k_squared = 0.5))]
    fn step_window(&self, k_squared: f64) -> f64 {
        self.inner.step_window(k_squared)
    }

    fn forward_step(&self, lam: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = vector(x)?;
        x.check_dim(self.inner.dim()).map_err(value_err)?;
        Ok(operators::forward_step(&self.inner, lam, &x).into_inner())
    }

    #[pyo3(signature = (lam, k_squared = 0.5))]
    fn nonexpansive_factor(&self, lam: f64, k_squared: f64) -> f64 {
        operators::nonexpansive_factor(&self.inner, lam, k_squared)
    }

    #[pyo3(signature = (n_samples = 10_000, seed = 0))]
    fn check_cocoercive<'py>(&self, py: Python<'py>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &operators::check_cocoercive(&self.inner, n_samples.max(1), seed))
    }

    #[pyo3(signature = (n_samples = 10_000, seed = 0))]
    fn check_lipschitz<'py>(&self, py: Python<'py>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &operators::check_lipschitz(&self.inner, n_samples.max(1), seed))
    }

    #[pyo3(signature = (n_samples = 10_000, seed = 0))]
    fn check_expansive<'py>(&self, py: Python<'py>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &operators::check_expansive(&self.inner, n_samples.max(1), seed))
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: solver::Trace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    #[getter]
    fn terminated_by(&self) -> &'static str {
        match self.inner.terminated_by {
            Termination::Tolerance => "tolerance",
            Termination::MaxIter => "max_iter",
        }
    }

    #[getter]
    fn final_point(&self) -> Vec<f64> {
        self.inner.final_point.as_slice().to_vec()
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("x", r.x.as_slice().to_vec())?;
                d.set_item("z", r.z.as_slice().to_vec())?;
                d.set_item("y", r.y.as_slice().to_vec())?;
                d.set_item("t", r.t.as_slice().to_vec())?;
                d.set_item("a_n", r.a)?;
                d.set_item("b_n", r.b)?;
                d.set_item("step_norm", r.step_norm)?;
                d.set_item("dist_to_p", r.dist_to_p)?;
                d.set_item("A3_gap", r.a3_gap)?;
                Ok(d)
            })
            .collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }
}

/// A validated problem built from a JSON run configuration.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    config: RunConfig,
    spec: ValidatedSpec,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let config = RunConfig::from_json_str(text, "<string>").map_err(value_err)?;
        let spec = ValidatedSpec::new(config.build_problem().map_err(value_err)?).map_err(value_err)?;
        Ok(PyProblem { config, spec })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(value_err)?;
        Self::from_json(&text)
    }

    /// Hypothesis violations of a configuration, empty when it is valid.
    #[staticmethod]
    fn violations(text: &str) -> PyResult<Vec<String>> {
        let config = RunConfig::from_json_str(text, "<string>").map_err(value_err)?;
        let spec = config.build_problem().map_err(value_err)?;
        Ok(match solver::validate(&spec) {
            Ok(()) => Vec::new(),
            Err(v) => v.iter().map(ToString::to_string).collect(),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn contraction_factor(&self) -> f64 {
        solver::contraction_factor(&self.spec)
    }

    fn g_map(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(solver::g_map(&self.spec, &vector(x)?).map_err(value_err)?.into_inner())
    }

    /// One iteration; returns `{x_next, z, y, t, a_n, b_n}`.
    fn iterate_once<'py>(&self, py: Python<'py>, x: Vec<f64>, n: usize) -> PyResult<Bound<'py, PyDict>> {
        let step = solver::iterate_once(&self.spec, &vector(x)?, n).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("x_next", step.x_next.into_inner())?;
        d.set_item("z", step.stages.z.into_inner())?;
        d.set_item("y", step.stages.y.into_inner())?;
        d.set_item("t", step.stages.t.into_inner())?;
        d.set_item("a_n", step.a)?;
        d.set_item("b_n", step.b)?;
        Ok(d)
    }

    /// Runs the iteration; unspecified arguments come from the configuration.
    #[pyo3(signature = (x1 = None, tol = None, max_iter = None, reference_p = None))]
    fn solve(
        &self,
        x1: Option<Vec<f64>>,
        tol: Option<f64>,
        max_iter: Option<usize>,
        reference_p: Option<Vec<f64>>,
    ) -> PyResult<PyTrace> {
        let x1 = match x1 {
            Some(x) => vector(x)?,
            None => self.config.x1.clone(),
        };
        let p = match reference_p {
            Some(p) => Some(vector(p)?),
            None => self.config.reference_p.clone(),
        };
        let stop = StopRule {
            tol: tol.unwrap_or_else(|| self.config.tol()),
            max_iter: max_iter.unwrap_or(self.config.max_iter),
        };
        let inner = solver::solve(&self.spec, &x1, stop, p.as_ref()).map_err(value_err)?;
        Ok(PyTrace { inner })
    }

    #[pyo3(signature = (tol = oracle::ORACLE_TOL))]
    fn fixed_point(&self, tol: f64) -> PyResult<Vec<f64>> {
        Ok(oracle::fixed_point_g(&self.spec, tol).map_err(value_err)?.into_inner())
    }

    fn vi_residual(&self, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> PyResult<f64> {
        oracle::vi_residual(&self.spec, &vector(x)?, &vector(y)?, &vector(z)?).map_err(value_err)
    }

    #[pyo3(signature = (n_samples = 1000, seed = 0))]
    fn check_g_contraction<'py>(&self, py: Python<'py>, n_samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let report = oracle::check_g_contraction(&self.spec, n_samples.max(1), seed).map_err(value_err)?;
        report_dict(py, &report)
    }

    fn remark_bound_check<'py>(&self, py: Python<'py>, trace: &PyTrace, p: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let p = vector(p)?;
        p.check_dim(self.spec.dim()).map_err(value_err)?;
        report_dict(py, &oracle::remark_bound_check(&trace.inner, &self.spec, &p))
    }

    #[pyo3(signature = (q, p, tol = cli::VI_TOL))]
    fn viscosity_vi_check(&self, q: Vec<f64>, p: Vec<f64>, tol: f64) -> PyResult<bool> {
        oracle::viscosity_vi_check(&vector(q)?, &vector(p)?, &self.spec.contraction, tol).map_err(value_err)
    }
}

fn load(text: &str) -> PyResult<RunConfig> {
    RunConfig::from_json_str(text, "<string>").map_err(value_err)
}

/// `visolve run`: returns `(exit_code, trace_csv)`.
#[pyfunction]
fn run(config_json: &str) -> PyResult<(i32, String)> {
    let config = load(config_json)?;
    let mut buf = Vec::new();
    match cli::cmd_run(&config, &mut buf) {
        Ok(outcome) => Ok((outcome.status.code(), String::from_utf8(buf).map_err(value_err)?)),
        Err(e) => Ok((e.exit_status().code(), e.to_string())),
    }
}

/// `visolve verify`: returns `(exit_code, report_json)`.
#[pyfunction]
#[pyo3(signature = (config_json, samples = 10_000))]
fn verify(config_json: &str, samples: usize) -> PyResult<(i32, String)> {
    let config = load(config_json)?;
    let mut buf = Vec::new();
    match cli::cmd_verify(&config, samples, &mut buf) {
        Ok((status, _)) => Ok((status.code(), String::from_utf8(buf).map_err(value_err)?)),
        Err(e) => Ok((e.exit_status().code(), e.to_string())),
    }
}

/// `visolve sweep`: returns the summary CSV.
#[pyfunction]
fn sweep(config_json: &str, param: &str, values: Vec<f64>) -> PyResult<String> {
    let config = load(config_json)?;
    let param: SweepParam = param.parse().map_err(value_err)?;
    let mut buf = Vec::new();
    cli::cmd_sweep(&config, param, &values, &mut buf).map_err(value_err)?;
    String::from_utf8(buf).map_err(value_err)
}

#[pymodule]
pub fn visolve(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(inner, m)?)?;
    m.add_function(wrap_pyfunction!(duality_map, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_class::<PyConvexSet>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrace>()?;
    Ok(())
}
