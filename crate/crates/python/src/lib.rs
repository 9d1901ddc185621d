//! Python bindings: `import streamkern_py`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use streamkern::baselines::{krr_fit as krr_fit_impl, Kernel, KrrModel as CoreKrr, SgdModel as CoreSgd};
use streamkern::simulate::{
    curve_slope, read_csv, run_experiment_with, write_csv, ErrorRow, ExperimentSpec, RunOptions,
};
use streamkern::{
    AdditiveState as CoreAdditive, EigenSystem as CoreSystem, Error, EstimatorConfig,
    ProjectionState as CoreProjection,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::Unsupported(_)
        | Error::InvalidIndex(_)
        | Error::CatalogExhausted { .. }
        | Error::DimensionMismatch { .. }
        | Error::Snapshot(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Accepts a float or a sequence of floats.
fn point(x: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    if let Ok(v) = x.extract::<f64>() {
        return Ok(vec![v]);
    }
    x.extract::<Vec<f64>>()
}

fn system(kernel: &str) -> PyResult<CoreSystem> {
    CoreSystem::new(kernel.parse().map_err(to_py)?).map_err(to_py)
}

fn config(alpha: f64, dim: usize, c: f64, n0: usize, clamp: Option<f64>) -> EstimatorConfig {
    EstimatorConfig::new(alpha, dim, c)
        .with_initial_basis(n0)
        .with_clamp(clamp.unwrap_or(f64::INFINITY))
}

#[pyclass(name = "EigenSystem", module = "streamkern_py")]
struct PyEigenSystem {
    inner: CoreSystem,
}

#[pymethods]
impl PyEigenSystem {
    #[new]
    fn new(kernel: &str) -> PyResult<Self> {
        Ok(PyEigenSystem { inner: system(kernel)? })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eigenvalue(&self, j: usize) -> PyResult<f64> {
        self.inner.eigenvalue(j).map_err(to_py)
    }

    fn eigenfunction(&self, j: usize, x: &Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.basis_eval(j, &point(x)?).map_err(to_py)
    }

    fn kernel(&self, x: &Bound<'_, PyAny>, z: &Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.kernel_eval(&point(x)?, &point(z)?).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("EigenSystem('{}')", self.inner.id())
    }
}

#[pyclass(name = "ProjectionState", module = "streamkern_py")]
struct PyProjection {
    inner: CoreProjection,
}

#[pymethods]
impl PyProjection {
    #[new]
    #[pyo3(signature = (kernel, alpha, c, n0 = 2, clamp = None))]
    fn new(kernel: &str, alpha: f64, c: f64, n0: usize, clamp: Option<f64>) -> PyResult<Self> {
        let sys = system(kernel)?;
        let cfg = config(alpha, sys.dim(), c, n0, clamp);
        Ok(PyProjection {
            inner: CoreProjection::new(sys, cfg).map_err(to_py)?,
        })
    }

    fn observe(&mut self, x: &Bound<'_, PyAny>, y: f64) -> PyResult<()> {
        self.inner.observe(&point(x)?, y).map(|_| ()).map_err(to_py)
    }

    /// Streams a batch; `xs` holds one point (or float) per observation.
    fn observe_many(&mut self, xs: Vec<Bound<'_, PyAny>>, ys: Vec<f64>) -> PyResult<()> {
        if xs.len() != ys.len() {
            return Err(PyValueError::new_err("xs and ys differ in length"));
        }
        for (x, y) in xs.iter().zip(ys) {
            self.observe(x, y)?;
        }
        Ok(())
    }

    fn predict(&self, x: &Bound<'_, PyAny>) -> PyResult<f64> {
        self.inner.predict(&point(x)?).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn basis_count(&self) -> usize {
        self.inner.basis_count()
    }

    #[getter]
    fn initialized(&self) -> bool {
        self.inner.is_initialized()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta().to_vec()
    }

    #[getter]
    fn flops(&self) -> u64 {
        self.inner.flops()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.to_snapshot_bytes().map_err(to_py)?))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyProjection {
            inner: CoreProjection::from_snapshot_bytes(data).map_err(to_py)?,
        })
    }
}

#[pyclass(name = "AdditiveState", module = "streamkern_py")]
struct PyAdditive {
    inner: CoreAdditive,
}

#[pymethods]
impl PyAdditive {
    #[new]
    #[pyo3(signature = (kernel, dim, alpha, c, n0 = 2, clamp = None))]
    fn new(kernel: &str, dim: usize, alpha: f64, c: f64, n0: usize, clamp: Option<f64>) -> PyResult<Self> {
        let cfg = config(alpha, 1, c, n0, clamp);
        Ok(PyAdditive {
            inner: CoreAdditive::new(system(kernel)?, dim, cfg).map_err(to_py)?,
        })
    }

    fn observe(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.inner.observe(&x, y).map(|_| ()).map_err(to_py)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(to_py)
    }

    /// Component `k` (0-based) evaluated at each `u`, intercept excluded.
    fn component(&self, k: usize, us: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.inner.component_function(k).map_err(to_py)?;
        Ok(us.into_iter().map(f).collect())
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn basis_per_coordinate(&self) -> usize {
        self.inner.basis_per_coordinate()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta().to_vec()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.to_snapshot_bytes().map_err(to_py)?))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyAdditive {
            inner: CoreAdditive::from_snapshot_bytes(data).map_err(to_py)?,
        })
    }
}

fn baseline_kernel(kernel: &str, additive_dim: Option<usize>) -> PyResult<Kernel> {
    let sys = system(kernel)?;
    Ok(match additive_dim {
        Some(d) => Kernel::AdditiveSum(sys, d),
        None => Kernel::Single(sys),
    })
}

fn flatten(xs: &[Bound<'_, PyAny>]) -> PyResult<Vec<f64>> {
    let mut out = Vec::new();
    for x in xs {
        out.extend(point(x)?);
    }
    Ok(out)
}

#[pyclass(name = "KrrModel", module = "streamkern_py")]
struct PyKrr {
    inner: CoreKrr,
}

#[pymethods]
impl PyKrr {
    fn predict(&self, x: &Bound<'_, PyAny>) -> PyResult<f64> {
        let x = point(x)?;
        if x.len() != self.inner.kernel().input_dim() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.predict(&x))
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }
}

/// Kernel ridge regression solving `(K + nλI) a = y`.
#[pyfunction]
#[pyo3(signature = (kernel, xs, ys, ridge, additive_dim = None))]
fn krr_fit(
    kernel: &str,
    xs: Vec<Bound<'_, PyAny>>,
    ys: Vec<f64>,
    ridge: f64,
    additive_dim: Option<usize>,
) -> PyResult<PyKrr> {
    let k = baseline_kernel(kernel, additive_dim)?;
    let flat = flatten(&xs)?;
    Ok(PyKrr {
        inner: krr_fit_impl(&k, &flat, &ys, ridge).map_err(to_py)?,
    })
}

#[pyclass(name = "SgdModel", module = "streamkern_py")]
struct PySgd {
    inner: CoreSgd,
}

#[pymethods]
impl PySgd {
    #[new]
    #[pyo3(signature = (kernel, gamma0, additive_dim = None))]
    fn new(kernel: &str, gamma0: f64, additive_dim: Option<usize>) -> PyResult<Self> {
        Ok(PySgd {
            inner: CoreSgd::new(baseline_kernel(kernel, additive_dim)?, gamma0).map_err(to_py)?,
        })
    }

    fn step(&mut self, x: &Bound<'_, PyAny>, y: f64) -> PyResult<()> {
        self.inner.step(&point(x)?, y).map_err(to_py)
    }

    fn predict(&self, x: &Bound<'_, PyAny>) -> PyResult<f64> {
        Ok(self.inner.predict(&point(x)?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }
}

type Row = (String, usize, usize, usize, Option<f64>, u64);

fn row_tuple(r: ErrorRow) -> Row {
    (r.estimator, r.rep, r.n, r.basis, r.sq_l2_error, r.cum_cpu_ns)
}

fn row_struct(r: Row) -> ErrorRow {
    ErrorRow {
        estimator: r.0,
        rep: r.1,
        n: r.2,
        basis: r.3,
        sq_l2_error: r.4,
        cum_cpu_ns: r.5,
    }
}

/// Runs a simulation study from a preset name or a TOML document.
///
/// Returns `(estimator, rep, n, N, sq_l2_error, cum_cpu_ns)` tuples; failed
/// cells carry `None` as the error.
#[pyfunction]
#[pyo3(signature = (preset = None, config = None, seed = None, reps = None, n_max = None, serial = false))]
fn run_experiment(
    py: Python<'_>,
    preset: Option<&str>,
    config: Option<&str>,
    seed: Option<u64>,
    reps: Option<usize>,
    n_max: Option<usize>,
    serial: bool,
) -> PyResult<Vec<Row>> {
    let mut spec = match (preset, config) {
        (Some(p), None) => ExperimentSpec::preset(p),
        (None, Some(text)) => ExperimentSpec::from_toml_str(text),
        _ => return Err(PyValueError::new_err("give exactly one of preset or config")),
    }
    .map_err(to_py)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(r) = reps {
        spec.repetitions = r;
    }
    if let Some(m) = n_max {
        spec.n_grid.retain(|&n| n <= m);
    }
    spec.validate().map_err(to_py)?;
    let options = if serial { RunOptions::serial() } else { RunOptions::default() };
    let curve = py.detach(|| run_experiment_with(&spec, &options)).map_err(to_py)?;
    Ok(curve.rows.into_iter().map(row_tuple).collect())
}

/// Log-log slope of the mean error curve of `estimator` over `[nmin, nmax]`.
///
/// Returns `(slope, standard_error)`.
#[pyfunction]
#[pyo3(signature = (rows, estimator = "projection", nmin = 0.0, nmax = f64::INFINITY))]
fn slope(rows: Vec<Row>, estimator: &str, nmin: f64, nmax: f64) -> PyResult<(f64, f64)> {
    let rows: Vec<ErrorRow> = rows.into_iter().map(row_struct).collect();
    let fit = curve_slope(&rows, estimator, nmin, nmax).map_err(to_py)?;
    Ok((fit.slope, fit.std_err))
}

#[pyfunction]
fn rows_to_csv(rows: Vec<Row>) -> PyResult<String> {
    let rows: Vec<ErrorRow> = rows.into_iter().map(row_struct).collect();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn rows_from_csv(text: &str) -> PyResult<Vec<Row>> {
    Ok(read_csv(text.as_bytes()).map_err(to_py)?.into_iter().map(row_tuple).collect())
}

/// Runs the invariant suite; returns `(name, passed, detail)` per property.
#[pyfunction]
#[pyo3(signature = (filter = None))]
fn verify(py: Python<'_>, filter: Option<&str>) -> Vec<(String, bool, String)> {
    py.detach(|| streamkern::verify::run_properties(filter))
        .into_iter()
        .map(|o| (o.name, o.passed, o.detail))
        .collect()
}

#[pymodule]
fn streamkern_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEigenSystem>()?;
    m.add_class::<PyProjection>()?;
    m.add_class::<PyAdditive>()?;
    m.add_class::<PyKrr>()?;
    m.add_class::<PySgd>()?;
    m.add_function(wrap_pyfunction!(krr_fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(slope, m)?)?;
    m.add_function(wrap_pyfunction!(rows_to_csv, m)?)?;
    m.add_function(wrap_pyfunction!(rows_from_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
