//! Python bindings for `pdspectra`.
//!
//! Specs, boxes and configs cross the boundary as plain Python objects
//! (dicts and lists) through their JSON form.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::Value;

use pdspectra::arith::{self, GFunctionSpec};
use pdspectra::experiment::{self, ExperimentConfig};
use pdspectra::factor::{self, PrimeTable, DEFAULT_SIEVE_LIMIT};
use pdspectra::stats::{self, SampleOptions, DEFAULT_MAX_MEMBERS};
use pdspectra::{dickman, pdprocess, BoxFunction, Error, ErrorClass, Interval, Polynomial, SequenceSpec};

create_exception!(pdspectra, BudgetError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(e.to_string()),
        ErrorClass::Resource => BudgetError::new_err(e.to_string()),
        ErrorClass::Internal => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts a Python object to a serde type through `json.dumps`.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        let json = obj.py().import("json")?;
        json.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py_object<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An indicator sequence.
#[pyclass(name = "Sequence", module = "pdspectra", frozen)]
struct PySequence {
    spec: SequenceSpec,
}

#[pymethods]
impl PySequence {
    /// Builds from a spec dict such as `{"kind": "poly", "coeffs": [1, 0, 1]}`
    /// or its JSON text.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PySequence { spec: from_py(spec)? })
    }

    #[staticmethod]
    fn uniform() -> Self {
        PySequence { spec: SequenceSpec::Uniform }
    }

    #[staticmethod]
    #[pyo3(signature = (shift = 1))]
    fn shifted_primes(shift: i64) -> Self {
        PySequence { spec: SequenceSpec::ShiftedPrimes { shift } }
    }

    /// Values of an irreducible polynomial, coefficients constant term first.
    #[staticmethod]
    fn poly(coeffs: Vec<i64>) -> PyResult<Self> {
        Ok(PySequence { spec: SequenceSpec::polynomial(coeffs).map_err(to_py)? })
    }

    #[staticmethod]
    fn thue_morse() -> Self {
        PySequence { spec: SequenceSpec::ThueMorse }
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("spec serializes")
    }

    fn __contains__(&self, n: u64) -> bool {
        self.spec.membership(n)
    }

    fn count(&self, x: u64) -> PyResult<u64> {
        self.spec.count(x).map_err(to_py)
    }

    fn members(&self, py: Python<'_>, x: u64) -> PyResult<Vec<u64>> {
        py.detach(|| self.spec.enumerate(x)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Sequence({})", self.to_json())
    }
}

/// Members of a sequence up to `x`, exhaustive or subsampled.
#[pyclass(name = "SampleSet", module = "pdspectra", frozen)]
struct PySampleSet {
    inner: stats::SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[new]
    #[pyo3(signature = (sequence, x, max_members = DEFAULT_MAX_MEMBERS, seed = 0))]
    fn new(py: Python<'_>, sequence: &PySequence, x: u64, max_members: u64, seed: u64) -> PyResult<Self> {
        let opts = SampleOptions { max_members, seed };
        let inner = py
            .detach(|| stats::SampleSet::build(&sequence.spec, x, opts))
            .map_err(to_py)?;
        Ok(PySampleSet { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    #[getter]
    fn x(&self) -> u64 {
        self.inner.x()
    }

    #[getter]
    fn exhaustive(&self) -> bool {
        self.inner.is_exhaustive()
    }

    #[getter]
    fn n_total(&self) -> u64 {
        self.inner.n_total()
    }

    /// Mean of a box function over the spectra; returns `(value, std_error)`.
    fn corr(&self, py: Python<'_>, boxes: &Bound<'_, PyAny>) -> PyResult<(f64, f64)> {
        let eta: BoxFunction = from_py(boxes)?;
        let e = py.detach(|| stats::empirical_corr(&self.inner, &eta)).map_err(to_py)?;
        Ok((e.value, e.std_error))
    }

    fn joint_cdf(&self, py: Python<'_>, thresholds: Vec<f64>) -> PyResult<(f64, f64)> {
        let e = py
            .detach(|| stats::empirical_joint_cdf(&self.inner, &thresholds))
            .map_err(to_py)?;
        Ok((e.value, e.std_error))
    }

    fn tail(&self, py: Python<'_>, eps: f64) -> PyResult<(f64, f64)> {
        let e = py.detach(|| stats::tail_frequency(&self.inner, eps)).map_err(to_py)?;
        Ok((e.value, e.std_error))
    }

    fn ks_vs_dickman(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| stats::ks_vs_dickman(&self.inner)).map_err(to_py)
    }
}

/// One draw of the Poisson-Dirichlet process.
#[pyclass(name = "PdSample", module = "pdspectra", frozen)]
struct PyPdSample {
    inner: pdspectra::PdSample,
}

#[pymethods]
impl PyPdSample {
    #[getter]
    fn entries(&self) -> Vec<f64> {
        self.inner.entries().to_vec()
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.inner.tail_mass()
    }

    fn __getitem__(&self, j: usize) -> f64 {
        self.inner.get(j)
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }
}

/// Draw `index` of the stream for `seed`.
#[pyfunction]
#[pyo3(signature = (seed, index = 0, truncation = pdprocess::DEFAULT_TRUNCATION))]
fn sample_pd(seed: u64, index: u64, truncation: f64) -> PyResult<PyPdSample> {
    let inner = pdprocess::sample_pd_indexed(seed, index, truncation).map_err(to_py)?;
    Ok(PyPdSample { inner })
}

#[pyfunction]
fn rho(u: f64) -> PyResult<f64> {
    dickman::rho(u).map_err(to_py)
}

/// The Dickman table as CSV with columns `u,rho(u)`.
#[pyfunction]
#[pyo3(signature = (u_max, step = 0.01))]
fn rho_csv(u_max: f64, step: f64) -> PyResult<String> {
    dickman::default_table().to_csv(u_max, step).map_err(to_py)
}

/// Prime factors of `u` as `(p, e)` pairs.
#[pyfunction]
fn factorize(py: Python<'_>, u: u64) -> PyResult<Vec<(u128, u32)>> {
    let limit = (factor::isqrt(u) + 1).max(2);
    let f = py
        .detach(|| {
            let table = PrimeTable::build(limit, DEFAULT_SIEVE_LIMIT)?;
            factor::factorize(u as u128, &table)
        })
        .map_err(to_py)?;
    Ok(f.factors().to_vec())
}

/// Normalized log-sizes of the prime factors of `u`, largest first.
#[pyfunction]
fn spectrum(py: Python<'_>, u: u64) -> PyResult<Vec<f64>> {
    let factors = factorize(py, u)?;
    let f = factor::Factorization::new(u as u128, factors).map_err(to_py)?;
    Ok(f.spectrum().entries().to_vec())
}

/// Exact correlation of disjoint intervals given as `(a, b)` pairs.
#[pyfunction]
fn box_correlation_exact(intervals: Vec<(f64, f64)>) -> PyResult<f64> {
    let iv: Vec<Interval> = intervals.into_iter().map(|(a, b)| Interval::new(a, b)).collect();
    pdprocess::box_correlation_exact(&iv).map_err(to_py)
}

#[pyfunction]
fn pd_correlation_quadrature(py: Python<'_>, boxes: &Bound<'_, PyAny>) -> PyResult<f64> {
    let eta: BoxFunction = from_py(boxes)?;
    py.detach(|| pdprocess::pd_correlation_quadrature(&eta)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (boxes, n_samples, seed = 0))]
fn corr_mc(py: Python<'_>, boxes: &Bound<'_, PyAny>, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let eta: BoxFunction = from_py(boxes)?;
    let e = py.detach(|| pdprocess::corr_mc(&eta, n_samples, seed)).map_err(to_py)?;
    Ok((e.value, e.std_error))
}

#[pyfunction]
#[pyo3(signature = (thresholds, n_samples, seed = 0))]
fn joint_cdf_mc(py: Python<'_>, thresholds: Vec<f64>, n_samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let e = py
        .detach(|| pdprocess::joint_cdf_mc(&thresholds, n_samples, seed))
        .map_err(to_py)?;
    Ok((e.value, e.std_error))
}

/// Number of roots of the polynomial modulo `d`.
#[pyfunction]
fn poly_root_count(coeffs: Vec<i64>, d: u64) -> PyResult<u64> {
    let f = Polynomial::new(coeffs).map_err(to_py)?;
    arith::poly_root_count(&f, d).map_err(to_py)
}

/// Level-of-distribution error sum; returns a dict.
#[pyfunction]
#[pyo3(signature = (sequence, x, c, g = None))]
fn lod_error_sum<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    x: u64,
    c: f64,
    g: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let g: GFunctionSpec = match g {
        Some(g) => from_py(g)?,
        None => sequence.spec.g_function(),
    };
    let r = py
        .detach(|| stats::lod_error_sum_with(&sequence.spec, &g, x, c))
        .map_err(to_py)?;
    to_py_object(py, &r)
}

/// Runs an experiment config (dict or JSON text) and returns the report as a
/// dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let v: Value = from_py(config)?;
    let cfg = ExperimentConfig::from_value(v).map_err(to_py)?;
    let report = py.detach(|| experiment::run(&cfg)).map_err(to_py)?;
    to_py_object(py, &report)
}

/// Runs `config` once per value of `axis`; returns a list of report dicts.
#[pyfunction]
fn sweep<'py>(
    py: Python<'py>,
    config: &Bound<'py, PyAny>,
    axis: &str,
    values: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_value(from_py(config)?).map_err(to_py)?;
    let values: Vec<Value> = from_py(values)?;
    let result = py
        .detach(|| experiment::sweep(&cfg, axis, &values))
        .map_err(to_py)?;
    to_py_object(py, &result.reports)
}

#[pymodule(name = "pdspectra")]
fn pdspectra_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PySequence>()?;
    m.add_class::<PySampleSet>()?;
    m.add_class::<PyPdSample>()?;
    m.add_function(wrap_pyfunction!(sample_pd, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(rho_csv, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(box_correlation_exact, m)?)?;
    m.add_function(wrap_pyfunction!(pd_correlation_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(corr_mc, m)?)?;
    m.add_function(wrap_pyfunction!(joint_cdf_mc, m)?)?;
    m.add_function(wrap_pyfunction!(poly_root_count, m)?)?;
    m.add_function(wrap_pyfunction!(lod_error_sum, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
