//! Python bindings for `stagefreq`.
//!
//! Structured results (assessments, return-level summaries, decompositions)
//! are returned as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use stagefreq::bayes::{self, ChainConfig, PriorSpec};
use stagefreq::error::ErrorClass;
use stagefreq::gev::{self, ModelStructure};
use stagefreq::hazard::{self, CovariateRef};
use stagefreq::ingest::{self, AlignedDataset};
use stagefreq::stattests;
use stagefreq::uq::{self, Measure, ScenarioGrid};

fn py_err(e: stagefreq::Error) -> PyErr {
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(e.to_string()),
        ErrorClass::Numerical => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for stagefreq::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Converts any serializable value to Python objects through JSON.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr<Err = stagefreq::Error>>(s: &str) -> PyResult<T> {
    s.parse::<T>().py()
}

#[pyclass(name = "GevParams", module = "stagefreq_py", from_py_object)]
#[derive(Clone)]
struct PyGevParams {
    inner: gev::GevParams,
}

#[pymethods]
impl PyGevParams {
    #[new]
    #[pyo3(signature = (mu0, sigma, xi, mu1 = 0.0))]
    fn new(mu0: f64, sigma: f64, xi: f64, mu1: f64) -> Self {
        Self {
            inner: gev::GevParams::new(mu0, mu1, sigma, xi),
        }
    }

    #[getter]
    fn mu0(&self) -> f64 {
        self.inner.mu0
    }

    #[getter]
    fn mu1(&self) -> f64 {
        self.inner.mu1
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi
    }

    fn location_at(&self, phi: f64) -> f64 {
        self.inner.location_at(phi)
    }

    /// Return level for period `t` at covariate value `phi`.
    #[pyo3(signature = (t, structure = "stationary", phi = 0.0))]
    fn return_level(&self, t: f64, structure: &str, phi: f64) -> PyResult<f64> {
        hazard::return_level(&self.inner, t, parse(structure)?, phi).py()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("GevParams(mu0={}, mu1={}, sigma={}, xi={})", p.mu0, p.mu1, p.sigma, p.xi)
    }
}

#[pyfunction]
fn gev_logpdf(x: f64, mu: f64, sigma: f64, xi: f64) -> PyResult<f64> {
    gev::gev_logpdf(x, mu, sigma, xi).py()
}

#[pyfunction]
fn gev_pdf(x: f64, mu: f64, sigma: f64, xi: f64) -> PyResult<f64> {
    Ok(gev::Gev::new(mu, sigma, xi).py()?.pdf(x))
}

#[pyfunction]
fn gev_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> PyResult<f64> {
    gev::gev_cdf(x, mu, sigma, xi).py()
}

#[pyfunction]
fn gev_quantile(p: f64, mu: f64, sigma: f64, xi: f64) -> PyResult<f64> {
    gev::gev_quantile(p, mu, sigma, xi).py()
}

#[pyfunction]
#[pyo3(signature = (values, alpha = 0.05))]
fn pettitt_test<'py>(py: Python<'py>, values: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stattests::pettitt_test(&values, alpha).py()?)
}

#[pyfunction]
#[pyo3(signature = (values, alpha = 0.05))]
fn mann_kendall_test<'py>(py: Python<'py>, values: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stattests::mann_kendall_test(&values, alpha).py()?)
}

/// Stage record aligned with its per-year covariate.
#[pyclass(name = "Dataset", module = "stagefreq_py")]
struct PyDataset {
    inner: AlignedDataset,
}

#[pymethods]
impl PyDataset {
    /// Loads a stage CSV and a monthly index CSV and averages the index over
    /// the inclusive `months` window.
    #[staticmethod]
    #[pyo3(signature = (stage, index, months = (6, 11), meta = None))]
    fn from_files(stage: &str, index: &str, months: (u8, u8), meta: Option<&str>) -> PyResult<Self> {
        let mut series = ingest::load_annual_maxima(stage).py()?;
        if let Some(m) = meta {
            series = series.with_meta(Some(ingest::StationMeta::load(m).py()?)).py()?;
        }
        let monthly = ingest::load_monthly_index(index).py()?;
        let seasonal = ingest::seasonal_mean_covariate(&monthly, months.0, months.1).py()?;
        let inner = ingest::align(&series, &seasonal.covariate).py()?.with_covariate_months(Some(months));
        Ok(Self { inner })
    }

    /// Builds a dataset from parallel lists.
    #[staticmethod]
    fn from_arrays(years: Vec<i32>, stage: Vec<f64>, covariate: Vec<f64>) -> PyResult<Self> {
        let series = ingest::AnnualMaximaSeries::new(years.clone(), stage, None).py()?;
        let cov = ingest::CovariateSeries::new(years, covariate).py()?;
        Ok(Self {
            inner: ingest::align(&series, &cov).py()?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: AlignedDataset::load(path).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn years(&self) -> Vec<i32> {
        self.inner.years().to_vec()
    }

    #[getter]
    fn stage(&self) -> Vec<f64> {
        self.inner.stage().to_vec()
    }

    #[getter]
    fn covariate(&self) -> Vec<f64> {
        self.inner.covariate_values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[pyo3(signature = (alpha = 0.05))]
    fn assess<'py>(&self, py: Python<'py>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &stattests::assess_nonstationarity(self.inner.series(), alpha).py()?)
    }

    fn log_likelihood(&self, params: &PyGevParams, structure: &str) -> PyResult<f64> {
        gev::log_likelihood(&self.inner, parse(structure)?, &params.inner).py()
    }

    fn mle(&self, structure: &str) -> PyResult<PyGevParams> {
        Ok(PyGevParams {
            inner: bayes::mle_fit(&self.inner, parse(structure)?).py()?,
        })
    }
}

/// Post-burn-in draws of one Metropolis-Hastings chain.
#[pyclass(name = "Ensemble", module = "stagefreq_py")]
struct PyEnsemble {
    inner: bayes::ParameterEnsemble,
}

#[pymethods]
impl PyEnsemble {
    /// Samples the posterior of `structure` under a prior preset
    /// (`gauss-wide`, `gauss-narrow`, `uniform`, `gauss:<variance>`).
    #[staticmethod]
    #[pyo3(signature = (dataset, structure, seed, prior = "gauss-wide", iterations = 100_000, burn_in = 10_000))]
    fn fit(
        py: Python<'_>,
        dataset: &PyDataset,
        structure: &str,
        seed: u64,
        prior: &str,
        iterations: usize,
        burn_in: usize,
    ) -> PyResult<Self> {
        let structure: ModelStructure = parse(structure)?;
        let spec = PriorSpec::preset(prior).py()?;
        let cfg = ChainConfig::new(seed).with_length(iterations, burn_in);
        let ds = &dataset.inner;
        let inner = py.detach(|| bayes::mh_sample(ds, structure, &spec, &cfg)).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: bayes::ParameterEnsemble::load(path).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn acceptance_rate(&self) -> f64 {
        self.inner.acceptance_rate
    }

    #[getter]
    fn structure(&self) -> &'static str {
        self.inner.structure.name()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn log_posteriors(&self) -> Vec<f64> {
        self.inner.log_posteriors.clone()
    }

    /// One parameter column: `mu0`, `mu1`, `sigma` or `xi`.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let k = match name {
            "mu0" => 0,
            "mu1" => 1,
            "sigma" => 2,
            "xi" => 3,
            other => return Err(PyValueError::new_err(format!("unknown parameter '{other}'"))),
        };
        Ok(self.inner.column(k))
    }

    fn map_estimate(&self) -> PyResult<PyGevParams> {
        Ok(PyGevParams {
            inner: bayes::map_estimate(&self.inner).py()?,
        })
    }

    /// Return-level summaries (expected, median, mode, interval, MAP level)
    /// for each period.
    #[pyo3(signature = (dataset, periods, covariate_ref = "last-year", mass = 0.9))]
    fn return_levels<'py>(
        &self,
        py: Python<'py>,
        dataset: &PyDataset,
        periods: Vec<f64>,
        covariate_ref: &str,
        mass: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let c: CovariateRef = parse(covariate_ref)?;
        let curve = hazard::return_curve(&self.inner, &periods, c, &dataset.inner, mass).py()?;
        to_py(py, &curve.summaries)
    }

    /// Recurrence interval of `level` under this ensemble.
    #[pyo3(signature = (level, dataset, covariate_ref = "last-year"))]
    fn equivalent_return_period(&self, level: f64, dataset: &PyDataset, covariate_ref: &str) -> PyResult<f64> {
        hazard::equivalent_return_period(level, &self.inner, parse(covariate_ref)?, &dataset.inner).py()
    }
}

/// Cumulative/individual uncertainty of a crossed scenario table stored
/// row-major (last source fastest).
#[pyfunction]
#[pyo3(signature = (estimates, counts, names = None, measure = "variance"))]
fn decompose<'py>(
    py: Python<'py>,
    estimates: Vec<f64>,
    counts: Vec<usize>,
    names: Option<Vec<String>>,
    measure: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let names = names.unwrap_or_else(|| (0..counts.len()).map(|i| format!("source{i}")).collect());
    let grid = ScenarioGrid::new(names, counts, estimates).py()?;
    let m: Measure = parse(measure)?;
    let d = uq::decompose(&grid, m).py()?;
    let out = to_py(py, &d)?;
    out.set_item("shares", d.shares())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (estimates, counts, names = None))]
fn anova_effects<'py>(
    py: Python<'py>,
    estimates: Vec<f64>,
    counts: Vec<usize>,
    names: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let names = names.unwrap_or_else(|| (0..counts.len()).map(|i| format!("source{i}")).collect());
    let grid = ScenarioGrid::new(names, counts, estimates).py()?;
    to_py(py, &uq::anova_effects(&grid, Measure::Variance).py()?)
}

#[pymodule]
fn stagefreq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGevParams>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(gev_logpdf, m)?)?;
    m.add_function(wrap_pyfunction!(gev_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(gev_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(gev_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(pettitt_test, m)?)?;
    m.add_function(wrap_pyfunction!(mann_kendall_test, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(anova_effects, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_python_exceptions() {
        Python::initialize();
        Python::attach(|py| {
            let v = py_err(stagefreq::Error::Validation("bad".into()));
            assert!(v.is_instance_of::<PyValueError>(py));
            let e = gev_cdf(0.0, 0.0, -1.0, 0.0).unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn module_exposes_api() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "stagefreq_py").unwrap();
            stagefreq_py(&m).unwrap();
            for name in ["GevParams", "Dataset", "Ensemble", "gev_quantile", "decompose"] {
                assert!(m.hasattr(name).unwrap(), "{name}");
            }
            let d = decompose(py, vec![0.0, 1.0, 2.0, 3.0], vec![2, 2], None, "variance").unwrap();
            let shares: Vec<f64> = d.get_item("shares").unwrap().extract().unwrap();
            assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        });
    }
}
