//! Python bindings for the `ecdm` crate.
//!
//! Matrices cross the boundary as lists of rows.

use ecdm::inference::{self, Sidedness};
use ecdm::simulation::{run_monte_carlo, SimScenario};
use ecdm::EcdmError;
use ndarray::Array2;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

create_exception!(ecdm_py, DegenerateScaleError, PyArithmeticError);

fn to_py(e: EcdmError) -> PyErr {
    match e {
        EcdmError::DegenerateScale { .. } | EcdmError::NonpositiveScale(_) => {
            DegenerateScaleError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Array2::from_shape_vec((n, p), rows.concat()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An `n x (p1 + p2)` sample split into two variable blocks.
#[pyclass(frozen)]
struct PairedSample {
    inner: ecdm::PairedSample,
}

#[pymethods]
impl PairedSample {
    #[new]
    fn new(rows: Vec<Vec<f64>>, p1: usize) -> PyResult<Self> {
        let m = matrix(rows)?;
        let inner = ecdm::PairedSample::new(m.view(), p1).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p1(&self) -> usize {
        self.inner.p1()
    }

    #[getter]
    fn p2(&self) -> usize {
        self.inner.p2()
    }

    fn __repr__(&self) -> String {
        format!("PairedSample(n={}, p1={}, p2={})", self.inner.n(), self.inner.p1(), self.inner.p2())
    }
}

#[pyclass(frozen, get_all)]
struct EstimateBundle {
    n: usize,
    t_hat: f64,
    w1: f64,
    w2: f64,
    delta_scale: f64,
    u_n: f64,
}

impl From<ecdm::EstimateBundle> for EstimateBundle {
    fn from(b: ecdm::EstimateBundle) -> Self {
        Self { n: b.n, t_hat: b.t_hat, w1: b.w1, w2: b.w2, delta_scale: b.delta_scale, u_n: b.u_n }
    }
}

#[pymethods]
impl EstimateBundle {
    fn __repr__(&self) -> String {
        format!(
            "EstimateBundle(n={}, t_hat={}, w1={}, w2={}, delta_scale={})",
            self.n, self.t_hat, self.w1, self.w2, self.delta_scale
        )
    }
}

#[pyclass(frozen, get_all)]
struct TestOutcome {
    statistic: f64,
    critical_value: f64,
    p_value: f64,
    reject: bool,
    alpha: f64,
    two_sided: bool,
    ci_lower: f64,
    ci_upper: f64,
    ci_degenerate: bool,
}

impl From<ecdm::TestOutcome> for TestOutcome {
    fn from(t: ecdm::TestOutcome) -> Self {
        Self {
            statistic: t.statistic,
            critical_value: t.critical_value,
            p_value: t.p_value,
            reject: t.reject,
            alpha: t.alpha,
            two_sided: t.sidedness == Sidedness::TwoSided,
            ci_lower: t.ci.lower,
            ci_upper: t.ci.upper,
            ci_degenerate: t.ci.degenerate,
        }
    }
}

#[pymethods]
impl TestOutcome {
    fn __repr__(&self) -> String {
        format!(
            "TestOutcome(statistic={}, p_value={}, reject={}, ci=[{}, {}])",
            self.statistic,
            self.p_value,
            if self.reject { "True" } else { "False" },
            self.ci_lower,
            self.ci_upper
        )
    }
}

/// Unbiased estimate of the squared Frobenius norm of the cross-covariance.
#[pyfunction]
fn t_hat(sample: &PairedSample) -> f64 {
    ecdm::t_hat(&sample.inner)
}

/// Unbiased estimate of `tr(Σ_i²)` for block 1 or 2.
#[pyfunction]
fn w_stat(sample: &PairedSample, block: usize) -> PyResult<f64> {
    ecdm::w_stat(&sample.inner, block).map_err(to_py)
}

#[pyfunction]
fn estimate_bundle(sample: &PairedSample) -> PyResult<EstimateBundle> {
    Ok(ecdm::estimate_bundle(&sample.inner).map_err(to_py)?.into())
}

/// One-sided test of zero cross-covariance, with the two-sided interval.
#[pyfunction]
#[pyo3(signature = (sample, alpha = 0.05))]
fn correlation_test(sample: &PairedSample, alpha: f64) -> PyResult<TestOutcome> {
    Ok(ecdm::correlation_test(&sample.inner, alpha).map_err(to_py)?.into())
}

#[pyfunction]
fn kappa_hat(sample: &PairedSample) -> PyResult<f64> {
    let b = ecdm::estimate_bundle(&sample.inner).map_err(to_py)?;
    ecdm::kappa_hat(&b, b.n).map_err(to_py)
}

#[pyfunction]
fn rv_hat(sample: &PairedSample) -> PyResult<f64> {
    let b = ecdm::estimate_bundle(&sample.inner).map_err(to_py)?;
    ecdm::rv_hat(&b).map_err(to_py)
}

/// Test of the cross-covariance against `sigma0`; returns `(T_n0, outcome)`.
#[pyfunction]
#[pyo3(signature = (sample, sigma0, alpha = 0.05, two_sided = false))]
fn structure_test(
    sample: &PairedSample,
    sigma0: Vec<Vec<f64>>,
    alpha: f64,
    two_sided: bool,
) -> PyResult<(f64, TestOutcome)> {
    let hyp = inference::StructureHypothesis::new(matrix(sigma0)?).map_err(to_py)?;
    let sidedness = if two_sided { Sidedness::TwoSided } else { Sidedness::Upper };
    let (t0, outcome) = inference::structure_test(&sample.inner, &hyp, alpha, sidedness).map_err(to_py)?;
    Ok((t0, outcome.into()))
}

/// Srivastava–Reid statistic and test on the same sample.
#[pyfunction]
#[pyo3(signature = (sample, alpha = 0.05))]
fn sr_test(sample: &PairedSample, alpha: f64) -> PyResult<(f64, TestOutcome)> {
    let delta = ecdm::baselines::sr_delta(&sample.inner);
    let outcome = ecdm::baselines::sr_test(&sample.inner, alpha).map_err(to_py)?;
    Ok((delta, outcome.into()))
}

/// 1-based index halves for pair sum `k`.
#[pyfunction]
fn index_sets(n: usize, k: usize) -> PyResult<(Vec<usize>, Vec<usize>)> {
    ecdm::index_sets(n, k).map_err(to_py)
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    ecdm::normal_cdf(x)
}

/// Upper quantile: `P(N(0, 1) > z) = a`.
#[pyfunction]
fn normal_quantile(a: f64) -> PyResult<f64> {
    ecdm::normal_quantile(a).map_err(to_py)
}

/// Run a TOML scenario and return the summary as a JSON string.
#[pyfunction]
#[pyo3(signature = (config, workers = 1))]
fn simulate_json(py: Python<'_>, config: &str, workers: usize) -> PyResult<String> {
    let scenario = SimScenario::from_toml(config).map_err(to_py)?;
    let run = py.detach(|| run_monte_carlo(&scenario, workers)).map_err(to_py)?;
    serde_json::to_string(&run.report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn ecdm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DegenerateScaleError", m.py().get_type::<DegenerateScaleError>())?;
    m.add_class::<PairedSample>()?;
    m.add_class::<EstimateBundle>()?;
    m.add_class::<TestOutcome>()?;
    m.add_function(wrap_pyfunction!(t_hat, m)?)?;
    m.add_function(wrap_pyfunction!(w_stat, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_bundle, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_test, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_hat, m)?)?;
    m.add_function(wrap_pyfunction!(rv_hat, m)?)?;
    m.add_function(wrap_pyfunction!(structure_test, m)?)?;
    m.add_function(wrap_pyfunction!(sr_test, m)?)?;
    m.add_function(wrap_pyfunction!(index_sets, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_json, m)?)?;
    Ok(())
}
