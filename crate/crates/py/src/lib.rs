//! Python bindings for tfe-core.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use tfe_core::counterterm::{
    counterterm_h, eval_C_constants, tfe_leading_form, CountertermTable, CovarianceSpec, MollifierKind, MollifierSpec,
};
use tfe_core::fixtures::{verify, FixtureSet};
use tfe_core::hierarchy::{expand as core_expand, terms_to_json, ExpandMode};
use tfe_core::noise::{covariance_mc, pi_f0_moment_mc, scaling_fit, Component, FitMode, NoiseSampler};
use tfe_core::spectral::SpectralGrid;
use tfe_core::{choose_kappa, homogeneity_set, Error, ModelParams};

fn err(e: Error) -> PyErr {
    match e {
        Error::Param(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts through the json module so callers get plain dicts and lists.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (v.to_string(),))?.unbind())
}

fn params(alpha: f64, d: usize) -> PyResult<ModelParams> {
    ModelParams::new(alpha, d).map_err(err)
}

fn kind(mollifier: &str) -> PyResult<MollifierKind> {
    mollifier.parse().map_err(err)
}

#[pyclass(name = "Multiindex", frozen, eq, ord, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct PyMultiindex(tfe_core::Multiindex);

#[pymethods]
impl PyMultiindex {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Multiindex('{}')", self.0)
    }

    fn __add__(&self, other: &Self) -> Self {
        Self(self.0.plus(&other.0))
    }

    fn bracket(&self) -> i64 {
        self.0.bracket()
    }

    #[pyo3(signature = (alpha, d=1))]
    fn homogeneity(&self, alpha: f64, d: usize) -> PyResult<f64> {
        Ok(self.0.homogeneity(&params(alpha, d)?))
    }

    #[pyo3(signature = (alpha, d=1))]
    fn order_length(&self, alpha: f64, d: usize) -> PyResult<f64> {
        Ok(self.0.order_length(&params(alpha, d)?))
    }

    fn is_populated(&self) -> bool {
        self.0.is_populated()
    }

    #[pyo3(signature = (alpha, d=1))]
    fn is_c_populated(&self, alpha: f64, d: usize) -> PyResult<bool> {
        self.0.is_c_populated(&params(alpha, d)?).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (alpha, d=1, cutoff=3.0))]
fn enumerate_populated(alpha: f64, d: usize, cutoff: f64) -> PyResult<Vec<PyMultiindex>> {
    let list = tfe_core::enumerate_populated(&params(alpha, d)?, cutoff).map_err(err)?;
    Ok(list.into_iter().map(PyMultiindex).collect())
}

#[pyfunction]
#[pyo3(signature = (alpha, d=1))]
fn renormalisation_candidates(alpha: f64, d: usize) -> PyResult<Vec<PyMultiindex>> {
    let list = tfe_core::renormalisation_candidates(&params(alpha, d)?).map_err(err)?;
    Ok(list.into_iter().map(PyMultiindex).collect())
}

#[pyfunction]
#[pyo3(signature = (alpha, d=1, cutoff=5.0))]
fn kappa(alpha: f64, d: usize, cutoff: f64) -> PyResult<f64> {
    let p = params(alpha, d)?;
    let homs = homogeneity_set(&p, cutoff).map_err(err)?;
    choose_kappa(&p, &homs).map_err(err)
}

/// Hierarchy terms of a multiindex as a list of dicts.
#[pyfunction]
#[pyo3(signature = (beta, alpha, d=1, mode="raw"))]
fn expand(py: Python<'_>, beta: &str, alpha: f64, d: usize, mode: &str) -> PyResult<Py<PyAny>> {
    let mode: ExpandMode = serde_json::from_value(Value::String(mode.into()))
        .map_err(|_| PyValueError::new_err(format!("mode must be raw or reduced, got {mode:?}")))?;
    let beta = beta.parse().map_err(err)?;
    let terms = core_expand(&beta, &params(alpha, d)?, mode).map_err(err)?;
    to_py(py, &terms_to_json(&terms))
}

/// (C1, C2, C3) at unit τ and m0.
#[pyfunction]
#[pyo3(signature = (alpha, mollifier="semigroup"))]
fn constants(alpha: f64, mollifier: &str) -> PyResult<(f64, f64, f64)> {
    let c = eval_C_constants(alpha, kind(mollifier)?).map_err(err)?;
    Ok((c[0].value, c[1].value, c[2].value))
}

#[pyfunction]
#[pyo3(signature = (alpha, tau=1.0, m0=1.0, mollifier="semigroup", eta=2.0))]
fn counterterm_table(py: Python<'_>, alpha: f64, tau: f64, m0: f64, mollifier: &str, eta: f64) -> PyResult<Py<PyAny>> {
    let cov = CovarianceSpec::tfe_default(alpha, m0).map_err(err)?;
    let moll = MollifierSpec::new(kind(mollifier)?, tau, eta).map_err(err)?;
    to_py(py, &CountertermTable::compute(&cov, &moll).map_err(err)?.to_json())
}

fn universal(alpha: f64, mollifier: &str) -> PyResult<CountertermTable> {
    let k = kind(mollifier)?;
    Ok(CountertermTable::from_values(alpha, k, eval_C_constants(alpha, k).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (a_prime, b, b_prime, alpha=0.5, mollifier="anisotropic"))]
fn h(a_prime: f64, b: f64, b_prime: f64, alpha: f64, mollifier: &str) -> PyResult<f64> {
    Ok(counterterm_h(a_prime, b, b_prime, &universal(alpha, mollifier)?))
}

#[pyfunction]
#[pyo3(signature = (m, alpha=0.5))]
fn leading_form(py: Python<'_>, m: f64, alpha: f64) -> PyResult<Py<PyAny>> {
    let lf = tfe_leading_form(m, alpha, &universal(alpha, "anisotropic")?).map_err(err)?;
    to_py(py, &serde_json::to_value(lf).expect("plain struct"))
}

/// Replays the shipped fixtures, or those in `dir`; returns the failed items.
#[pyfunction]
#[pyo3(signature = (dir=None))]
fn fixtures_verify(dir: Option<&str>) -> PyResult<Vec<String>> {
    let set = match dir {
        Some(d) => FixtureSet::load_dir(d.as_ref()).map_err(err)?,
        None => FixtureSet::builtin(),
    };
    Ok(verify(&set).failures().iter().map(|c| format!("{}: {}", c.fixture, c.item)).collect())
}

#[pyclass(name = "NoiseSampler", frozen)]
struct PyNoiseSampler(NoiseSampler);

#[pymethods]
impl PyNoiseSampler {
    #[new]
    #[pyo3(signature = (sizes, boxes, alpha, tau, m0=1.0, mollifier="semigroup", eta=2.0, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        sizes: Vec<usize>,
        boxes: Vec<f64>,
        alpha: f64,
        tau: f64,
        m0: f64,
        mollifier: &str,
        eta: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let grid = SpectralGrid::new(sizes, boxes).map_err(err)?;
        let cov = CovarianceSpec::tfe_default(alpha, m0).map_err(err)?;
        let moll = MollifierSpec::new(kind(mollifier)?, tau, eta).map_err(err)?;
        NoiseSampler::new(grid, cov, moll, seed).map(Self).map_err(err)
    }

    /// Noise components of one sample, flattened row-major.
    fn sample(&self, sample: u64) -> Vec<Vec<f64>> {
        self.0.sample_noise(sample).iter().map(|f| f.real_parts()).collect()
    }

    fn covariance_oracle(&self, lags: Vec<Vec<i64>>) -> Vec<f64> {
        self.0.covariance_oracle(&lags)
    }

    fn covariance_mc(&self, py: Python<'_>, lags: Vec<Vec<i64>>, samples: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &covariance_mc(&self.0, &lags, samples).map_err(err)?.to_json())
    }

    fn pi_f0_moment_mc(&self, py: Python<'_>, lags: Vec<Vec<i64>>, samples: usize) -> PyResult<Py<PyAny>> {
        to_py(py, &pi_f0_moment_mc(&self.0, &lags, samples).map_err(err)?.to_json())
    }

    #[pyo3(signature = (window, samples, component="f0", mode="equal-time"))]
    fn scaling_fit(
        &self,
        py: Python<'_>,
        window: (f64, f64),
        samples: usize,
        component: &str,
        mode: &str,
    ) -> PyResult<Py<PyAny>> {
        let component: Component = component.parse().map_err(err)?;
        let mode: FitMode = mode.parse().map_err(err)?;
        to_py(py, &scaling_fit(component, &self.0, window, samples, mode).map_err(err)?.to_json())
    }
}

#[pymodule]
fn tfe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMultiindex>()?;
    m.add_class::<PyNoiseSampler>()?;
    m.add_function(wrap_pyfunction!(enumerate_populated, m)?)?;
    m.add_function(wrap_pyfunction!(renormalisation_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(counterterm_table, m)?)?;
    m.add_function(wrap_pyfunction!(h, m)?)?;
    m.add_function(wrap_pyfunction!(leading_form, m)?)?;
    m.add_function(wrap_pyfunction!(fixtures_verify, m)?)?;
    Ok(())
}
