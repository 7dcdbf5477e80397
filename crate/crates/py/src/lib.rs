//! Python module `passive_isac_py`.
//!
//! Complex matrices cross the boundary as lists of rows of Python `complex`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use passive_isac::asymptotics;
use passive_isac::detector::glrt_statistic_matrix;
use passive_isac::harness::{self, validate, DesignConfig, ExperimentConfig, ExperimentKind};
use passive_isac::linalg::{CMat, C64};
use passive_isac::Error;

fn to_py(err: Error) -> PyErr {
    match err.exit_code() {
        2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn matrix(rows: Vec<Vec<C64>>) -> PyResult<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

fn kind(name: &str) -> PyResult<ExperimentKind> {
    ExperimentConfig::from_toml_str(&format!("experiment = \"{name}\""))
        .map(|c| c.experiment)
        .map_err(|_| PyValueError::new_err(format!("unknown experiment {name:?}")))
}

/// Large-sample detection probability `Q_{nu/2}(sqrt(kappa), sqrt(2 rho))`.
#[pyfunction]
fn asymptotic_pd(rho: f64, nu: usize, kappa: f64) -> PyResult<f64> {
    asymptotics::asymptotic_pd(rho, nu, kappa).map_err(to_py)
}

#[pyfunction]
fn asymptotic_pfa(rho: f64, nu: usize) -> PyResult<f64> {
    asymptotics::asymptotic_pfa(rho, nu).map_err(to_py)
}

/// Threshold on the statistic for a target false-alarm probability.
#[pyfunction]
fn asymptotic_threshold(pfa: f64, nu: usize) -> PyResult<f64> {
    asymptotics::asymptotic_threshold(pfa, nu).map_err(to_py)
}

#[pyfunction]
fn kappa_general(h_t: Vec<Vec<C64>>, h_d: Vec<Vec<C64>>, sigma_r2: f64, block_length: usize) -> PyResult<f64> {
    asymptotics::kappa_general(&matrix(h_t)?, &matrix(h_d)?, sigma_r2, block_length).map_err(to_py)
}

#[pyfunction]
fn kappa_single_cu(block_length: usize, n_sr: usize, snr_t: f64, snr_d: f64) -> f64 {
    asymptotics::kappa_single_cu(block_length, n_sr, snr_t, snr_d)
}

/// GLRT statistic of a stacked observation (target rows over direct rows).
#[pyfunction]
fn glrt_statistic(y: Vec<Vec<C64>>, sigma_r2: f64, n_streams: usize) -> PyResult<f64> {
    glrt_statistic_matrix(&matrix(y)?, sigma_r2, n_streams)
        .map(|r| r.statistic)
        .map_err(to_py)
}

/// Default configuration of an experiment as TOML text.
#[pyfunction]
fn default_config(experiment: &str) -> PyResult<String> {
    ExperimentConfig::new(kind(experiment)?).to_toml_string().map_err(to_py)
}

/// Runs an experiment from TOML text; returns `{table name: CSV text}`.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::from_toml_str(config_toml).map_err(to_py)?;
    let tables = py.detach(|| harness::run_experiment(&config)).map_err(to_py)?;
    let out = PyDict::new(py);
    for (stem, table) in tables {
        out.set_item(stem, table.to_csv())?;
    }
    Ok(out)
}

/// Fast validation checks: `[(id, name, passed, measured, detail)]`.
#[pyfunction]
#[pyo3(signature = (seed = 2024, full = false))]
fn validate_checks(py: Python<'_>, seed: u64, full: bool) -> Vec<(u32, String, bool, f64, String)> {
    let options = validate::ValidateOptions {
        full,
        ..validate::ValidateOptions::default()
    };
    py.detach(|| validate::run_checks(seed, &DesignConfig::default(), &options))
        .into_iter()
        .map(|o| (o.id, o.name, o.passed, o.measured, o.detail))
        .collect()
}

#[pymodule]
fn passive_isac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(asymptotic_pd, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_pfa, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_general, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_single_cu, m)?)?;
    m.add_function(wrap_pyfunction!(glrt_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(validate_checks, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
