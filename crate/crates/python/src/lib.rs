//! Python bindings. Matrices cross the boundary as lists of rows.

use mvie_core::hull::enumerate_facets;
use mvie_core::metrics::rms_angle_error as rms_angle;
use mvie_core::mvie::{solve_mvie, solve_mvie_continuation, FpgmConfig, HIGH_ACCURACY_MAX_RHO};
use mvie_core::numerics::DenseMatrix;
use mvie_core::pipeline::{recover as run_pipeline, PipelineConfig};
use mvie_core::synth::{generate as synth_generate, InstanceParams};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: mvie_core::Error) -> PyErr {
    match e.exit_code() {
        1 => PyIOError::new_err(e.to_string()),
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(to_py)
}

/// Synthetic instance; returns a dict with `A` (M×N), `S` (N×L), `X` (M×L).
#[pyfunction]
#[pyo3(signature = (n, m, l, r, snr_db = f64::INFINITY, seed = 0))]
fn generate(py: Python<'_>, n: usize, m: usize, l: usize, r: f64, snr_db: f64, seed: u64) -> PyResult<Py<PyDict>> {
    let params = InstanceParams { n, m, l, r, snr_db, seed };
    let truth = synth_generate(&params, None).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("A", rows(&truth.a))?;
    out.set_item("S", rows(&truth.s))?;
    out.set_item("X", rows(&truth.x))?;
    out.set_item("noise_variance", truth.noise_variance)?;
    Ok(out.unbind())
}

/// Blind endmember recovery from `x` (M×L).
#[pyfunction]
#[pyo3(signature = (x, n, high_accuracy = true, rho = 150.0, max_rho = HIGH_ACCURACY_MAX_RHO, tau = 1e-5, seed = 0, emit_shat = false))]
#[allow(clippy::too_many_arguments)]
fn recover(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    n: usize,
    high_accuracy: bool,
    rho: f64,
    max_rho: f64,
    tau: f64,
    seed: u64,
    emit_shat: bool,
) -> PyResult<Py<PyDict>> {
    let x = matrix(x)?;
    let cfg = PipelineConfig {
        solver: FpgmConfig { rho, ..FpgmConfig::default() },
        tau,
        high_accuracy,
        max_rho,
        seed,
        emit_shat,
    };
    let report = run_pipeline(&x, n, &cfg).map_err(|e| to_py(e.source))?;
    let out = PyDict::new(py);
    out.set_item("A_hat", rows(&report.a_hat))?;
    out.set_item("K", report.k_facets)?;
    out.set_item("contacts", report.contacts_ambient.clone())?;
    out.set_item("raw_contact_count", report.raw_contact_count)?;
    out.set_item("iterations", report.diagnostics.iterations)?;
    out.set_item("warnings", report.warnings.clone())?;
    if let Some(s) = &report.s_hat {
        out.set_item("S_hat", rows(s))?;
    }
    Ok(out.unbind())
}

/// Maximum-volume inscribed ellipsoid of the convex hull of `points`
/// (one point per row); returns `(F, c)`.
#[pyfunction]
#[pyo3(name = "mvie", signature = (points, high_accuracy = true, rho = 150.0))]
fn inscribed_ellipsoid(points: Vec<Vec<f64>>, high_accuracy: bool, rho: f64) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let poly = enumerate_facets(&points).map_err(to_py)?;
    let cfg = FpgmConfig { rho, ..FpgmConfig::default() };
    let (ell, _) = if high_accuracy {
        solve_mvie_continuation(&poly, &cfg, None, HIGH_ACCURACY_MAX_RHO)
    } else {
        solve_mvie(&poly, &cfg, None)
    }
    .map_err(to_py)?;
    Ok((rows(&ell.f), ell.c))
}

/// RMS angle (degrees) between matched columns and the matching permutation.
#[pyfunction]
fn rms_angle_error(a: Vec<Vec<f64>>, a_hat: Vec<Vec<f64>>) -> PyResult<(f64, Vec<usize>)> {
    rms_angle(&matrix(a)?, &matrix(a_hat)?).map_err(to_py)
}

#[pymodule(name = "mvie")]
fn mvie_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(inscribed_ellipsoid, m)?)?;
    m.add_function(wrap_pyfunction!(rms_angle_error, m)?)?;
    Ok(())
}
