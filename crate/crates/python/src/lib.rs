//! Python bindings for the `sigreg` crate.
//!
//! Matrices cross the boundary as lists of rows (`list[list[float]]`).

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sigreg::harness::{cmd_train, run_gradcheck, CheckTarget, GradcheckSpec, RunConfig};
use sigreg::linalg::{symmetric_eigenvalues as eigenvalues, Matrix};
use sigreg::network::{forward, MlpModel};
use sigreg::regularizers::{ResamplePolicy, Variant};
use sigreg::{RngStream, SigregConfig};

fn to_py(err: sigreg::Error) -> PyErr {
    match err {
        sigreg::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

/// Regularizer settings. `variant` is "weak" or "strong"; `resample_policy`
/// is "per_step" or "fixed".
#[pyclass(name = "SigregConfig", from_py_object)]
#[derive(Clone)]
struct PySigregConfig {
    inner: SigregConfig,
}

#[pymethods]
impl PySigregConfig {
    #[new]
    #[pyo3(signature = (variant="weak", sketch_dim=64, integration_points=17, t_max=5.0, alpha=0.1, resample_policy="per_step"))]
    fn new(
        variant: &str,
        sketch_dim: usize,
        integration_points: usize,
        t_max: f64,
        alpha: f64,
        resample_policy: &str,
    ) -> PyResult<Self> {
        let variant = match variant {
            "weak" => Variant::Weak,
            "strong" => Variant::Strong,
            v => return Err(PyValueError::new_err(format!("unknown variant {v:?}"))),
        };
        let resample_policy = match resample_policy {
            "per_step" => ResamplePolicy::PerStep,
            "fixed" => ResamplePolicy::Fixed,
            p => return Err(PyValueError::new_err(format!("unknown resample policy {p:?}"))),
        };
        let inner = SigregConfig {
            variant,
            sketch_dim,
            integration_points,
            t_max,
            alpha,
            resample_policy,
        };
        inner.validate().map_err(to_py)?;
        Ok(PySigregConfig { inner })
    }

    #[getter]
    fn variant(&self) -> &'static str {
        match self.inner.variant {
            Variant::Weak => "weak",
            Variant::Strong => "strong",
        }
    }

    #[getter]
    fn sketch_dim(&self) -> usize {
        self.inner.sketch_dim
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn __repr__(&self) -> String {
        format!(
            "SigregConfig(variant={:?}, sketch_dim={}, integration_points={}, t_max={}, alpha={})",
            self.variant(),
            self.inner.sketch_dim,
            self.inner.integration_points,
            self.inner.t_max,
            self.inner.alpha
        )
    }
}

/// Evaluates the configured loss on `z` (N rows of C floats) with the random
/// stream `(seed, stream)`. Returns `(value, grad)`.
#[pyfunction]
#[pyo3(signature = (z, config=None, seed=0, stream=0))]
fn sigreg_loss(
    z: Vec<Vec<f64>>,
    config: Option<PySigregConfig>,
    seed: u64,
    stream: u64,
) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let cfg = config.map_or_else(SigregConfig::default, |c| c.inner);
    let out = sigreg::regularizers::sigreg(&matrix(z)?, &cfg, &mut RngStream::with_stream(seed, stream)).map_err(to_py)?;
    Ok((out.value, out.grad.to_rows()))
}

/// Weak (covariance-matching) loss and gradient.
#[pyfunction]
#[pyo3(signature = (z, sketch_dim=64, seed=0))]
fn weak_sigreg(z: Vec<Vec<f64>>, sketch_dim: usize, seed: u64) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let cfg = SigregConfig::weak().with_sketch_dim(sketch_dim);
    let out = sigreg::regularizers::weak_sigreg(&matrix(z)?, &cfg, &mut RngStream::new(seed)).map_err(to_py)?;
    Ok((out.value, out.grad.to_rows()))
}

/// Strong (characteristic-function) loss and gradient.
#[pyfunction]
#[pyo3(signature = (z, sketch_dim=64, integration_points=17, t_max=5.0, seed=0))]
fn strong_sigreg(
    z: Vec<Vec<f64>>,
    sketch_dim: usize,
    integration_points: usize,
    t_max: f64,
    seed: u64,
) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let cfg = SigregConfig {
        integration_points,
        t_max,
        ..SigregConfig::strong().with_sketch_dim(sketch_dim)
    };
    let out = sigreg::regularizers::strong_sigreg(&matrix(z)?, &cfg, &mut RngStream::new(seed)).map_err(to_py)?;
    Ok((out.value, out.grad.to_rows()))
}

#[pyfunction]
fn effective_rank(eigenvalues: Vec<f64>) -> PyResult<f64> {
    sigreg::metrics::effective_rank(&eigenvalues).map_err(to_py)
}

#[pyfunction]
fn symmetric_eigenvalues(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    eigenvalues(&matrix(m)?).map_err(to_py)
}

/// Spectral diagnostics of a batch as a dict.
#[pyfunction]
fn collapse_report<'py>(py: Python<'py>, z: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = sigreg::metrics::collapse_report(&matrix(z)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("effective_rank", r.effective_rank)?;
    d.set_item("eigen_entropy", r.eigen_entropy)?;
    d.set_item("condition_number", r.condition_number)?;
    d.set_item("top_eigen_fraction", r.top_eigen_fraction)?;
    d.set_item("embedding_dim", r.embedding_dim)?;
    d.set_item("collapsed", r.is_collapsed())?;
    Ok(d)
}

/// ReLU MLP with He-normal initialization.
#[pyclass(name = "Mlp")]
struct PyMlp {
    model: MlpModel,
}

#[pymethods]
impl PyMlp {
    #[new]
    #[pyo3(signature = (widths, seed=0))]
    fn new(widths: Vec<usize>, seed: u64) -> PyResult<Self> {
        let model = MlpModel::he_init(&widths, &RngStream::new(seed)).map_err(to_py)?;
        Ok(PyMlp { model })
    }

    #[getter]
    fn widths(&self) -> Vec<usize> {
        self.model.widths().to_vec()
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.model.num_parameters()
    }

    /// Logits for a batch.
    fn forward(&self, batch: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let trace = forward(&self.model, &matrix(batch)?).map_err(to_py)?;
        Ok(trace.logits().to_rows())
    }

    /// Post-ReLU output of hidden layer `layer` (1-based).
    fn hidden(&self, batch: Vec<Vec<f64>>, layer: usize) -> PyResult<Vec<Vec<f64>>> {
        let trace = forward(&self.model, &matrix(batch)?).map_err(to_py)?;
        Ok(trace.hidden(layer).map_err(to_py)?.to_rows())
    }

    /// `(kind, fan_in, fan_out, activation)` per layer.
    fn describe(&self) -> Vec<(String, usize, usize, String)> {
        self.model
            .describe()
            .into_iter()
            .map(|d| (d.kind.to_string(), d.fan_in, d.fan_out, d.activation.to_string()))
            .collect()
    }
}

/// Trains from a TOML config into `out_dir` and returns the run summary as
/// a JSON string. `overrides` are `KEY=VALUE` strings.
#[pyfunction]
#[pyo3(signature = (config_path, out_dir, overrides=Vec::new()))]
fn train(py: Python<'_>, config_path: PathBuf, out_dir: PathBuf, overrides: Vec<String>) -> PyResult<String> {
    let cfg = RunConfig::load(&config_path, &overrides).map_err(to_py)?;
    let summary = py.detach(|| cmd_train(&cfg, &out_dir)).map_err(to_py)?;
    serde_json::to_string(&summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs the default finite-difference sweep, optionally restricted to some
/// targets. Returns `(passed, worst_relative_error)`.
#[pyfunction]
#[pyo3(signature = (targets=None, inject_fault=false))]
fn gradcheck(py: Python<'_>, targets: Option<Vec<String>>, inject_fault: bool) -> PyResult<(bool, f64)> {
    let mut spec = GradcheckSpec {
        inject_fault,
        ..GradcheckSpec::default()
    };
    if let Some(names) = targets {
        spec.targets = names
            .iter()
            .map(|t| CheckTarget::parse(t).ok_or_else(|| PyValueError::new_err(format!("unknown target {t:?}"))))
            .collect::<PyResult<_>>()?;
    }
    let report = py.detach(|| run_gradcheck(&spec)).map_err(to_py)?;
    Ok((report.passed(), report.worst().map_or(0.0, |r| r.max_rel_error)))
}

#[pymodule]
fn pysigreg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySigregConfig>()?;
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(sigreg_loss, m)?)?;
    m.add_function(wrap_pyfunction!(weak_sigreg, m)?)?;
    m.add_function(wrap_pyfunction!(strong_sigreg, m)?)?;
    m.add_function(wrap_pyfunction!(effective_rank, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(collapse_report, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    Ok(())
}
