//! Python bindings: quaternion algebra, the mel scale, parameter counting,
//! feature extraction, and checkpoint inference.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qser_core::checkpoint::Checkpoint;
use qser_core::feature::{process_waveform, FeatureConfig};
use qser_core::model::{count_parameters, ModelSpec};
use qser_core::quat;
use qser_core::train::argmax;
use qser_core::wav::read_wav;

fn to_py_err(e: qser_core::Error) -> PyErr {
    match e {
        qser_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Quaternion `r + i·i + j·j + k·k` over 64-bit floats.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Quaternion {
    inner: quat::Quaternion,
}

#[pymethods]
impl Quaternion {
    #[new]
    fn new(r: f64, i: f64, j: f64, k: f64) -> Self {
        Self {
            inner: quat::Quaternion::new(r, i, j, k),
        }
    }

    /// Pure quaternion `0 + x·i + y·j + z·k`.
    #[staticmethod]
    fn pure(x: f64, y: f64, z: f64) -> Self {
        Self {
            inner: quat::Quaternion::pure(x, y, z),
        }
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn i(&self) -> f64 {
        self.inner.i
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.j
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }

    fn conjugate(&self) -> Self {
        Self {
            inner: self.inner.conjugate(),
        }
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inverse(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.inverse().map_err(to_py_err)?,
        })
    }

    fn scale(&self, x: f64) -> Self {
        Self {
            inner: self.inner.scale(x),
        }
    }

    fn __add__(&self, rhs: &Quaternion) -> Self {
        Self {
            inner: self.inner + rhs.inner,
        }
    }

    /// Hamilton product.
    fn __mul__(&self, rhs: &Quaternion) -> Self {
        Self {
            inner: self.inner * rhs.inner,
        }
    }

    fn __neg__(&self) -> Self {
        Self { inner: -self.inner }
    }

    fn __repr__(&self) -> String {
        format!(
            "Quaternion({}, {}, {}, {})",
            self.inner.r, self.inner.i, self.inner.j, self.inner.k
        )
    }

    fn __eq__(&self, rhs: &Quaternion) -> bool {
        self.inner == rhs.inner
    }
}

/// Rotates `q` by `theta` radians about `axis` via the sandwich product.
#[pyfunction]
fn rotate(theta: f64, axis: (f64, f64, f64), q: &Quaternion) -> PyResult<Quaternion> {
    let p = quat::UnitAxisQuaternion::new(theta, [axis.0, axis.1, axis.2]).map_err(to_py_err)?;
    Ok(Quaternion {
        inner: p.rotate(&q.inner),
    })
}

/// Mel value of a frequency in Hz: `2595·log10(1 + f/700)`.
#[pyfunction]
fn mel_scale(f: f64) -> PyResult<f64> {
    qser_core::feature::mel_scale(f).map_err(to_py_err)
}

/// Per-layer parameter counts of the architecture, with the real-valued
/// convolution baseline the quaternion kernels replace.
#[pyfunction]
#[pyo3(signature = (num_classes, conv1_kernels=32, conv2_kernels=64, kernel_size=3))]
fn parameter_counts(
    py: Python<'_>,
    num_classes: usize,
    conv1_kernels: usize,
    conv2_kernels: usize,
    kernel_size: usize,
) -> PyResult<Py<PyDict>> {
    let spec = ModelSpec {
        conv1_kernels,
        conv2_kernels,
        kernel_size,
        ..ModelSpec::with_classes(num_classes)
    };
    let counts = count_parameters(&spec).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("conv1", counts.conv1)?;
    dict.set_item("conv2", counts.conv2)?;
    dict.set_item("dense", counts.dense)?;
    dict.set_item("total", counts.total)?;
    dict.set_item("conv1_real_equivalent", counts.conv1_real_equivalent)?;
    dict.set_item("conv2_real_equivalent", counts.conv2_real_equivalent)?;
    Ok(dict.into())
}

/// Turns a wav file into the network's input features: a flat list of
/// `(i, j, k)` component triples in row-major pixel order, plus the shape.
#[pyfunction]
#[pyo3(signature = (path, db_min=-80.0, db_max=0.0, fft_size=1024, hop=512, n_mels=128))]
fn preprocess_wav(
    path: PathBuf,
    db_min: f64,
    db_max: f64,
    fft_size: usize,
    hop: usize,
    n_mels: usize,
) -> PyResult<((usize, usize, usize), Vec<(f64, f64, f64)>)> {
    let cfg = FeatureConfig {
        fft_size,
        hop,
        n_mels,
        ..Default::default()
    };
    let w = read_wav(&path).map_err(to_py_err)?;
    let img = process_waveform(&w, &cfg, db_min, db_max).map_err(to_py_err)?;
    let data = img.pixels().iter().map(|q| (q.i, q.j, q.k)).collect();
    Ok(((img.height, img.width, img.channels), data))
}

/// A trained model loaded from a checkpoint file.
#[pyclass(frozen, skip_from_py_object)]
struct Model {
    ckpt: Checkpoint,
}

#[pymethods]
impl Model {
    /// Loads a `.qser` checkpoint.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            ckpt: Checkpoint::load(&path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.ckpt.labels.clone()
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.ckpt.model.parameter_count()
    }

    /// Classifies a wav file; returns `(label, probabilities)` where the
    /// probabilities follow the order of `labels`.
    fn predict_wav(&self, path: PathBuf) -> PyResult<(String, Vec<f64>)> {
        let w = read_wav(&path).map_err(to_py_err)?;
        let img = process_waveform(
            &w,
            &self.ckpt.feature_config,
            self.ckpt.db_min,
            self.ckpt.db_max,
        )
        .map_err(to_py_err)?;
        let probs = self.ckpt.model.predict(&img).map_err(to_py_err)?;
        let label = self.ckpt.labels[argmax(&probs)].clone();
        Ok((label, probs))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(classes={}, parameters={})",
            self.ckpt.labels.len(),
            self.ckpt.model.parameter_count()
        )
    }
}

#[pymodule]
fn qser_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Quaternion>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(rotate, m)?)?;
    m.add_function(wrap_pyfunction!(mel_scale, m)?)?;
    m.add_function(wrap_pyfunction!(parameter_counts, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess_wav, m)?)?;
    Ok(())
}
