//! Python bindings for the performance-range prediction library.
//!
//! Maps and masks cross the boundary as flat row-major lists plus dims;
//! sample stacks as (values, n, height, width).

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use perfrange as core;
use perfrange::manifest::QualityLabel;
use perfrange::maps::{BinaryMask, ProbMap, SampleStack};
use perfrange::soft_metrics::Temperature;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn prob_map(values: Vec<f64>, height: usize, width: usize) -> PyResult<ProbMap> {
    ProbMap::new(height, width, values).map_err(err)
}

fn mask(values: Vec<u8>, height: usize, width: usize) -> PyResult<BinaryMask> {
    BinaryMask::new(height, width, values.into_iter().map(|v| v != 0).collect()).map_err(err)
}

#[pyfunction]
fn soft_confusion(values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let map = prob_map(values.clone(), 1, values.len())?;
    let c = core::soft_confusion(&map).map_err(err)?;
    Ok((c.tp, c.fp, c.fn_))
}

#[pyfunction]
fn soft_dsc(values: Vec<f64>) -> PyResult<f64> {
    let map = prob_map(values.clone(), 1, values.len())?;
    let c = core::soft_confusion(&map).map_err(err)?;
    Ok(core::soft_dsc(&c))
}

#[pyfunction]
fn true_dsc(pred: Vec<u8>, gt: Vec<u8>) -> PyResult<f64> {
    let (n, m) = (pred.len(), gt.len());
    core::true_dsc(&mask(pred, 1, n)?, &mask(gt, 1, m)?).map_err(err)
}

#[pyfunction]
fn apply_temperature(values: Vec<f64>, t: f64) -> PyResult<Vec<f64>> {
    let map = prob_map(values.clone(), 1, values.len())?;
    let t = Temperature::new(t).map_err(err)?;
    Ok(core::apply_temperature(&map, t).map_err(err)?.values)
}

#[pyfunction]
fn fit_temperature(maps: Vec<Vec<f64>>, gts: Vec<Vec<u8>>) -> PyResult<f64> {
    let maps = maps
        .into_iter()
        .map(|v| prob_map(v.clone(), 1, v.len()))
        .collect::<PyResult<Vec<_>>>()?;
    let gts = gts
        .into_iter()
        .map(|v| mask(v.clone(), 1, v.len()))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(core::fit_temperature(&maps, &gts).map_err(err)?.0)
}

#[pyfunction]
fn conformal_quantile(scores: Vec<f64>, alpha: f64) -> PyResult<f64> {
    core::conformal_quantile(&scores, alpha).map_err(err)
}

/// Point estimate, per-sample estimates, and spread for a sample stack.
#[pyfunction]
fn estimate_performance(
    values: Vec<f64>,
    n_samples: usize,
    height: usize,
    width: usize,
) -> PyResult<(f64, Vec<f64>, f64)> {
    let stack = SampleStack::new(n_samples, height, width, values).map_err(err)?;
    let est = core::estimate_performance(&stack).map_err(err)?;
    Ok((est.y_hat, est.per_sample, est.sigma))
}

#[pyfunction]
fn write_tensor_f32(path: PathBuf, values: Vec<f32>, dims: Vec<u32>) -> PyResult<()> {
    core::write_tensor(&path, &dims, &core::TensorData::F32(values)).map_err(err)
}

#[pyfunction]
fn write_tensor_u8(path: PathBuf, values: Vec<u8>, dims: Vec<u32>) -> PyResult<()> {
    core::write_tensor(&path, &dims, &core::TensorData::U8(values)).map_err(err)
}

/// Returns (values, dims, dtype) with dtype "f32" or "u8".
#[pyfunction]
fn read_tensor(path: PathBuf) -> PyResult<(Vec<f64>, Vec<u32>, String)> {
    let t = core::read_tensor(&path).map_err(err)?;
    let (values, dtype) = match t.data {
        core::TensorData::F32(v) => (v.into_iter().map(|x| x as f64).collect(), "f32"),
        core::TensorData::U8(v) => (v.into_iter().map(|x| x as f64).collect(), "u8"),
    };
    Ok((values, t.dims, dtype.to_string()))
}

#[pyclass(name = "ConformalModel", skip_from_py_object)]
#[derive(Clone)]
struct PyConformalModel {
    inner: core::ConformalModel,
}

#[pymethods]
impl PyConformalModel {
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn q_hat(&self) -> f64 {
        self.inner.q_hat
    }

    #[getter]
    fn sigma_floor(&self) -> f64 {
        self.inner.sigma_floor
    }

    /// Clamped prediction interval (lower, upper) for a point estimate.
    fn predict_range(&self, y_hat: f64, sigma: f64) -> (f64, f64) {
        let est = core::PerfEstimate {
            y_hat,
            per_sample: vec![y_hat, y_hat],
            sigma,
        };
        let r = core::predict_range(&est, &self.inner);
        (r.lower, r.upper)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core::save_model(&self.inner, path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ConformalModel(alpha={}, m={}, q_hat={}, sigma_floor={})",
            self.inner.alpha, self.inner.m, self.inner.q_hat, self.inner.sigma_floor
        )
    }
}

/// Calibrate from (y_hat, sigma, y_true) triples.
#[pyfunction]
#[pyo3(signature = (triples, alpha=0.1, sigma_floor=1e-6, created_from=""))]
fn calibrate(
    triples: Vec<(f64, f64, f64)>,
    alpha: f64,
    sigma_floor: f64,
    created_from: &str,
) -> PyResult<PyConformalModel> {
    let pairs: Vec<(core::PerfEstimate, f64)> = triples
        .into_iter()
        .map(|(y_hat, sigma, y_true)| {
            (
                core::PerfEstimate {
                    y_hat,
                    per_sample: vec![y_hat, y_hat],
                    sigma,
                },
                y_true,
            )
        })
        .collect();
    let model = core::calibrate(&pairs, alpha, sigma_floor, created_from).map_err(err)?;
    Ok(PyConformalModel { inner: model })
}

#[pyfunction]
fn load_model(path: PathBuf) -> PyResult<PyConformalModel> {
    Ok(PyConformalModel {
        inner: core::load_model(path).map_err(err)?,
    })
}

/// Generate a synthetic dataset; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, n_images=100, height=32, width=32, n_samples=20,
                    seed=0, difficulty_min=0.5, difficulty_max=3.0,
                    miscal_temperature=1.0, low_quality_fraction=0.0))]
#[allow(clippy::too_many_arguments)]
fn simulate_dataset(
    out_dir: PathBuf,
    n_images: usize,
    height: usize,
    width: usize,
    n_samples: usize,
    seed: u64,
    difficulty_min: f64,
    difficulty_max: f64,
    miscal_temperature: f64,
    low_quality_fraction: f64,
) -> PyResult<PathBuf> {
    let config = core::SimConfig {
        n_images,
        height,
        width,
        n_samples,
        seed,
        difficulty_range: (difficulty_min, difficulty_max),
        miscal_temperature,
        low_quality_fraction,
    };
    core::simulate_dataset(&config, &out_dir).map_err(err)?;
    Ok(out_dir.join("manifest.csv"))
}

#[pyfunction]
fn split_manifest(path: PathBuf, calib_fraction: f64, seed: u64) -> PyResult<()> {
    let manifest = core::read_manifest(&path).map_err(err)?;
    let split = core::split_manifest(&manifest, calib_fraction, seed).map_err(err)?;
    core::write_manifest(&path, &split).map_err(err)
}

type ManifestRow = (String, String, String, String, String);

/// Rows of the manifest as (image_id, stack_path, gt_path, quality, split).
#[pyfunction]
fn read_manifest(path: PathBuf) -> PyResult<Vec<ManifestRow>> {
    let manifest = core::read_manifest(&path).map_err(err)?;
    Ok(manifest
        .records
        .iter()
        .map(|r| {
            (
                r.image_id.clone(),
                manifest.resolve(&r.stack_path).display().to_string(),
                manifest.resolve(&r.gt_path).display().to_string(),
                r.quality_label.as_str().to_string(),
                r.split.as_str().to_string(),
            )
        })
        .collect())
}

/// Marginal coverage of (y_true, lower, upper) triples, inclusive bounds.
#[pyfunction]
fn marginal_coverage(triples: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    let records: Vec<core::PredictionRecord> = triples
        .iter()
        .enumerate()
        .map(|(i, &(y, lo, hi))| {
            core::PredictionRecord::new(format!("r{i}"), y, y, 0.0, lo, hi, QualityLabel::Unknown)
        })
        .collect();
    core::marginal_coverage(&records).map_err(err)
}

#[pymodule]
fn _perfrange(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(soft_confusion, m)?)?;
    m.add_function(wrap_pyfunction!(soft_dsc, m)?)?;
    m.add_function(wrap_pyfunction!(true_dsc, m)?)?;
    m.add_function(wrap_pyfunction!(apply_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(fit_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_performance, m)?)?;
    m.add_function(wrap_pyfunction!(write_tensor_f32, m)?)?;
    m.add_function(wrap_pyfunction!(write_tensor_u8, m)?)?;
    m.add_function(wrap_pyfunction!(read_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(split_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(read_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_coverage, m)?)?;
    m.add_class::<PyConformalModel>()?;
    Ok(())
}
