//! Python bindings for the strengthlab regression engine.
//!
//! Exposes the dataset tools (CSV loading, synthesis, statistics, splits),
//! the three hybrid model families with their shipped presets, the metric
//! and uncertainty computations, and SHAP attribution. Matrices cross the
//! boundary as plain lists of lists; model fitting releases the GIL.

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use strengthlab::dataset as ds;
use strengthlab::error::Error;
use strengthlab::evaluation as ev;
use strengthlab::explain as ex;
use strengthlab::hybrid as hy;
use strengthlab::rng::derive_seed;
use strengthlab::tuning as tu;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows_to_array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty row list"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("ragged row lengths"));
    }
    let mut x = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    Ok(x)
}

fn metrics_dict<'py>(py: Python<'py>, m: &ev::MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", m.n)?;
    d.set_item("y_mean", m.y_mean)?;
    d.set_item("rmse", m.rmse)?;
    d.set_item("mae", m.mae)?;
    d.set_item("r2", m.r2)?;
    d.set_item("rse", m.rse)?;
    d.set_item("rrmse", m.rrmse)?;
    d.set_item("pearson_r", m.pearson_r)?;
    d.set_item("pi", m.pi)?;
    d.set_item("pi_eq12", m.pi_eq12)?;
    Ok(d)
}

fn uncertainty_dict<'py>(
    py: Python<'py>,
    u: &ev::UncertaintyReport,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("u_abs", u.u_abs)?;
    d.set_item("u_norm", u.u_norm)?;
    d.set_item("rmse", u.rmse)?;
    d.set_item("sigma", u.sigma)?;
    d.set_item("z", u.z)?;
    d.set_item("y_mean", u.y_mean)?;
    Ok(d)
}

/// A named-column numeric table with one target column.
#[pyclass(name = "Dataset", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: ds::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Load a CSV file; `schema` pins the feature set and order.
    #[staticmethod]
    #[pyo3(signature = (path, target, schema=None))]
    fn load_csv(path: &str, target: &str, schema: Option<Vec<String>>) -> PyResult<Self> {
        let inner = ds::load_csv(path, schema.as_deref(), target).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    /// Draw a dataset matching a bundled stats profile (`table1`..`table3`).
    /// Ground truth is `cs_smooth` or `constant:<value>`.
    #[staticmethod]
    #[pyo3(signature = (n, preset="table1", ground_truth="cs_smooth", noise_std=0.0, seed=42))]
    fn synthesize(
        n: usize,
        preset: &str,
        ground_truth: &str,
        noise_std: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let stats = ds::stats_preset(preset).map_err(to_py_err)?;
        let gt = ds::GroundTruth::from_name(ground_truth).map_err(to_py_err)?;
        let inner = ds::synthesize(&stats, &gt, noise_std, n, seed).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    /// Build a dataset from in-memory columns.
    #[staticmethod]
    fn from_rows(
        feature_names: Vec<String>,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        target_name: String,
    ) -> PyResult<Self> {
        let x = rows_to_array(x)?;
        let inner = ds::Dataset::new(feature_names, x, y, target_name).map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn target_name(&self) -> String {
        self.inner.target_name.clone()
    }

    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn x(&self) -> Vec<Vec<f64>> {
        self.inner
            .x
            .outer_iter()
            .map(|row| row.to_vec())
            .collect()
    }

    fn y(&self) -> Vec<f64> {
        self.inner.y.clone()
    }

    /// Seven summary statistics per column (features then target).
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let table = ds::summarize(&self.inner);
        let out = PyList::empty(py);
        for c in &table.columns {
            let d = PyDict::new(py);
            d.set_item("column", &c.name)?;
            d.set_item("mean", c.mean)?;
            d.set_item("std", c.std)?;
            d.set_item("min", c.min)?;
            d.set_item("p25", c.p25)?;
            d.set_item("p50", c.p50)?;
            d.set_item("p75", c.p75)?;
            d.set_item("max", c.max)?;
            out.append(d)?;
        }
        Ok(out)
    }

    /// Pearson matrix over features plus the target: (names, rows).
    fn pearson(&self) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
        let m = ds::pearson_matrix(&self.inner).map_err(to_py_err)?;
        let rows = m.values.outer_iter().map(|r| r.to_vec()).collect();
        Ok((m.names, rows))
    }

    /// Seeded train/test split: (train_indices, test_indices).
    fn split(&self, ratio: f64, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
        let s = ds::split(&self.inner, ratio, seed).map_err(to_py_err)?;
        Ok((s.train, s.test))
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        for &i in &indices {
            if i >= self.inner.n_samples() {
                return Err(PyValueError::new_err(format!("row {i} out of range")));
            }
        }
        Ok(PyDataset {
            inner: self.inner.subset(&indices),
        })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, self.inner.to_csv_string())
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, d={}, target='{}')",
            self.inner.n_samples(),
            self.inner.n_features(),
            self.inner.target_name
        )
    }
}

/// A fitted two-stage hybrid model.
#[pyclass(name = "HybridModel")]
struct PyHybridModel {
    inner: hy::HybridModel,
}

#[pymethods]
impl PyHybridModel {
    /// Fit a hybrid on a dataset. `preset` is `table4`/`table6`/`table8`
    /// (default: the kind's own table); `params_json` overrides it with a
    /// full spec; `seed` rewires every stage seed from one master seed.
    #[staticmethod]
    #[pyo3(signature = (data, kind="et_xgb", preset=None, params_json=None, seed=None))]
    fn fit(
        py: Python<'_>,
        data: &PyDataset,
        kind: &str,
        preset: Option<&str>,
        params_json: Option<&str>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let kind = hy::HybridKind::from_name(kind).map_err(to_py_err)?;
        let mut spec = match (preset, params_json) {
            (Some(name), None) => hy::HybridSpec::preset(name).map_err(to_py_err)?,
            (None, Some(json)) => serde_json::from_str::<hy::HybridSpec>(json)
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
            (None, None) => hy::HybridSpec::default_for(kind),
            (Some(_), Some(_)) => {
                return Err(PyValueError::new_err(
                    "pass either preset or params_json, not both",
                ))
            }
        };
        if spec.kind != kind {
            return Err(PyValueError::new_err(format!(
                "spec is for kind `{}`",
                spec.kind.name()
            )));
        }
        if let Some(s) = seed {
            spec = spec.with_seed(s);
        }
        let inner = py
            .detach(|| hy::fit_hybrid(&data.inner, &spec))
            .map_err(to_py_err)?;
        Ok(PyHybridModel { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn predict(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = rows_to_array(rows)?;
        py.detach(|| self.inner.predict_batch(x.view()))
            .map_err(to_py_err)
    }

    /// Stage-1 output alone (forest mean or transformer head).
    fn predict_stage1(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = rows_to_array(rows)?;
        x.outer_iter()
            .map(|r| {
                self.inner
                    .stage1_predict(r.as_slice().expect("contiguous"))
                    .map_err(to_py_err)
            })
            .collect()
    }

    /// Train/test metric reports for a seeded split of `data`.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        data: &PyDataset,
        ratio: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let split = ds::split(&data.inner, ratio, seed).map_err(to_py_err)?;
        let eval = py
            .detach(|| hy::evaluate_hybrid(&self.inner, &data.inner, &split))
            .map_err(to_py_err)?;
        let out = PyDict::new(py);
        out.set_item("train", metrics_dict(py, &eval.train.metrics)?)?;
        out.set_item("test", metrics_dict(py, &eval.test.metrics)?)?;
        Ok(out)
    }

    /// Path-dependent SHAP attributions: (values, base_value, feature_names).
    /// Transformer hybrids attribute over their encoded feature space.
    fn shap(
        &self,
        py: Python<'_>,
        data: &PyDataset,
    ) -> PyResult<(Vec<Vec<f64>>, f64, Vec<String>)> {
        let shap = py
            .detach(|| -> Result<ex::ShapMatrix, Error> {
                let ids: Vec<usize> = (0..data.inner.n_samples()).collect();
                match self.inner.feature_space {
                    hy::FeatureSpace::Raw => ex::shap_matrix(
                        ex::TreeEnsembleRef::Hybrid(&self.inner),
                        data.inner.x.view(),
                        ids,
                        data.inner.feature_names.clone(),
                    ),
                    hy::FeatureSpace::Encoded => {
                        let z = hy::encode_dataset(&self.inner, data.inner.x.view())?;
                        let names: Vec<String> =
                            (0..z.ncols()).map(|j| format!("repr_{j}")).collect();
                        ex::shap_matrix(&self.inner.stage2, z.view(), ids, names)
                    }
                }
            })
            .map_err(to_py_err)?;
        let values = shap.values.outer_iter().map(|r| r.to_vec()).collect();
        Ok((values, shap.base_value, shap.feature_names))
    }

    /// Features ranked by mean |SHAP| over `data`, descending.
    fn importance(&self, py: Python<'_>, data: &PyDataset) -> PyResult<Vec<(String, f64)>> {
        let (values, _, names) = self.shap(py, data)?;
        let x = rows_to_array(values)?;
        let shap = ex::ShapMatrix {
            values: x,
            base_value: 0.0,
            feature_names: names,
            sample_ids: (0..data.inner.n_samples()).collect(),
        };
        Ok(ex::global_importance(&shap).entries)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py_err)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(PyHybridModel {
            inner: hy::HybridModel::from_json(json).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, self.inner.to_json().map_err(to_py_err)?)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(PyHybridModel {
            inner: hy::HybridModel::from_json(&text).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("HybridModel(kind='{}')", self.inner.kind.name())
    }
}

/// The seven regression metrics for one (y, y_hat) pair.
#[pyfunction]
fn evaluate_metrics<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    yhat: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = ev::evaluate(&y, &yhat).map_err(to_py_err)?;
    metrics_dict(py, &m)
}

/// Absolute and normalized uncertainty indices.
#[pyfunction]
#[pyo3(signature = (y, yhat, z=1.96))]
fn uncertainty_indices<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    yhat: Vec<f64>,
    z: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let u = ev::uncertainty(&y, &yhat, z).map_err(to_py_err)?;
    uncertainty_dict(py, &u)
}

/// Seeded k-fold partition of `0..n`.
#[pyfunction]
fn kfold(n: usize, k: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
    tu::kfold(n, k, seed).map_err(to_py_err)
}

/// Seeded shuffle split of `0..n`: (train_indices, test_indices).
#[pyfunction]
fn train_test_split(n: usize, ratio: f64, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let s = ds::split_n(n, ratio, seed).map_err(to_py_err)?;
    Ok((s.train, s.test))
}

/// Row-wise `softmax(Q K^T / sqrt(d_k)) V`.
#[pyfunction]
fn scaled_dot_attention(
    q: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let (q, k, v) = (rows_to_array(q)?, rows_to_array(k)?, rows_to_array(v)?);
    let out = strengthlab::attention::scaled_dot_attention(q.view(), k.view(), v.view())
        .map_err(to_py_err)?;
    Ok(out.outer_iter().map(|r| r.to_vec()).collect())
}

/// Regularized optimal leaf weight `-soft(G, alpha)/(H + lambda)`.
#[pyfunction]
fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> PyResult<f64> {
    strengthlab::boosting::leaf_weight(g, h, alpha, lambda).map_err(to_py_err)
}

/// Structure-score gain of a split, minus the per-leaf penalty.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn split_gain(
    gl: f64,
    hl: f64,
    gr: f64,
    hr: f64,
    alpha: f64,
    lambda: f64,
    gamma: f64,
) -> PyResult<f64> {
    strengthlab::boosting::split_gain(gl, hl, gr, hr, alpha, lambda, gamma).map_err(to_py_err)
}

/// Derive an independent substream seed.
#[pyfunction]
fn derive_substream_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, index)
}

#[pymodule]
fn strengthlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyHybridModel>()?;
    m.add_function(wrap_pyfunction!(evaluate_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_indices, m)?)?;
    m.add_function(wrap_pyfunction!(kfold, m)?)?;
    m.add_function(wrap_pyfunction!(train_test_split, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_dot_attention, m)?)?;
    m.add_function(wrap_pyfunction!(leaf_weight, m)?)?;
    m.add_function(wrap_pyfunction!(split_gain, m)?)?;
    m.add_function(wrap_pyfunction!(derive_substream_seed, m)?)?;
    Ok(())
}
