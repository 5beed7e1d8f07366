//! Python bindings for the spikecov library.
//!
//! Exposes the core types (`SymMatrix`, `OrthoBasis`, `SpikedModel`,
//! `SelectorConfig`, `EstimationResult`) and the main operations: the
//! eigendecomposition kernel, the support-selection estimation pipeline, and
//! the lower-bound machinery. Matrices cross the boundary as plain nested
//! lists; indices are 0-based.
//!
//! Build with `cargo build -p spikecov-py --release`, then import the
//! produced `libspikecov_py.so` as `spikecov.so` (see python/smoke_test.py).

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spikecov::error::Error;
use spikecov::estimators;
use spikecov::lowerbound;
use spikecov::matcore;
use spikecov::model;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows_to_sample(rows: Vec<Vec<f64>>) -> PyResult<model::SampleMatrix> {
    let n = rows.len();
    let p = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows must have equal length"));
    }
    model::SampleMatrix::new(n, p, rows.into_iter().flatten().collect()).map_err(to_py_err)
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A dense symmetric matrix.
#[pyclass(name = "SymMatrix", frozen, from_py_object)]
#[derive(Clone)]
struct PySymMatrix {
    inner: matcore::SymMatrix,
}

#[pymethods]
impl PySymMatrix {
    /// Build from nested rows; entries must be exactly symmetric.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PySymMatrix {
            inner: matcore::SymMatrix::from_rows(rows).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn identity(p: usize) -> Self {
        PySymMatrix {
            inner: matcore::SymMatrix::identity(p),
        }
    }

    #[staticmethod]
    fn diagonal(d: Vec<f64>) -> Self {
        PySymMatrix {
            inner: matcore::SymMatrix::diagonal(&d),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.dim() || j >= self.inner.dim() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(i, j))
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.dim()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    fn __repr__(&self) -> String {
        format!("SymMatrix(p={})", self.inner.dim())
    }
}

/// A matrix with orthonormal columns spanning a subspace.
#[pyclass(name = "OrthoBasis", frozen, from_py_object)]
#[derive(Clone)]
struct PyOrthoBasis {
    inner: matcore::OrthoBasis,
}

#[pymethods]
impl PyOrthoBasis {
    /// Build from a list of orthonormal columns (each of length p).
    #[new]
    fn new(columns: Vec<Vec<f64>>) -> PyResult<Self> {
        let r = columns.len();
        let p = columns.first().map(|c| c.len()).unwrap_or(0);
        if columns.iter().any(|c| c.len() != p) {
            return Err(PyValueError::new_err("columns must have equal length"));
        }
        let flat: Vec<f64> = columns.into_iter().flatten().collect();
        Ok(PyOrthoBasis {
            inner: matcore::OrthoBasis::new(p, r, flat).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn empty(p: usize) -> Self {
        PyOrthoBasis {
            inner: matcore::OrthoBasis::empty(p),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.inner.rank()).map(|c| self.inner.col(c).to_vec()).collect()
    }

    fn projection(&self) -> PySymMatrix {
        PySymMatrix {
            inner: self.inner.projection(),
        }
    }

    fn row_support(&self) -> Vec<usize> {
        self.inner.row_support().as_slice().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("OrthoBasis(p={}, r={})", self.inner.dim(), self.inner.rank())
    }
}

/// Ground-truth spiked covariance model Σ = VΛV' + I.
#[pyclass(name = "SpikedModel", frozen, from_py_object)]
#[derive(Clone)]
struct PySpikedModel {
    inner: model::SpikedModel,
}

#[pymethods]
impl PySpikedModel {
    /// Rank-r model on an explicit orthonormal basis.
    #[new]
    fn new(p: usize, k: usize, basis: PyOrthoBasis, spikes: Vec<f64>) -> PyResult<Self> {
        Ok(PySpikedModel {
            inner: model::SpikedModel::new(p, k, basis.inner, spikes).map_err(to_py_err)?,
        })
    }

    /// The pure-noise model Σ = I.
    #[staticmethod]
    fn identity(p: usize, k: usize) -> PyResult<Self> {
        Ok(PySpikedModel {
            inner: model::SpikedModel::identity(p, k).map_err(to_py_err)?,
        })
    }

    /// Rank-one model I + λ·vv' from a unit vector.
    #[staticmethod]
    fn rank_one(p: usize, k: usize, v: Vec<f64>, lam: f64) -> PyResult<Self> {
        Ok(PySpikedModel {
            inner: model::SpikedModel::rank_one(p, k, v, lam).map_err(to_py_err)?,
        })
    }

    /// Model with a seeded random orthonormal basis on the given support.
    #[staticmethod]
    fn seeded(p: usize, k: usize, support: Vec<usize>, spikes: Vec<f64>, seed: u64) -> PyResult<Self> {
        let support = matcore::IndexSet::new(support).map_err(to_py_err)?;
        let basis = model::seeded_basis(p, &support, spikes.len(), seed).map_err(to_py_err)?;
        Ok(PySpikedModel {
            inner: model::SpikedModel::new(p, k, basis, spikes).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r()
    }

    #[getter]
    fn spikes(&self) -> Vec<f64> {
        self.inner.spikes().to_vec()
    }

    fn basis(&self) -> PyOrthoBasis {
        PyOrthoBasis {
            inner: self.inner.basis().clone(),
        }
    }

    fn support(&self) -> Vec<usize> {
        self.inner.support().as_slice().to_vec()
    }

    fn covariance(&self) -> PySymMatrix {
        PySymMatrix {
            inner: self.inner.build_covariance(),
        }
    }

    fn precision(&self) -> PySymMatrix {
        PySymMatrix {
            inner: self.inner.build_precision(),
        }
    }

    /// Draw an n×p data matrix (nested rows), deterministic per seed.
    fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let x = self.inner.sample(n, seed);
        (0..x.n()).map(|i| x.row(i).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SpikedModel(p={}, k={}, r={})",
            self.inner.p(),
            self.inner.k(),
            self.inner.r()
        )
    }
}

/// Support-selector hyperparameters.
#[pyclass(name = "SelectorConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PySelectorConfig {
    inner: estimators::SelectorConfig,
}

#[pymethods]
impl PySelectorConfig {
    #[new]
    #[pyo3(signature = (k, gamma1=None, gamma2=None, budget=None))]
    fn new(k: usize, gamma1: Option<f64>, gamma2: Option<f64>, budget: Option<u64>) -> PyResult<Self> {
        let mut cfg = estimators::SelectorConfig::new(k);
        if let Some(g1) = gamma1 {
            cfg = cfg.with_gamma1(g1).map_err(to_py_err)?;
        }
        if let Some(g2) = gamma2 {
            cfg = cfg.with_gamma2(g2);
        }
        if let Some(b) = budget {
            cfg = cfg.with_budget(b);
        }
        Ok(PySelectorConfig { inner: cfg })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn gamma1(&self) -> f64 {
        self.inner.gamma1
    }

    #[getter]
    fn gamma2(&self) -> f64 {
        self.inner.gamma2
    }

    #[getter]
    fn budget(&self) -> u64 {
        self.inner.budget
    }

    fn __repr__(&self) -> String {
        format!(
            "SelectorConfig(k={}, gamma1={}, gamma2={}, budget={})",
            self.inner.k, self.inner.gamma1, self.inner.gamma2, self.inner.budget
        )
    }
}

/// Output of the full estimation pipeline.
#[pyclass(name = "EstimationResult", frozen)]
struct PyEstimationResult {
    inner: estimators::EstimationResult,
}

#[pymethods]
impl PyEstimationResult {
    #[getter]
    fn bk_nonempty(&self) -> bool {
        self.inner.bk_nonempty
    }

    #[getter]
    fn a_hat(&self) -> Option<Vec<usize>> {
        self.inner.a_hat.as_ref().map(|a| a.as_slice().to_vec())
    }

    #[getter]
    fn sigma_hat(&self) -> PySymMatrix {
        PySymMatrix {
            inner: self.inner.sigma_hat.clone(),
        }
    }

    #[getter]
    fn r_hat(&self) -> usize {
        self.inner.r_hat
    }

    #[getter]
    fn v_hat(&self) -> PyOrthoBasis {
        PyOrthoBasis {
            inner: self.inner.v_hat.clone(),
        }
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimationResult(bk_nonempty={}, r_hat={})",
            self.inner.bk_nonempty, self.inner.r_hat
        )
    }
}

// ---------------------------------------------------------------------------
// Kernel operations
// ---------------------------------------------------------------------------

/// Eigendecomposition: returns (values descending, eigenvector columns).
#[pyfunction]
fn eig_sym(a: &PySymMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = matcore::eig_sym(&a.inner);
    let p = d.dim();
    let vectors = (0..p).map(|i| d.vector(i).to_vec()).collect();
    (d.values().to_vec(), vectors)
}

#[pyfunction]
fn spectral_norm(a: &PySymMatrix) -> f64 {
    matcore::spectral_norm(&a.inner)
}

/// The padded matrix A_B: B×B block kept, identity elsewhere.
#[pyfunction]
fn pad_submatrix(a: &PySymMatrix, b: Vec<usize>) -> PyResult<PySymMatrix> {
    let b = matcore::IndexSet::new(b).map_err(to_py_err)?;
    if b.iter().any(|&i| i >= a.inner.dim()) {
        return Err(PyValueError::new_err("index out of range"));
    }
    Ok(PySymMatrix {
        inner: matcore::pad_submatrix(&a.inner, &b),
    })
}

/// Squared sin-theta loss ‖VV' − WW'‖² in [0, 1].
#[pyfunction]
fn sin_theta_loss(v: &PyOrthoBasis, w: &PyOrthoBasis) -> PyResult<f64> {
    if v.inner.dim() != w.inner.dim() {
        return Err(PyValueError::new_err("ambient dimensions differ"));
    }
    Ok(matcore::sin_theta_loss(&v.inner, &w.inner))
}

/// Rank-r projection onto the top-r eigenvectors of a.
#[pyfunction]
fn principal_projection(a: &PySymMatrix, r: usize) -> PyResult<PySymMatrix> {
    if r > a.inner.dim() {
        return Err(PyValueError::new_err("rank exceeds dimension"));
    }
    Ok(PySymMatrix {
        inner: matcore::principal_projection(&matcore::eig_sym(&a.inner), r),
    })
}

/// S = (1/n) X'X from nested rows.
#[pyfunction]
fn sample_covariance(rows: Vec<Vec<f64>>) -> PyResult<PySymMatrix> {
    Ok(PySymMatrix {
        inner: rows_to_sample(rows)?.sample_covariance(),
    })
}

// ---------------------------------------------------------------------------
// Estimation pipeline
// ---------------------------------------------------------------------------

/// The deviation allowance η(m, n, p, γ₁).
#[pyfunction]
fn eta(m: usize, n: usize, p: usize, gamma1: f64) -> PyResult<f64> {
    if !(1 <= m && m <= p) || n < 1 || gamma1 <= 0.0 {
        return Err(PyValueError::new_err("need 1 ≤ m ≤ p, n ≥ 1, γ₁ > 0"));
    }
    Ok(estimators::eta(m, n, p, gamma1))
}

#[pyfunction]
fn is_admissible_support(
    s: &PySymMatrix,
    n: usize,
    b: Vec<usize>,
    cfg: &PySelectorConfig,
) -> PyResult<bool> {
    let b = matcore::IndexSet::new(b).map_err(to_py_err)?;
    if b.len() != cfg.inner.k {
        return Err(PyValueError::new_err("candidate support must have k elements"));
    }
    estimators::is_admissible_support(&s.inner, n, &b, &cfg.inner).map_err(to_py_err)
}

#[pyfunction]
fn select_support(s: &PySymMatrix, n: usize, cfg: &PySelectorConfig) -> PyResult<Option<Vec<usize>>> {
    Ok(estimators::select_support(&s.inner, n, &cfg.inner)
        .map_err(to_py_err)?
        .map(|a| a.as_slice().to_vec()))
}

/// Full pipeline: support selection, Σ̂, r̂, V̂.
#[pyfunction]
fn estimate_all(s: &PySymMatrix, n: usize, cfg: &PySelectorConfig) -> PyResult<PyEstimationResult> {
    Ok(PyEstimationResult {
        inner: estimators::estimate_all(&s.inner, n, &cfg.inner).map_err(to_py_err)?,
    })
}

/// Ω̂ = Σ̂⁻¹ when σ_p(Σ̂) ≥ 1/2, I otherwise.
#[pyfunction]
fn estimate_precision(sigma_hat: &PySymMatrix) -> PySymMatrix {
    PySymMatrix {
        inner: estimators::estimate_precision(&sigma_hat.inner),
    }
}

/// Ê = σ_i(Σ̂) − 1, descending.
#[pyfunction]
fn estimate_eigenvalues(sigma_hat: &PySymMatrix) -> Vec<f64> {
    estimators::estimate_eigenvalues(&sigma_hat.inner)
}

/// Median of the diagonal of S.
#[pyfunction]
fn estimate_noise_variance(s: &PySymMatrix) -> f64 {
    estimators::estimate_noise_variance(&s.inner)
}

/// Smallest k whose admissible family is non-empty.
#[pyfunction]
fn adaptive_k(s: &PySymMatrix, n: usize, cfg: &PySelectorConfig) -> PyResult<Option<usize>> {
    estimators::adaptive_k(&s.inner, n, &cfg.inner).map_err(to_py_err)
}

// ---------------------------------------------------------------------------
// Lower bounds
// ---------------------------------------------------------------------------

/// E[exp(t G_H²)] for H ~ Hypergeometric(p, k, k).
#[pyfunction]
fn stopped_walk_mgf(p: usize, k: usize, t: f64) -> PyResult<f64> {
    if !(1 <= k && k <= p) || t < 0.0 {
        return Err(PyValueError::new_err("need 1 ≤ k ≤ p and t ≥ 0"));
    }
    Ok(lowerbound::stopped_walk_mgf(p, k, t))
}

/// The closed-form bound g(a), 0 < a < 1/36.
#[pyfunction]
fn g_bound(a: f64) -> PyResult<f64> {
    lowerbound::g_bound(a).map_err(to_py_err)
}

#[pyfunction]
fn mgf_tightness_lb(p: usize, k: usize, t: f64) -> PyResult<f64> {
    if !(1 <= k && k <= p) || t < 0.0 {
        return Err(PyValueError::new_err("need 1 ≤ k ≤ p and t ≥ 0"));
    }
    Ok(lowerbound::mgf_tightness_lb(p, k, t))
}

/// Exact χ² of the rank-one mixture; may return inf at λ = 1.
#[pyfunction]
fn chi2_rank_one_exact(n: usize, lam: f64, p: usize, k: usize) -> PyResult<f64> {
    lowerbound::chi2_rank_one_exact(n, lam, p, k).map_err(to_py_err)
}

/// The MGF surrogate E[exp(nλ²G_H²/k²)] − 1.
#[pyfunction]
fn chi2_surrogate(n: usize, lam: f64, p: usize, k: usize) -> PyResult<f64> {
    if lam < 0.0 {
        return Err(PyValueError::new_err("need λ ≥ 0"));
    }
    Ok(lowerbound::chi2_surrogate(n, lam, p, k))
}

/// The floor w(β₀) = max{0, 1 − √((g(β₀) − 1)/2)}.
#[pyfunction]
fn testing_error_lb(beta0: f64) -> PyResult<f64> {
    lowerbound::testing_error_lb(beta0).map_err(to_py_err)
}

/// λ = 1 ∧ √(β₀ (k/n) log(ep/k)).
#[pyfunction]
fn detection_threshold(beta0: f64, k: usize, p: usize, n: usize) -> PyResult<f64> {
    if beta0 < 0.0 || !(1 <= k && k <= p) || n < 1 {
        return Err(PyValueError::new_err("need β₀ ≥ 0, 1 ≤ k ≤ p, n ≥ 1"));
    }
    Ok(lowerbound::detection_threshold(beta0, k, p, n))
}

/// Log likelihood ratio of the k-sparse Rademacher mixture on data rows.
#[pyfunction]
fn lr_mixture_stat(rows: Vec<Vec<f64>>, lam: f64, k: usize, budget: u64) -> PyResult<f64> {
    let x = rows_to_sample(rows)?;
    if lam < 0.0 || k < 1 || k > x.p() {
        return Err(PyValueError::new_err("need λ ≥ 0 and 1 ≤ k ≤ p"));
    }
    lowerbound::lr_mixture_stat(&x, lam, k, budget).map_err(to_py_err)
}

/// A draw from the uniform k-sparse Rademacher prior.
#[pyfunction]
fn draw_rademacher(p: usize, k: usize, seed: u64) -> PyResult<Vec<f64>> {
    if !(1 <= k && k <= p) {
        return Err(PyValueError::new_err("need 1 ≤ k ≤ p"));
    }
    Ok(model::draw_prior(&model::SparsePrior::RademacherUniform { p, k }, seed).u)
}

#[pymodule]
fn spikecov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymMatrix>()?;
    m.add_class::<PyOrthoBasis>()?;
    m.add_class::<PySpikedModel>()?;
    m.add_class::<PySelectorConfig>()?;
    m.add_class::<PyEstimationResult>()?;
    m.add_function(wrap_pyfunction!(eig_sym, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(pad_submatrix, m)?)?;
    m.add_function(wrap_pyfunction!(sin_theta_loss, m)?)?;
    m.add_function(wrap_pyfunction!(principal_projection, m)?)?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible_support, m)?)?;
    m.add_function(wrap_pyfunction!(select_support, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_all, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_precision, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_noise_variance, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_k, m)?)?;
    m.add_function(wrap_pyfunction!(stopped_walk_mgf, m)?)?;
    m.add_function(wrap_pyfunction!(g_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mgf_tightness_lb, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_rank_one_exact, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(testing_error_lb, m)?)?;
    m.add_function(wrap_pyfunction!(detection_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(lr_mixture_stat, m)?)?;
    m.add_function(wrap_pyfunction!(draw_rademacher, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
