//! Dense symmetric linear algebra kernel.
//!
//! Everything the estimators need from a matrix library, hand-rolled for
//! determinism: cyclic Jacobi eigendecomposition with a fixed sweep order and
//! sign convention, spectral norms, the padded submatrix of a symmetric
//! matrix, orthonormal bases, projections, and the sin-theta subspace loss.
//!
//! All operations are pure functions on immutable inputs.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative off-diagonal threshold at which Jacobi sweeps stop.
const JACOBI_REL_TOL: f64 = 1e-12;
/// Hard cap on the number of cyclic sweeps.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Orthonormality tolerance for [`OrthoBasis`] construction.
const ORTHO_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// IndexSet
// ---------------------------------------------------------------------------

/// A sorted, duplicate-free set of 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Build from arbitrary order; rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet("duplicate index".into()));
        }
        Ok(IndexSet { indices })
    }

    /// The empty set.
    pub fn empty() -> Self {
        IndexSet { indices: Vec::new() }
    }

    /// The full set `0..p`.
    pub fn full(p: usize) -> Self {
        IndexSet {
            indices: (0..p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Complement within `0..p`. Panics if any member is `>= p`.
    pub fn complement(&self, p: usize) -> IndexSet {
        assert!(
            self.indices.iter().all(|&i| i < p),
            "index set member out of range for p = {p}"
        );
        IndexSet {
            indices: (0..p).filter(|i| !self.contains(*i)).collect(),
        }
    }
}

impl TryFrom<Vec<usize>> for IndexSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        IndexSet::new(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Vec<usize> {
        s.indices
    }
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

/// A dense p×p symmetric matrix, stored row-major with exact symmetry
/// enforced at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct SymMatrix {
    p: usize,
    /// Row-major entries, length p*p, with `data[i*p+j] == data[j*p+i]` exactly.
    data: Vec<f64>,
}

/// Serde surrogate so deserialized matrices re-validate their invariants.
#[derive(Serialize, Deserialize)]
struct RawMatrix {
    p: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for SymMatrix {
    type Error = Error;
    fn try_from(r: RawMatrix) -> Result<Self> {
        SymMatrix::new(r.p, r.data)
    }
}

impl From<SymMatrix> for RawMatrix {
    fn from(m: SymMatrix) -> RawMatrix {
        RawMatrix { p: m.p, data: m.data }
    }
}

impl SymMatrix {
    /// Construct from row-major entries; checks bit-exact symmetry and p ≥ 1.
    pub fn new(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Dimension("p must be at least 1".into()));
        }
        if data.len() != p * p {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {p}x{p} matrix, got {}",
                p * p,
                data.len()
            )));
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let (a, b) = (data[i * p + j], data[j * p + i]);
                if a != b && !(a.is_nan() && b.is_nan()) {
                    return Err(Error::NotSymmetric { i, j, a, b });
                }
            }
        }
        Ok(SymMatrix { p, data })
    }

    /// Construct from nested rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("rows must form a square matrix".into()));
        }
        SymMatrix::new(p, rows.into_iter().flatten().collect())
    }

    /// Build from a function of (i, j); only i ≤ j is evaluated and the
    /// result is mirrored, so symmetry is exact by construction.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(p >= 1, "p must be at least 1");
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = f(i, j);
                data[i * p + j] = v;
                data[j * p + i] = v;
            }
        }
        SymMatrix { p, data }
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(p: usize) -> Self {
        assert!(p >= 1, "p must be at least 1");
        SymMatrix {
            p,
            data: vec![0.0; p * p],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        SymMatrix::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.p).map(|i| self.get(i, i)).sum()
    }

    /// Entry-wise difference; panics on dimension mismatch.
    pub fn difference(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.p, other.p, "dimension mismatch in matrix difference");
        SymMatrix {
            p: self.p,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

// ---------------------------------------------------------------------------
// Jacobi eigendecomposition
// ---------------------------------------------------------------------------

/// Cyclic Jacobi on a row-major n×n symmetric buffer, in place.
///
/// Sweeps visit (i, j), i < j, in row-major order; rotations use the stable
/// Numerical-Recipes parametrization. Stops when the off-diagonal Frobenius
/// norm falls below `JACOBI_REL_TOL` times the Frobenius norm of the input,
/// capped at `JACOBI_MAX_SWEEPS` sweeps. If `vecs` is provided it must hold
/// an n×n buffer which is overwritten with the accumulated rotations
/// (columns are eigenvectors, unsorted).
pub(crate) fn jacobi_inplace(a: &mut [f64], n: usize, mut vecs: Option<&mut [f64]>) {
    debug_assert_eq!(a.len(), n * n);
    if let Some(v) = vecs.as_deref_mut() {
        debug_assert_eq!(v.len(), n * n);
        for x in v.iter_mut() {
            *x = 0.0;
        }
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
    }
    if n < 2 {
        return;
    }
    let norm_all = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = JACOBI_REL_TOL * norm_all;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for i in 0..(n - 1) {
            for j in (i + 1)..n {
                let apq = a[i * n + j];
                if apq == 0.0 {
                    continue;
                }
                let app = a[i * n + i];
                let aqq = a[j * n + j];
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, smaller root for stability
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[i * n + i] = app - t * apq;
                a[j * n + j] = aqq + t * apq;
                a[i * n + j] = 0.0;
                a[j * n + i] = 0.0;
                for k in 0..n {
                    if k != i && k != j {
                        let aki = a[k * n + i];
                        let akj = a[k * n + j];
                        let new_ki = aki - s * (akj + tau * aki);
                        let new_kj = akj + s * (aki - tau * akj);
                        a[k * n + i] = new_ki;
                        a[i * n + k] = new_ki;
                        a[k * n + j] = new_kj;
                        a[j * n + k] = new_kj;
                    }
                }
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vki = v[k * n + i];
                        let vkj = v[k * n + j];
                        v[k * n + i] = vki - s * (vkj + tau * vki);
                        v[k * n + j] = vkj + s * (vki - tau * vkj);
                    }
                }
            }
        }
    }
}

/// Eigenvalues only, descending, of a row-major symmetric buffer.
/// The buffer is destroyed. Used on small blocks in hot loops.
pub(crate) fn eigenvalues_inplace(a: &mut [f64], n: usize) -> Vec<f64> {
    jacobi_inplace(a, n, None);
    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    vals.sort_by(|x, y| y.partial_cmp(x).expect("NaN eigenvalue"));
    vals
}

/// Largest absolute eigenvalue of a row-major symmetric buffer (destroyed).
pub(crate) fn spectral_norm_inplace(a: &mut [f64], n: usize) -> f64 {
    jacobi_inplace(a, n, None);
    (0..n).fold(0.0, |m, i| m.max(a[i * n + i].abs()))
}

/// An eigendecomposition A = V Λ V' with eigenvalues descending and a fixed
/// sign convention (each eigenvector's largest-magnitude entry is positive,
/// ties broken by lowest index).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    p: usize,
    /// Descending eigenvalues.
    values: Vec<f64>,
    /// Column-major p×p; column i pairs with `values[i]`.
    vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Eigenvector i as a contiguous column slice.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.p..(i + 1) * self.p]
    }

    /// The top-r eigenvectors as an orthonormal basis; r = 0 gives an empty
    /// basis.
    pub fn leading_basis(&self, r: usize) -> OrthoBasis {
        assert!(r <= self.p, "rank exceeds dimension");
        OrthoBasis {
            p: self.p,
            r,
            cols: self.vectors[..r * self.p].to_vec(),
        }
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Deterministic for identical input: fixed sweep order, descending stable
/// sort, and the sign convention described on [`EigenDecomp`]. Ties among
/// equal eigenvalues keep the deterministic sweep outcome's order, so tests
/// comparing degenerate spectra should compare projectors, not vectors.
pub fn eig_sym(a: &SymMatrix) -> EigenDecomp {
    let p = a.dim();
    let mut m = a.data.clone();
    let mut v = vec![0.0; p * p];
    jacobi_inplace(&mut m, p, Some(&mut v));

    let mut order: Vec<usize> = (0..p).collect();
    // stable sort: ties keep sweep order
    order.sort_by(|&x, &y| {
        m[y * p + y]
            .partial_cmp(&m[x * p + x])
            .expect("NaN eigenvalue")
    });

    let mut values = Vec::with_capacity(p);
    let mut vectors = vec![0.0; p * p];
    for (dst, &src) in order.iter().enumerate() {
        values.push(m[src * p + src]);
        let col = &mut vectors[dst * p..(dst + 1) * p];
        for k in 0..p {
            col[k] = v[k * p + src];
        }
        // sign convention: largest-magnitude entry positive, ties by lowest index
        let mut best = 0;
        for k in 1..p {
            if col[k].abs() > col[best].abs() {
                best = k;
            }
        }
        if col[best] < 0.0 {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
    }
    EigenDecomp { p, values, vectors }
}

/// Spectral norm ‖A‖ = max |σ_i(A)| of a symmetric matrix.
pub fn spectral_norm(a: &SymMatrix) -> f64 {
    let mut m = a.data.clone();
    spectral_norm_inplace(&mut m, a.p)
}

/// The padded matrix A_B: keeps the B×B block of `a`, puts ones on the
/// complement diagonal and zeros elsewhere.
///
/// Panics if `b` contains an index ≥ p.
pub fn pad_submatrix(a: &SymMatrix, b: &IndexSet) -> SymMatrix {
    let p = a.dim();
    assert!(
        b.iter().all(|&i| i < p),
        "pad_submatrix: index out of range for p = {p}"
    );
    let mut out = SymMatrix::zeros(p);
    for i in 0..p {
        out.data[i * p + i] = 1.0;
    }
    for &i in b.iter() {
        for &j in b.iter() {
            out.data[i * p + j] = a.get(i, j);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// OrthoBasis and subspace loss
// ---------------------------------------------------------------------------

/// A p×r matrix with orthonormal columns (possibly r = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis", into = "RawBasis")]
pub struct OrthoBasis {
    p: usize,
    r: usize,
    /// Column-major p×r entries.
    cols: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBasis {
    p: usize,
    r: usize,
    cols: Vec<f64>,
}

impl TryFrom<RawBasis> for OrthoBasis {
    type Error = Error;
    fn try_from(r: RawBasis) -> Result<Self> {
        OrthoBasis::new(r.p, r.r, r.cols)
    }
}

impl From<OrthoBasis> for RawBasis {
    fn from(b: OrthoBasis) -> RawBasis {
        RawBasis {
            p: b.p,
            r: b.r,
            cols: b.cols,
        }
    }
}

impl OrthoBasis {
    /// Construct from column-major entries; verifies V'V = I within 1e-9.
    pub fn new(p: usize, r: usize, cols: Vec<f64>) -> Result<Self> {
        if r > p {
            return Err(Error::Dimension(format!("rank {r} exceeds dimension {p}")));
        }
        if cols.len() != p * r {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {p}x{r} basis, got {}",
                p * r,
                cols.len()
            )));
        }
        let b = OrthoBasis { p, r, cols };
        for i in 0..r {
            for j in i..r {
                let dot: f64 = (0..p).map(|k| b.col(i)[k] * b.col(j)[k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                let dev = (dot - target).abs();
                if dev > ORTHO_TOL {
                    return Err(Error::NotOrthonormal { i, j, dev });
                }
            }
        }
        Ok(b)
    }

    /// The empty basis of rank 0.
    pub fn empty(p: usize) -> Self {
        OrthoBasis {
            p,
            r: 0,
            cols: Vec::new(),
        }
    }

    /// Basis of standard unit vectors e_i for i in `axes`.
    pub fn from_axes(p: usize, axes: &[usize]) -> Result<Self> {
        let mut cols = vec![0.0; p * axes.len()];
        for (c, &i) in axes.iter().enumerate() {
            if i >= p {
                return Err(Error::Dimension(format!("axis {i} out of range for p = {p}")));
            }
            cols[c * p + i] = 1.0;
        }
        OrthoBasis::new(p, axes.len(), cols)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn col(&self, i: usize) -> &[f64] {
        &self.cols[i * self.p..(i + 1) * self.p]
    }

    pub fn cols_flat(&self) -> &[f64] {
        &self.cols
    }

    /// The projection matrix VV'.
    pub fn projection(&self) -> SymMatrix {
        let p = self.p;
        SymMatrix::from_fn(p, |i, j| {
            (0..self.r).map(|c| self.col(c)[i] * self.col(c)[j]).sum()
        })
    }

    /// Indices of rows that are not exactly zero.
    pub fn row_support(&self) -> IndexSet {
        let mut idx = Vec::new();
        for i in 0..self.p {
            if (0..self.r).any(|c| self.col(c)[i] != 0.0) {
                idx.push(i);
            }
        }
        IndexSet { indices: idx }
    }
}

/// Spectral norm of the projector difference ‖VV' − WW'‖.
///
/// Panics if the ambient dimensions differ; ranks may differ.
pub fn projector_distance(v: &OrthoBasis, w: &OrthoBasis) -> f64 {
    assert_eq!(
        v.dim(),
        w.dim(),
        "sin_theta_loss: ambient dimensions differ"
    );
    let diff = v.projection().difference(&w.projection());
    spectral_norm(&diff)
}

/// Squared sin-theta loss ‖VV' − WW'‖², clamped into [0, 1] against roundoff.
pub fn sin_theta_loss(v: &OrthoBasis, w: &OrthoBasis) -> f64 {
    let d = projector_distance(v, w);
    (d * d).clamp(0.0, 1.0)
}

/// Rank-r projection matrix from the top-r eigenvectors; r = 0 gives zeros.
pub fn principal_projection(d: &EigenDecomp, r: usize) -> SymMatrix {
    assert!(r <= d.dim(), "rank exceeds dimension");
    d.leading_basis(r).projection()
}
