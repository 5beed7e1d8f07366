//! Ground-truth spiked covariance models.
//!
//! A spiked model is Σ = VΛV' + I with V a jointly row-sparse orthonormal
//! frame and Λ the positive spikes. The module covers construction,
//! parameter-space membership, Gaussian data sampling, sample covariance,
//! the lower-bound priors, and CSV import/export of sample matrices.
//!
//! The noise scale σ is fixed to 1; callers with a general σ rescale their
//! data (and the estimators module provides the median-diagonal estimate).

use crate::error::{Error, Result};
use crate::matcore::{IndexSet, OrthoBasis, SymMatrix};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

// ---------------------------------------------------------------------------
// SpikedModel
// ---------------------------------------------------------------------------

/// Ground truth for experiments: Σ = VΛV' + I with sparsity budget k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModel {
    p: usize,
    k: usize,
    basis: OrthoBasis,
    /// Strictly positive, descending spikes λ_1 ≥ … ≥ λ_r.
    spikes: Vec<f64>,
    /// Noise scale; fixed to 1.
    sigma: f64,
}

impl SpikedModel {
    /// Construct and validate: r ≤ k ≤ p, spikes positive descending, and
    /// the row support of V within the sparsity budget.
    pub fn new(p: usize, k: usize, basis: OrthoBasis, spikes: Vec<f64>) -> Result<Self> {
        if basis.dim() != p {
            return Err(Error::InvalidModel(format!(
                "basis dimension {} does not match p = {p}",
                basis.dim()
            )));
        }
        let r = basis.rank();
        if spikes.len() != r {
            return Err(Error::InvalidModel(format!(
                "need {r} spikes for a rank-{r} basis, got {}",
                spikes.len()
            )));
        }
        if !(r <= k && k <= p) {
            return Err(Error::InvalidModel(format!("need r ≤ k ≤ p, got r={r}, k={k}, p={p}")));
        }
        if spikes.iter().any(|&l| l.is_nan() || l <= 0.0) {
            return Err(Error::InvalidModel("spikes must be strictly positive".into()));
        }
        if spikes.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidModel("spikes must be descending".into()));
        }
        let supp = basis.row_support();
        if supp.len() > k {
            return Err(Error::InvalidModel(format!(
                "row support size {} exceeds sparsity budget k = {k}",
                supp.len()
            )));
        }
        Ok(SpikedModel {
            p,
            k,
            basis,
            spikes,
            sigma: 1.0,
        })
    }

    /// The pure-noise model Σ = I (rank 0).
    pub fn identity(p: usize, k: usize) -> Result<Self> {
        SpikedModel::new(p, k, OrthoBasis::empty(p), Vec::new())
    }

    /// Rank-one model Σ = I + λ·vv' from a unit vector.
    pub fn rank_one(p: usize, k: usize, v: Vec<f64>, lambda: f64) -> Result<Self> {
        let basis = OrthoBasis::new(p, 1, v)?;
        SpikedModel::new(p, k, basis, vec![lambda])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.basis.rank()
    }

    pub fn spikes(&self) -> &[f64] {
        &self.spikes
    }

    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> IndexSet {
        self.basis.row_support()
    }

    /// Σ = VΛV' + I_p.
    pub fn build_covariance(&self) -> SymMatrix {
        let p = self.p;
        SymMatrix::from_fn(p, |i, j| {
            let spike: f64 = (0..self.r())
                .map(|c| self.spikes[c] * self.basis.col(c)[i] * self.basis.col(c)[j])
                .sum();
            spike + if i == j { 1.0 } else { 0.0 }
        })
    }

    /// Ω = Σ^{-1} = I − V diag(λ_i / (1+λ_i)) V' by the Woodbury identity.
    pub fn build_precision(&self) -> SymMatrix {
        let p = self.p;
        SymMatrix::from_fn(p, |i, j| {
            let shrink: f64 = (0..self.r())
                .map(|c| {
                    let l = self.spikes[c];
                    l / (1.0 + l) * self.basis.col(c)[i] * self.basis.col(c)[j]
                })
                .sum();
            (if i == j { 1.0 } else { 0.0 }) - shrink
        })
    }

    /// The eigenvalue matrix E = diag(λ_1, …, λ_r, 0, …, 0) as a vector.
    pub fn eigenvalue_targets(&self) -> Vec<f64> {
        let mut e = self.spikes.clone();
        e.resize(self.p, 0.0);
        e
    }

    /// Draw X = U D V' + Z with U (n×r) and Z (n×p) iid standard normal from
    /// the seeded stream, D = diag(√λ_i). U is filled row-major first, then
    /// Z row-major, so the output is a pure function of the seed.
    pub fn sample(&self, n: usize, seed: u64) -> SampleMatrix {
        assert!(n >= 1, "need at least one sample");
        let (p, r) = (self.p, self.r());
        let mut rng = SplitMix64::new(seed);
        let mut u = vec![0.0; n * r];
        for x in u.iter_mut() {
            *x = rng.next_gaussian();
        }
        let mut data = vec![0.0; n * p];
        for x in data.iter_mut() {
            *x = rng.next_gaussian();
        }
        if r > 0 {
            let sqrt_l: Vec<f64> = self.spikes.iter().map(|l| l.sqrt()).collect();
            for i in 0..n {
                for c in 0..r {
                    let w = u[i * r + c] * sqrt_l[c];
                    let col = self.basis.col(c);
                    for j in 0..p {
                        data[i * p + j] += w * col[j];
                    }
                }
            }
        }
        SampleMatrix { n, p, data }
    }
}

/// Orthonormalize an s×r seed matrix onto the given support rows by modified
/// Gram–Schmidt, producing a p×r basis whose row support is contained in
/// `support`. The seed is column-major with columns of length s = |support|.
pub fn basis_from_support(
    p: usize,
    support: &IndexSet,
    r: usize,
    seed_cols: &[f64],
) -> Result<OrthoBasis> {
    let s = support.len();
    if support.iter().any(|&i| i >= p) {
        return Err(Error::InvalidIndexSet(format!("support index out of range for p = {p}")));
    }
    if r > s {
        return Err(Error::Dimension(format!("rank {r} exceeds support size {s}")));
    }
    if seed_cols.len() != s * r {
        return Err(Error::Dimension(format!(
            "expected {} seed entries ({s}x{r}), got {}",
            s * r,
            seed_cols.len()
        )));
    }
    // modified Gram–Schmidt on the compressed s×r seed
    let mut q = seed_cols.to_vec();
    for c in 0..r {
        for prev in 0..c {
            let dot: f64 = (0..s).map(|i| q[prev * s + i] * q[c * s + i]).sum();
            for i in 0..s {
                q[c * s + i] -= dot * q[prev * s + i];
            }
        }
        let norm: f64 = (0..s).map(|i| q[c * s + i] * q[c * s + i]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidModel(
                "seed matrix is rank-deficient; cannot orthonormalize".into(),
            ));
        }
        for i in 0..s {
            q[c * s + i] /= norm;
        }
    }
    let mut cols = vec![0.0; p * r];
    for c in 0..r {
        for (row_pos, &row) in support.iter().enumerate() {
            cols[c * p + row] = q[c * s + row_pos];
        }
    }
    OrthoBasis::new(p, r, cols)
}

/// A seeded random orthonormal basis on the given support (Gaussian seed,
/// then modified Gram–Schmidt). Deterministic per seed.
pub fn seeded_basis(p: usize, support: &IndexSet, r: usize, seed: u64) -> Result<OrthoBasis> {
    let s = support.len();
    let mut rng = SplitMix64::new(seed);
    let seed_cols: Vec<f64> = (0..s * r).map(|_| rng.next_gaussian()).collect();
    basis_from_support(p, support, r, &seed_cols)
}

/// Rank-one equal-magnitude direction (1, …, 1)/√s on the support.
pub fn equal_mass_vector(p: usize, support: &IndexSet) -> Vec<f64> {
    let s = support.len();
    let mut v = vec![0.0; p];
    let a = 1.0 / (s as f64).sqrt();
    for &i in support.iter() {
        v[i] = a;
    }
    v
}

// ---------------------------------------------------------------------------
// Parameter spaces
// ---------------------------------------------------------------------------

/// Which of the nested parameter spaces to test membership against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThetaVariant {
    /// Fixed rank, spikes in [λ/τ, λ] (bounded condition number).
    Theta0,
    /// Fixed rank, spikes in [0, λ] (closure over τ).
    Theta1,
    /// Union over ranks 0..k of Theta0.
    Theta2,
}

/// A parameter-space specification (Θ₀, Θ₁ or Θ₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpaceSpec {
    pub variant: ThetaVariant,
    pub k: usize,
    pub p: usize,
    /// Rank; required for Theta0/Theta1, ignored for Theta2.
    pub r: Option<usize>,
    /// Spike ceiling λ.
    pub lambda: f64,
    /// Condition bound τ ≥ 1; required for Theta0/Theta2, ignored for Theta1.
    pub tau: Option<f64>,
}

impl ParamSpaceSpec {
    pub fn theta0(k: usize, p: usize, r: usize, lambda: f64, tau: f64) -> Result<Self> {
        let s = ParamSpaceSpec {
            variant: ThetaVariant::Theta0,
            k,
            p,
            r: Some(r),
            lambda,
            tau: Some(tau),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn theta1(k: usize, p: usize, r: usize, lambda: f64) -> Result<Self> {
        let s = ParamSpaceSpec {
            variant: ThetaVariant::Theta1,
            k,
            p,
            r: Some(r),
            lambda,
            tau: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn theta2(k: usize, p: usize, lambda: f64, tau: f64) -> Result<Self> {
        let s = ParamSpaceSpec {
            variant: ThetaVariant::Theta2,
            k,
            p,
            r: None,
            lambda,
            tau: Some(tau),
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.k > self.p {
            return Err(Error::InvalidConfig(format!("k = {} exceeds p = {}", self.k, self.p)));
        }
        if let Some(tau) = self.tau {
            if tau.is_nan() || tau < 1.0 {
                return Err(Error::InvalidConfig("τ must be at least 1".into()));
            }
        }
        match self.variant {
            ThetaVariant::Theta0 => {
                let r = self.r.ok_or_else(|| Error::InvalidConfig("Theta0 needs r".into()))?;
                if self.tau.is_none() {
                    return Err(Error::InvalidConfig("Theta0 needs τ".into()));
                }
                if !(1 <= r && r <= self.k) {
                    return Err(Error::InvalidConfig("Theta0 needs 1 ≤ r ≤ k".into()));
                }
            }
            ThetaVariant::Theta1 => {
                let r = self.r.ok_or_else(|| Error::InvalidConfig("Theta1 needs r".into()))?;
                if r > self.k {
                    return Err(Error::InvalidConfig("Theta1 needs r ≤ k".into()));
                }
            }
            ThetaVariant::Theta2 => {
                if self.tau.is_none() {
                    return Err(Error::InvalidConfig("Theta2 needs τ".into()));
                }
            }
        }
        Ok(())
    }
}

/// True when the model's covariance lies in the specified parameter space.
///
/// Θ₁ membership accepts any model rank up to the spec's r, since spikes may
/// vanish there (the rank-deficient frame extends to O(p, r) within the
/// support when r ≤ k). Θ₀ demands the exact rank because its spikes are
/// bounded below by λ/τ > 0.
pub fn membership_theta(m: &SpikedModel, spec: &ParamSpaceSpec) -> bool {
    if m.p() != spec.p || m.support().len() > spec.k {
        return false;
    }
    let lam_max = m.spikes().first().copied().unwrap_or(0.0);
    let lam_min = m.spikes().last().copied().unwrap_or(0.0);
    match spec.variant {
        ThetaVariant::Theta0 => {
            let (r, tau) = (spec.r.unwrap(), spec.tau.unwrap());
            m.r() == r
                && r >= 1
                && lam_max <= spec.lambda
                && lam_min >= spec.lambda / tau
        }
        ThetaVariant::Theta1 => m.r() <= spec.r.unwrap() && lam_max <= spec.lambda,
        ThetaVariant::Theta2 => {
            let tau = spec.tau.unwrap();
            m.r() <= spec.k && (m.r() == 0 || (lam_max <= spec.lambda && lam_min >= spec.lambda / tau))
        }
    }
}

// ---------------------------------------------------------------------------
// SampleMatrix
// ---------------------------------------------------------------------------

/// An n×p matrix of observations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension("sample matrix needs n ≥ 1 and p ≥ 1".into()));
        }
        if data.len() != n * p {
            return Err(Error::Dimension(format!(
                "expected {} entries for {n}x{p}, got {}",
                n * p,
                data.len()
            )));
        }
        Ok(SampleMatrix { n, p, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// S = (1/n) X'X. Symmetric by construction (upper triangle mirrored).
    pub fn sample_covariance(&self) -> SymMatrix {
        let (n, p) = (self.n, self.p);
        let inv = 1.0 / n as f64;
        let mut s = vec![0.0; p * p];
        for row in 0..n {
            let x = self.row(row);
            for i in 0..p {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                for j in i..p {
                    s[i * p + j] += xi * x[j];
                }
            }
        }
        // from_fn only evaluates i ≤ j, where the accumulator is filled
        SymMatrix::from_fn(p, |i, j| s[i * p + j] * inv)
    }

    /// Write as CSV with header `x1,...,xp`, one observation per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.p).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &str) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })
    }

    /// Parse the CSV format written by [`write_csv`].
    pub fn read_csv<R: Read>(r: R, path_for_errors: &str) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                path: path_for_errors.into(),
                msg: "empty file".into(),
            })?
            .map_err(|e| Error::Io {
                path: path_for_errors.into(),
                source: e,
            })?;
        let p = header.split(',').count();
        if p == 0 || !header.starts_with('x') {
            return Err(Error::Parse {
                path: path_for_errors.into(),
                msg: "expected header x1,...,xp".into(),
            });
        }
        let mut data = Vec::new();
        let mut n = 0;
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Io {
                path: path_for_errors.into(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != p {
                return Err(Error::Parse {
                    path: path_for_errors.into(),
                    msg: format!("row {} has {} fields, expected {p}", lineno + 2, fields.len()),
                });
            }
            for f in fields {
                data.push(f.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path_for_errors.into(),
                    msg: format!("row {}: {e}", lineno + 2),
                })?);
            }
            n += 1;
        }
        SampleMatrix::new(n, p, data)
    }

    pub fn read_csv_path(path: &str) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        SampleMatrix::read_csv(f, path)
    }
}

// ---------------------------------------------------------------------------
// Lower-bound priors
// ---------------------------------------------------------------------------

/// Priors over sparse directions used in the testing lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SparsePrior {
    /// u = J_I w / √k: uniformly random size-k support, iid Rademacher signs.
    RademacherUniform { p: usize, k: usize },
    /// u = J_I 1 / √k: uniformly random support, all-positive entries.
    BinaryUniform { p: usize, k: usize },
    /// The oracle-test pair: block H₀/H₁ covariances with
    /// ρ = bλ/(λ+2)·(1 ∧ √(r/n)) and v uniform on the r-sphere.
    OracleTestPair {
        p: usize,
        r: usize,
        lambda: f64,
        n: usize,
        b: f64,
    },
}

impl SparsePrior {
    /// The oracle-test constant b has no canonical value; it must be small,
    /// defaults to 0.1, and is configurable.
    pub const DEFAULT_B: f64 = 0.1;
}

/// A draw from a sparse prior: the unit direction, and for the oracle-test
/// prior also the (H₀, H₁) covariance pair.
#[derive(Debug, Clone)]
pub struct PriorDraw {
    pub u: Vec<f64>,
    pub pair: Option<(SymMatrix, SymMatrix)>,
}

/// Draw from a prior. The Rademacher/Binary draws have exactly k nonzero
/// entries of magnitude 1/√k, so ‖u‖ = 1 exactly.
pub fn draw_prior(prior: &SparsePrior, seed: u64) -> PriorDraw {
    let mut rng = SplitMix64::new(seed);
    match *prior {
        SparsePrior::RademacherUniform { p, k } => {
            assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
            let support = rng.subset(p, k);
            let a = 1.0 / (k as f64).sqrt();
            let mut u = vec![0.0; p];
            for &i in &support {
                u[i] = a * rng.next_sign();
            }
            PriorDraw { u, pair: None }
        }
        SparsePrior::BinaryUniform { p, k } => {
            assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
            let support = rng.subset(p, k);
            let a = 1.0 / (k as f64).sqrt();
            let mut u = vec![0.0; p];
            for &i in &support {
                u[i] = a;
            }
            PriorDraw { u, pair: None }
        }
        SparsePrior::OracleTestPair { p, r, lambda, n, b } => {
            assert!(r >= 1 && r <= p && n >= 1);
            // v uniform on the r-sphere: normalized Gaussians
            let mut v = vec![0.0; r];
            loop {
                for x in v.iter_mut() {
                    *x = rng.next_gaussian();
                }
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for x in v.iter_mut() {
                        *x /= norm;
                    }
                    break;
                }
            }
            let rho = b * lambda / (lambda + 2.0) * 1.0_f64.min((r as f64 / n as f64).sqrt());
            let scale = 1.0 + lambda / 2.0;
            let null = SymMatrix::from_fn(p, |i, j| {
                if i == j {
                    if i < r {
                        scale
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            });
            let alt = SymMatrix::from_fn(p, |i, j| {
                if i < r && j < r {
                    scale * ((if i == j { 1.0 } else { 0.0 }) + rho * v[i] * v[j])
                } else if i == j {
                    1.0
                } else {
                    0.0
                }
            });
            let mut u = vec![0.0; p];
            u[..r].copy_from_slice(&v);
            PriorDraw {
                u,
                pair: Some((null, alt)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{eig_sym, spectral_norm};
    use std::collections::HashMap;

    #[test]
    fn covariance_of_identity_model() {
        let m = SpikedModel::identity(4, 2).unwrap();
        assert_eq!(m.build_covariance(), SymMatrix::identity(4));
    }

    #[test]
    fn covariance_hand_expansion() {
        // p = 2, v = e1, λ = 1 → diag(2, 1)
        let m = SpikedModel::rank_one(2, 1, vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(m.build_covariance(), SymMatrix::diagonal(&[2.0, 1.0]));
    }

    #[test]
    fn covariance_spectrum_matches_spikes() {
        let support = IndexSet::new(vec![1, 3, 4]).unwrap();
        let basis = seeded_basis(6, &support, 2, 99).unwrap();
        let m = SpikedModel::new(6, 3, basis, vec![5.0, 2.0]).unwrap();
        let d = eig_sym(&m.build_covariance());
        let expect = [6.0, 3.0, 1.0, 1.0, 1.0, 1.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((d.value(i) - e).abs() < 1e-9, "eigenvalue {i}: {}", d.value(i));
        }
    }

    #[test]
    fn precision_is_inverse() {
        let support = IndexSet::new(vec![0, 2]).unwrap();
        let basis = seeded_basis(5, &support, 2, 7).unwrap();
        let m = SpikedModel::new(5, 2, basis, vec![3.0, 1.5]).unwrap();
        let sigma = m.build_covariance();
        let omega = m.build_precision();
        // Σ·Ω should be the identity
        let p = 5;
        let mut prod = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                prod[i * p + j] = (0..p).map(|l| sigma.get(i, l) * omega.get(l, j)).sum();
            }
        }
        for i in 0..p {
            for j in 0..p {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * p + j] - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let ident = SpikedModel::identity(5, 2).unwrap();
        let theta2 = ParamSpaceSpec::theta2(2, 5, 3.0, 2.0).unwrap();
        assert!(membership_theta(&ident, &theta2));

        // spikes (λ, λ/(2τ)) violate the λ/τ floor of Theta0
        let support = IndexSet::new(vec![0, 1]).unwrap();
        let basis = seeded_basis(5, &support, 2, 3).unwrap();
        let lambda = 4.0;
        let tau = 2.0;
        let m = SpikedModel::new(5, 2, basis, vec![lambda, lambda / (2.0 * tau)]).unwrap();
        let theta0 = ParamSpaceSpec::theta0(2, 5, 2, lambda, tau).unwrap();
        assert!(!membership_theta(&m, &theta0));

        // support budget: |supp(V)| = 3 vs k = 2 fails every variant
        let big_support = IndexSet::new(vec![0, 1, 2]).unwrap();
        let wide = seeded_basis(5, &big_support, 1, 5).unwrap();
        let m3 = SpikedModel::new(5, 3, wide, vec![1.0]).unwrap();
        assert!(!membership_theta(&m3, &theta2));
        assert!(!membership_theta(&m3, &ParamSpaceSpec::theta1(2, 5, 1, 2.0).unwrap()));
        assert!(!membership_theta(&m3, &ParamSpaceSpec::theta0(2, 5, 1, 2.0, 2.0).unwrap()));
    }

    #[test]
    fn build_covariance_lives_in_theta1() {
        let support = IndexSet::new(vec![1, 2]).unwrap();
        let basis = seeded_basis(6, &support, 2, 11).unwrap();
        let m = SpikedModel::new(6, 2, basis, vec![3.0, 0.5]).unwrap();
        let spec = ParamSpaceSpec::theta1(m.k(), m.p(), m.r(), m.spikes()[0]).unwrap();
        assert!(membership_theta(&m, &spec));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = SpikedModel::rank_one(3, 1, vec![0.0, 1.0, 0.0], 2.0).unwrap();
        let a = m.sample(50, 424242);
        let b = m.sample(50, 424242);
        assert_eq!(a, b);
        let c = m.sample(50, 424243);
        assert_ne!(a, c);
    }

    #[test]
    fn pure_noise_column_variances() {
        let m = SpikedModel::identity(4, 1).unwrap();
        let n = 4000;
        let x = m.sample(n, 8);
        let s = x.sample_covariance();
        let tol = 5.0 / (n as f64).sqrt();
        for j in 0..4 {
            assert!((s.get(j, j) - 1.0).abs() < tol, "var {} = {}", j, s.get(j, j));
        }
    }

    #[test]
    fn spiked_sample_covariance_concentrates() {
        // population entry (0,0) is 1 + λ = 4
        let m = SpikedModel::rank_one(2, 1, vec![1.0, 0.0], 3.0).unwrap();
        let x = m.sample(10_000, 5);
        let s = x.sample_covariance();
        assert!(
            (3.7..=4.3).contains(&s.get(0, 0)),
            "S[0][0] = {}",
            s.get(0, 0)
        );
    }

    #[test]
    fn sample_covariance_hand_cases() {
        let x = SampleMatrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let s = x.sample_covariance();
        assert_eq!(s, SymMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());

        let z = SampleMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        assert_eq!(z.sample_covariance(), SymMatrix::zeros(2));
    }

    #[test]
    fn sample_covariance_is_psd() {
        let m = SpikedModel::rank_one(5, 2, equal_mass_vector(5, &IndexSet::new(vec![0, 3]).unwrap()), 2.0)
            .unwrap();
        for seed in 0..10 {
            let x = m.sample(8, seed);
            let s = x.sample_covariance();
            let d = eig_sym(&s);
            assert!(d.value(4) >= -1e-10, "min eigenvalue {}", d.value(4));
        }
    }

    #[test]
    fn empirical_covariance_concentrates_at_rate() {
        // ‖S − Σ‖ ≤ C √(p/n) (λ1+1) for n = 100 p, C frozen at 2.5,
        // on at least 95% of seeds
        let support = IndexSet::new(vec![0, 1, 2]).unwrap();
        let basis = seeded_basis(8, &support, 2, 21).unwrap();
        let m = SpikedModel::new(8, 3, basis, vec![4.0, 2.0]).unwrap();
        let sigma = m.build_covariance();
        let (p, n) = (8, 800);
        let bound = 2.5 * ((p as f64) / (n as f64)).sqrt() * (4.0 + 1.0);
        let mut ok = 0;
        for seed in 0..40 {
            let s = m.sample(n, seed).sample_covariance();
            if spectral_norm(&s.difference(&sigma)) <= bound {
                ok += 1;
            }
        }
        assert!(ok >= 38, "only {ok}/40 seeds within the concentration bound");
    }

    #[test]
    fn csv_round_trip() {
        let m = SpikedModel::rank_one(3, 1, vec![1.0, 0.0, 0.0], 1.5).unwrap();
        let x = m.sample(7, 99);
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3\n"));
        let back = SampleMatrix::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn rademacher_draws_have_exact_unit_structure() {
        let prior = SparsePrior::RademacherUniform { p: 6, k: 3 };
        let a = 1.0 / 3.0_f64.sqrt();
        for seed in 0..200 {
            let d = draw_prior(&prior, seed);
            let nz: Vec<f64> = d.u.iter().copied().filter(|x| *x != 0.0).collect();
            assert_eq!(nz.len(), 3);
            assert!(nz.iter().all(|x| (x.abs() - a).abs() < 1e-15));
        }
        // p = k = 1: u = ±1, both signs occur
        let tiny = SparsePrior::RademacherUniform { p: 1, k: 1 };
        let mut signs = [0usize; 2];
        for seed in 0..100 {
            let d = draw_prior(&tiny, seed);
            assert!((d.u[0].abs() - 1.0).abs() < 1e-15);
            signs[if d.u[0] > 0.0 { 0 } else { 1 }] += 1;
        }
        assert!(signs[0] > 20 && signs[1] > 20);
    }

    #[test]
    fn support_law_is_uniform() {
        let prior = SparsePrior::RademacherUniform { p: 4, k: 2 };
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let reps = 100_000;
        for seed in 0..reps {
            let d = draw_prior(&prior, seed);
            let supp: Vec<usize> = (0..4).filter(|&i| d.u[i] != 0.0).collect();
            *counts.entry(supp).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (supp, c) in counts {
            let freq = c as f64 / reps as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.01, "support {supp:?} freq {freq}");
        }
    }

    #[test]
    fn prior_spike_is_in_theta2() {
        let prior = SparsePrior::RademacherUniform { p: 6, k: 2 };
        let lambda = 0.8;
        for seed in 0..20 {
            let d = draw_prior(&prior, seed);
            let m = SpikedModel::rank_one(6, 2, d.u, lambda).unwrap();
            for tau in [1.0, 2.0, 10.0] {
                let spec = ParamSpaceSpec::theta2(2, 6, lambda, tau).unwrap();
                assert!(membership_theta(&m, &spec));
            }
        }
    }

    #[test]
    fn oracle_pair_structure() {
        let prior = SparsePrior::OracleTestPair {
            p: 5,
            r: 2,
            lambda: 1.0,
            n: 50,
            b: SparsePrior::DEFAULT_B,
        };
        let d = draw_prior(&prior, 3);
        let (null, alt) = d.pair.unwrap();
        let scale = 1.5;
        assert!((null.get(0, 0) - scale).abs() < 1e-15);
        assert!((null.get(4, 4) - 1.0).abs() < 1e-15);
        // operator-norm separation is ρ(1 + λ/2)
        let rho = 0.1 * 1.0 / 3.0 * (2.0_f64 / 50.0).sqrt();
        let gap = spectral_norm(&alt.difference(&null));
        assert!((gap - rho * scale).abs() < 1e-12, "gap {gap}");
        // unit direction
        let norm: f64 = d.u.iter().map(|x| x * x).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_from_support_rejects_rank_deficiency() {
        let support = IndexSet::new(vec![0, 1]).unwrap();
        let err = basis_from_support(4, &support, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(err.is_err());
    }
}
