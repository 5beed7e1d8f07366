//! The support-selection estimation pipeline.
//!
//! Everything flows from the sample covariance S = (1/n)X'X and a sparsity
//! budget k. A size-k candidate support B is *admissible* when no deviation
//! of S from the identity shows up outside B: for every nonempty D ⊆ B̄ with
//! |D| ≤ k,
//!
//! ```text
//! ‖S_D − I‖  ≤ η(|D|, n, p, γ₁)          and
//! ‖S_DB‖     ≤ 2 √‖S_B‖ · η(k, n, p, γ₁),
//! ```
//!
//! where S_B is the padded matrix (identity outside the B×B block), so
//! ‖S_B‖ = max(‖S_BB‖, 1). The selected support Â maximizes Tr(S_BB) over
//! admissible B (ties broken lexicographically). From Â follow the five
//! estimators: the padded covariance Σ̂, the rank r̂ by eigenvalue
//! thresholding, the principal subspace V̂ (top-r̂ eigenvectors of Σ̂), the
//! precision matrix Ω̂, and the centered spectrum Ê.
//!
//! Subset enumeration is exponential, so every search carries an explicit
//! budget counted in examined (B, D) pairs; exhausting it is an error, never
//! a silent truncation. Scans are sequential and deterministic: candidate B
//! lexicographically, D by size then lexicographic index, early exit at the
//! first violated condition.

use crate::error::{Error, Result};
use crate::matcore::{self, eig_sym, pad_submatrix, IndexSet, OrthoBasis, SymMatrix};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Hyperparameters of the support selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Sparsity budget k (size of the selected support).
    pub k: usize,
    /// Deviation-threshold constant γ₁ ≥ 3; theory wants γ₁ ≥ 10.
    pub gamma1: f64,
    /// Rank-threshold constant; theory wants γ₂ ≥ 8√γ₁ + 34.
    pub gamma2: f64,
    /// Maximum number of (B, D) pairs a search may examine.
    pub budget: u64,
}

impl SelectorConfig {
    pub const DEFAULT_GAMMA1: f64 = 10.0;
    pub const DEFAULT_BUDGET: u64 = 1_000_000;

    /// The theory-backed default γ₂ for a given γ₁.
    pub fn default_gamma2(gamma1: f64) -> f64 {
        8.0 * gamma1.sqrt() + 34.0
    }

    /// Defaults: γ₁ = 10, γ₂ = 8√γ₁ + 34, budget 10⁶.
    pub fn new(k: usize) -> Self {
        SelectorConfig {
            k,
            gamma1: Self::DEFAULT_GAMMA1,
            gamma2: Self::default_gamma2(Self::DEFAULT_GAMMA1),
            budget: Self::DEFAULT_BUDGET,
        }
    }

    /// Replace γ₁ (must be ≥ 3) and reset γ₂ to its default for the new γ₁.
    /// Call before [`with_gamma2`](Self::with_gamma2) if overriding both.
    pub fn with_gamma1(mut self, gamma1: f64) -> Result<Self> {
        if gamma1.is_nan() || gamma1 < 3.0 {
            return Err(Error::InvalidConfig(format!(
                "γ₁ must be at least 3, got {gamma1}"
            )));
        }
        self.gamma1 = gamma1;
        self.gamma2 = Self::default_gamma2(gamma1);
        Ok(self)
    }

    pub fn with_gamma2(mut self, gamma2: f64) -> Self {
        self.gamma2 = gamma2;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

/// The diagonal-deviation allowance η(m, n, p, γ₁) = 2x + x² with
/// x = √(m/n) + √(γ₁ m log(ep/m) / n).
pub fn eta(m: usize, n: usize, p: usize, gamma1: f64) -> f64 {
    assert!(m >= 1 && m <= p, "need 1 ≤ m ≤ p");
    assert!(n >= 1, "need n ≥ 1");
    assert!(gamma1 > 0.0, "need γ₁ > 0");
    let (mf, nf, pf) = (m as f64, n as f64, p as f64);
    let log_term = 1.0 + (pf / mf).ln(); // log(e p / m)
    let x = (mf / nf).sqrt() + (gamma1 * mf * log_term / nf).sqrt();
    2.0 * x + x * x
}

// ---------------------------------------------------------------------------
// Budget and subset scanning
// ---------------------------------------------------------------------------

struct Budget {
    used: u64,
    limit: u64,
}

impl Budget {
    fn new(limit: u64) -> Self {
        Budget { used: 0, limit }
    }

    /// Charge one (B, D) pair; errors when the budget is already spent.
    #[inline]
    fn charge(&mut self) -> Result<()> {
        if self.used >= self.limit {
            return Err(Error::BudgetExceeded {
                examined: self.used,
                budget: self.limit,
            });
        }
        self.used += 1;
        Ok(())
    }
}

/// Lexicographic scan over size-k index tuples from `0..n`.
struct SubsetScan {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl SubsetScan {
    fn new(n: usize, k: usize) -> Self {
        SubsetScan {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
            done: k > n || k == 0,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        let k = self.k;
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - (k - i) {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}

/// Memo of ‖S_D − I‖ values keyed by D. Uses a dense colex-ranked table when
/// the subset space is small enough, a hash map otherwise.
struct DeviationCache {
    dense: Option<Vec<f64>>,
    /// offsets[s-1] = first slot of size-s subsets in the dense table
    offsets: Vec<usize>,
    map: HashMap<Vec<u16>, f64>,
}

const DENSE_CACHE_LIMIT: usize = 1 << 23;

impl DeviationCache {
    fn new(p: usize, k: usize) -> Self {
        let mut offsets = Vec::with_capacity(k);
        let mut total: usize = 0;
        let mut ok = true;
        for s in 1..=k {
            offsets.push(total);
            match binomial_usize(p, s).and_then(|c| total.checked_add(c)) {
                Some(t) if t <= DENSE_CACHE_LIMIT => total = t,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            DeviationCache {
                dense: Some(vec![f64::NAN; total]),
                offsets,
                map: HashMap::new(),
            }
        } else {
            DeviationCache {
                dense: None,
                offsets: Vec::new(),
                map: HashMap::new(),
            }
        }
    }

    /// Colex rank of a sorted subset within the dense table.
    #[inline]
    fn slot(&self, d: &[usize]) -> Option<usize> {
        self.dense.as_ref()?;
        let mut rank = self.offsets[d.len() - 1];
        for (i, &di) in d.iter().enumerate() {
            rank += binomial_usize(di, i + 1).unwrap_or(0);
        }
        Some(rank)
    }

    fn get_or_compute(&mut self, d: &[usize], compute: impl FnOnce(&[usize]) -> f64) -> f64 {
        if let Some(slot) = self.slot(d) {
            let table = self.dense.as_mut().unwrap();
            if table[slot].is_nan() {
                table[slot] = compute(d);
            }
            return table[slot];
        }
        let key: Vec<u16> = d.iter().map(|&i| i as u16).collect();
        if let Some(&v) = self.map.get(&key) {
            return v;
        }
        let v = compute(d);
        self.map.insert(key, v);
        v
    }
}

fn binomial_usize(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

// ---------------------------------------------------------------------------
// Admissibility machinery
// ---------------------------------------------------------------------------

/// Shared state for admissibility scans over one sample covariance.
struct Admissibility<'a> {
    s: &'a SymMatrix,
    k: usize,
    /// η(m, n, p, γ₁) for m = 1..=min(k, p), indexed m-1.
    eta_by_size: Vec<f64>,
    cache: DeviationCache,
    /// scratch for gathered blocks and Gram matrices
    block: Vec<f64>,
    gram: Vec<f64>,
}

impl<'a> Admissibility<'a> {
    fn new(s: &'a SymMatrix, n: usize, cfg: &SelectorConfig) -> Self {
        let p = s.dim();
        let k = cfg.k;
        let eta_by_size = (1..=k.min(p)).map(|m| eta(m, n, p, cfg.gamma1)).collect();
        Admissibility {
            s,
            k,
            eta_by_size,
            cache: DeviationCache::new(p, k.min(p)),
            block: vec![0.0; k * k.max(1)],
            gram: vec![0.0; k * k.max(1)],
        }
    }

    /// ‖S_BB‖ ∨ 1, the padded-matrix norm used by both thresholds.
    fn padded_block_norm(&mut self, b: &[usize]) -> f64 {
        let m = b.len();
        for (ii, &i) in b.iter().enumerate() {
            for (jj, &j) in b.iter().enumerate() {
                self.block[ii * m + jj] = self.s.get(i, j);
            }
        }
        matcore::spectral_norm_inplace(&mut self.block[..m * m], m).max(1.0)
    }

    /// Memoized ‖S_DD − I‖ (equal to the padded deviation ‖S_D − I‖, since
    /// the complement contributes zero).
    fn d_deviation(&mut self, d: &[usize]) -> f64 {
        let s = self.s;
        let block = &mut self.block;
        self.cache.get_or_compute(d, |d| {
            let m = d.len();
            for (ii, &i) in d.iter().enumerate() {
                for (jj, &j) in d.iter().enumerate() {
                    block[ii * m + jj] = s.get(i, j) - if ii == jj { 1.0 } else { 0.0 };
                }
            }
            matcore::spectral_norm_inplace(&mut block[..m * m], m)
        })
    }

    /// True when ‖S_DB‖ exceeds `thresh`. A Frobenius-norm bound accepts
    /// cheap cases (spectral ≤ Frobenius); the exact largest singular value,
    /// via the smaller Gram factor of S_BD·S_DB, decides the rest.
    fn db_norm_exceeds(&mut self, d: &[usize], b: &[usize], thresh: f64) -> bool {
        let (nd, nb) = (d.len(), b.len());
        let mut fro2 = 0.0;
        for (ii, &i) in d.iter().enumerate() {
            for (jj, &j) in b.iter().enumerate() {
                let v = self.s.get(i, j);
                self.block[ii * nb + jj] = v;
                fro2 += v * v;
            }
        }
        if fro2 <= thresh * thresh {
            return false;
        }
        let m = nd.min(nb);
        if nd <= nb {
            for a in 0..nd {
                for c in a..nd {
                    let dot: f64 = (0..nb)
                        .map(|j| self.block[a * nb + j] * self.block[c * nb + j])
                        .sum();
                    self.gram[a * nd + c] = dot;
                    self.gram[c * nd + a] = dot;
                }
            }
        } else {
            for a in 0..nb {
                for c in a..nb {
                    let dot: f64 = (0..nd)
                        .map(|i| self.block[i * nb + a] * self.block[i * nb + c])
                        .sum();
                    self.gram[a * nb + c] = dot;
                    self.gram[c * nb + a] = dot;
                }
            }
        }
        let top = matcore::eigenvalues_inplace(&mut self.gram[..m * m], m)[0].max(0.0);
        top.sqrt() > thresh
    }

    /// Scan all nonempty D ⊆ complement, |D| ≤ k, by size then lexicographic
    /// index; early exit at the first violation. Charges the budget per
    /// examined pair.
    fn is_admissible(
        &mut self,
        b: &[usize],
        comp: &[usize],
        db_thresh: f64,
        budget: &mut Budget,
    ) -> Result<bool> {
        let mut d_actual = vec![0usize; self.k.min(comp.len())];
        for size in 1..=self.k.min(comp.len()) {
            let mut scan = SubsetScan::new(comp.len(), size);
            while let Some(pos) = scan.next() {
                budget.charge()?;
                for (t, &pi) in pos.iter().enumerate() {
                    d_actual[t] = comp[pi];
                }
                let d = &d_actual[..size];
                if self.d_deviation(d) > self.eta_by_size[size - 1] {
                    return Ok(false);
                }
                if self.db_norm_exceeds(d, b, db_thresh) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Test whether one candidate support `b` (|b| must equal cfg.k) belongs to
/// the admissible family B_k for the sample covariance `s` at sample size n.
///
/// Errors only when the enumeration budget is exhausted before an answer.
pub fn is_admissible_support(
    s: &SymMatrix,
    n: usize,
    b: &IndexSet,
    cfg: &SelectorConfig,
) -> Result<bool> {
    assert_eq!(b.len(), cfg.k, "candidate support must have exactly k elements");
    assert!(cfg.k >= 1 && cfg.k <= s.dim(), "need 1 ≤ k ≤ p");
    let mut adm = Admissibility::new(s, n, cfg);
    let comp: Vec<usize> = b.complement(s.dim()).as_slice().to_vec();
    let db_thresh = 2.0 * adm.padded_block_norm(b.as_slice()).sqrt() * adm.eta_by_size[cfg.k - 1];
    let mut budget = Budget::new(cfg.budget);
    adm.is_admissible(b.as_slice(), &comp, db_thresh, &mut budget)
}

enum ScanMode {
    /// Find the admissible B maximizing Tr(S_BB), ties lexicographic.
    ArgmaxTrace,
    /// Stop at the first admissible B.
    Existence,
}

fn scan_supports(
    s: &SymMatrix,
    n: usize,
    cfg: &SelectorConfig,
    mode: ScanMode,
) -> Result<Option<IndexSet>> {
    let p = s.dim();
    let k = cfg.k;
    assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
    let mut adm = Admissibility::new(s, n, cfg);
    let mut budget = Budget::new(cfg.budget);

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut b_scan = SubsetScan::new(p, k);
    let mut b_owned = vec![0usize; k];
    let mut comp = Vec::with_capacity(p - k);
    while let Some(b) = b_scan.next() {
        b_owned.copy_from_slice(b);
        comp.clear();
        let mut cursor = 0;
        for i in 0..p {
            if cursor < k && b_owned[cursor] == i {
                cursor += 1;
            } else {
                comp.push(i);
            }
        }
        let db_thresh = 2.0 * adm.padded_block_norm(&b_owned).sqrt() * adm.eta_by_size[k - 1];
        if adm.is_admissible(&b_owned, &comp, db_thresh, &mut budget)? {
            match mode {
                ScanMode::Existence => {
                    return Ok(Some(IndexSet::new(b_owned).expect("sorted unique")));
                }
                ScanMode::ArgmaxTrace => {
                    let trace: f64 = b_owned.iter().map(|&i| s.get(i, i)).sum();
                    // strict improvement only: ties keep the lex-first B
                    let better = match &best {
                        None => true,
                        Some((t, _)) => trace > *t,
                    };
                    if better {
                        best = Some((trace, b_owned.clone()));
                    }
                }
            }
        }
    }
    Ok(best.map(|(_, b)| IndexSet::new(b).expect("sorted unique")))
}

/// Â = argmax over the admissible family B_k of Tr(S_BB), ties broken
/// lexicographically; `None` when B_k is empty.
pub fn select_support(s: &SymMatrix, n: usize, cfg: &SelectorConfig) -> Result<Option<IndexSet>> {
    scan_supports(s, n, cfg, ScanMode::ArgmaxTrace)
}

/// Σ̂ = S_Â (padded) when a support is found, I_p when B_k is empty.
pub fn estimate_covariance(
    s: &SymMatrix,
    n: usize,
    cfg: &SelectorConfig,
) -> Result<(SymMatrix, Option<IndexSet>)> {
    let a_hat = select_support(s, n, cfg)?;
    match a_hat {
        Some(a) => Ok((pad_submatrix(s, &a), Some(a))),
        None => Ok((SymMatrix::identity(s.dim()), None)),
    }
}

/// r̂ = max{ l : σ_l(S_ÂÂ) ≥ 1 + γ₂ √‖S_Â‖ η(k, n, p, γ₁) } ∈ {0, …, k}.
pub fn estimate_rank(s: &SymMatrix, n: usize, a_hat: &IndexSet, cfg: &SelectorConfig) -> usize {
    assert_eq!(a_hat.len(), cfg.k, "selected support must have exactly k elements");
    let p = s.dim();
    let k = cfg.k;
    let mut block = vec![0.0; k * k];
    for (ii, &i) in a_hat.iter().enumerate() {
        for (jj, &j) in a_hat.iter().enumerate() {
            block[ii * k + jj] = s.get(i, j);
        }
    }
    let evals = matcore::eigenvalues_inplace(&mut block, k);
    // ‖S_Â‖ of the padded matrix is ‖S_ÂÂ‖ ∨ 1
    let norm = evals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let thresh = 1.0 + cfg.gamma2 * norm.sqrt() * eta(k, n, p, cfg.gamma1);
    evals.iter().take_while(|&&v| v >= thresh).count()
}

/// V̂: the top-r̂ eigenvectors of Σ̂; empty when r̂ = 0.
pub fn estimate_subspace(sigma_hat: &SymMatrix, r_hat: usize) -> OrthoBasis {
    assert!(r_hat <= sigma_hat.dim(), "rank exceeds dimension");
    eig_sym(sigma_hat).leading_basis(r_hat)
}

/// Ω̂ = Σ̂⁻¹ when σ_p(Σ̂) ≥ 1/2, I_p otherwise; always ‖Ω̂‖ ≤ 2.
pub fn estimate_precision(sigma_hat: &SymMatrix) -> SymMatrix {
    let p = sigma_hat.dim();
    let d = eig_sym(sigma_hat);
    if d.value(p - 1) < 0.5 {
        return SymMatrix::identity(p);
    }
    SymMatrix::from_fn(p, |i, j| {
        (0..p)
            .map(|l| d.vector(l)[i] * d.vector(l)[j] / d.value(l))
            .sum()
    })
}

/// Ê = diag(σ_i(Σ̂)) − I as a descending vector.
pub fn estimate_eigenvalues(sigma_hat: &SymMatrix) -> Vec<f64> {
    eig_sym(sigma_hat).values().iter().map(|v| v - 1.0).collect()
}

/// σ̂² = median of the diagonal of S (even p averages the central pair).
pub fn estimate_noise_variance(s: &SymMatrix) -> f64 {
    let mut diag = s.diag();
    diag.sort_by(|a, b| a.partial_cmp(b).expect("NaN diagonal"));
    let p = diag.len();
    if p % 2 == 1 {
        diag[p / 2]
    } else {
        0.5 * (diag[p / 2 - 1] + diag[p / 2])
    }
}

/// The smallest k ∈ [p] whose admissible family B_k is non-empty. Each level
/// gets a fresh budget (the template's k is ignored); a budget error at any
/// level aborts the search.
pub fn adaptive_k(s: &SymMatrix, n: usize, template: &SelectorConfig) -> Result<Option<usize>> {
    for k in 1..=s.dim() {
        let cfg = template.clone().with_k(k);
        if scan_supports(s, n, &cfg, ScanMode::Existence)?.is_some() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// The outcome of the full estimation pipeline on one sample covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    /// Whether the admissible family B_k was non-empty.
    pub bk_nonempty: bool,
    /// The selected support Â (present iff `bk_nonempty`).
    pub a_hat: Option<IndexSet>,
    /// Σ̂: padded S_Â, or I_p when no support was found.
    pub sigma_hat: SymMatrix,
    /// r̂ ∈ {0, …, k}; 0 when no support was found.
    pub r_hat: usize,
    /// V̂: top-r̂ eigenvectors of Σ̂ (empty when r̂ = 0).
    pub v_hat: OrthoBasis,
}

/// Run support selection, covariance, rank, and subspace estimation.
pub fn estimate_all(s: &SymMatrix, n: usize, cfg: &SelectorConfig) -> Result<EstimationResult> {
    let (sigma_hat, a_hat) = estimate_covariance(s, n, cfg)?;
    match a_hat {
        None => Ok(EstimationResult {
            bk_nonempty: false,
            a_hat: None,
            sigma_hat,
            r_hat: 0,
            v_hat: OrthoBasis::empty(s.dim()),
        }),
        Some(a) => {
            let r_hat = estimate_rank(s, n, &a, cfg);
            let v_hat = estimate_subspace(&sigma_hat, r_hat);
            Ok(EstimationResult {
                bk_nonempty: true,
                a_hat: Some(a),
                sigma_hat,
                r_hat,
                v_hat,
            })
        }
    }
}

/// The data-driven γ₁ adjustment: a second pass with
/// γ₁' = max(10, (1 + 2/M̂₀) M₁), M̂₀ = log n / log(2‖Σ̂‖ − 1),
/// M₁ = log n / log p. Falls back to the first pass when the over-estimate
/// 2‖Σ̂‖ − 1 of λ is not above 1 or when p, n < 2. Off by default; the plain
/// [`estimate_all`] never takes this path.
pub fn estimate_all_data_driven(
    s: &SymMatrix,
    n: usize,
    cfg: &SelectorConfig,
) -> Result<EstimationResult> {
    let first = estimate_all(s, n, cfg)?;
    let p = s.dim();
    if p < 2 || n < 2 {
        return Ok(first);
    }
    let lambda_over = 2.0 * matcore::spectral_norm(&first.sigma_hat) - 1.0;
    if lambda_over <= 1.0 {
        return Ok(first);
    }
    let m0_hat = (n as f64).ln() / lambda_over.ln();
    let m1 = (n as f64).ln() / (p as f64).ln();
    let gamma1_adj = 10.0_f64.max((1.0 + 2.0 / m0_hat) * m1);
    let cfg2 = cfg.clone().with_gamma1(gamma1_adj)?;
    estimate_all(s, n, &cfg2)
}
