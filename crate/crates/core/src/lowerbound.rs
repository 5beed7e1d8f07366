//! Exact combinatorics behind the minimax lower bounds.
//!
//! The testing lower bound for rank detection reduces to the moment
//! generating function of a squared symmetric random walk stopped at a
//! hypergeometrically distributed time: for the uniform Rademacher prior,
//! k·⟨u, ũ⟩ is distributed as G_H with H ~ Hypergeometric(p, k, k), and
//!
//! ```text
//! 1 + χ²( E[N(0, I + λuu')ⁿ] ‖ N(0, I)ⁿ )  =  E[(1 − λ²G_H²/k²)^(−n/2)].
//! ```
//!
//! This module evaluates these quantities by exact finite enumeration:
//! the walk and hypergeometric pmfs (log-gamma binomials, with a big-rational
//! oracle path in [`exact`]), the stopped-walk MGF and its closed-form upper
//! bound g(a) and tightness lower bound, the exact and surrogate χ²
//! divergences, the testing-error floor w(β₀), the detection threshold, and
//! the Bayes-optimal mixture likelihood-ratio statistic.

use crate::error::{Error, Result};
use crate::model::SampleMatrix;

/// Upper end of the admissible range for the constant a (and β₀): the
/// closed-form bound g is stated for 0 < a < 1/36.
pub const A_MAX: f64 = 1.0 / 36.0;

/// log C(n, k) via log-gamma; −∞ when k > n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0)
        - libm::lgamma((n - k) as f64 + 1.0)
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// The symmetric random walk G_m = Σ B_i at step m: values m − 2j with
/// probability C(m, j) 2^(−m).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDist {
    m: usize,
    /// pmf[j] = P(G_m = m − 2j), j = 0..=m.
    pmf: Vec<f64>,
}

impl WalkDist {
    pub fn new(m: usize) -> Self {
        let ln_half = -(m as f64) * std::f64::consts::LN_2;
        let pmf = (0..=m)
            .map(|j| (ln_binomial(m as u64, j as u64) + ln_half).exp())
            .collect();
        WalkDist { m, pmf }
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    /// Probability of the walk value g (must satisfy |g| ≤ m, g ≡ m mod 2).
    pub fn prob(&self, g: i64) -> f64 {
        let m = self.m as i64;
        if g.abs() > m || (m - g) % 2 != 0 {
            return 0.0;
        }
        self.pmf[((m - g) / 2) as usize]
    }

    /// (value, probability) pairs, j ascending (value descending).
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let m = self.m as i64;
        self.pmf.iter().enumerate().map(move |(j, &p)| (m - 2 * j as i64, p))
    }
}

/// H ~ Hypergeometric(p, k, k): the overlap size of two independent uniform
/// size-k subsets of [p].
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeomDist {
    p: usize,
    k: usize,
    /// pmf[i] = P(H = i), i = 0..=k.
    pmf: Vec<f64>,
}

impl HypergeomDist {
    pub fn new(p: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
        let ln_total = ln_binomial(p as u64, k as u64);
        let pmf = (0..=k)
            .map(|i| {
                let ln = ln_binomial(k as u64, i as u64)
                    + ln_binomial((p - k) as u64, (k - i) as u64)
                    - ln_total;
                if ln.is_finite() {
                    ln.exp()
                } else {
                    0.0
                }
            })
            .collect();
        HypergeomDist { p, k, pmf }
    }

    pub fn prob(&self, i: usize) -> f64 {
        if i > self.k {
            0.0
        } else {
            self.pmf[i]
        }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// P(H ≤ t).
    pub fn cdf(&self, t: usize) -> f64 {
        self.pmf.iter().take(t.min(self.k) + 1).sum()
    }
}

/// Binomial(k, q) pmf; the stochastic-dominance partner of the
/// hypergeometric in the moderate-sparsity bound.
pub fn binomial_pmf(k: usize, q: f64, i: usize) -> f64 {
    if i > k {
        return 0.0;
    }
    if q <= 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if q >= 1.0 {
        return if i == k { 1.0 } else { 0.0 };
    }
    (ln_binomial(k as u64, i as u64) + (i as f64) * q.ln() + ((k - i) as f64) * (1.0 - q).ln())
        .exp()
}

/// The joint law of (H, G_H): a symmetric walk stopped at a
/// Hypergeometric(p, k, k) time. Atoms are materialized in a fixed order
/// (h ascending, then walk value descending), so reductions over them are
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedWalkDist {
    p: usize,
    k: usize,
    /// (h, g, probability) with |g| ≤ h ≤ k.
    atoms: Vec<(usize, i64, f64)>,
}

impl StoppedWalkDist {
    pub fn new(p: usize, k: usize) -> Self {
        let hyper = HypergeomDist::new(p, k);
        let mut atoms = Vec::new();
        for h in 0..=k {
            let ph = hyper.prob(h);
            if ph == 0.0 {
                continue;
            }
            let walk = WalkDist::new(h);
            for (g, pg) in walk.atoms() {
                atoms.push((h, g, ph * pg));
            }
        }
        StoppedWalkDist { p, k, atoms }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[(usize, i64, f64)] {
        &self.atoms
    }

    /// Total mass; 1 up to float rounding.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, _, p)| p).sum()
    }

    /// E[exp(t G_H²)] − 1 as a non-negative sum of expm1 terms (full
    /// relative precision near zero, +∞ on overflow).
    pub fn mgf_excess(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "need t ≥ 0");
        self.atoms
            .iter()
            .map(|&(_, g, p)| p * f64::exp_m1(t * (g * g) as f64))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// MGF bounds
// ---------------------------------------------------------------------------

/// E[exp(t G_H²)]: exact finite-sum evaluation over the stopped-walk atoms.
/// Finite for every finite t mathematically; may overflow to +∞ in floats.
///
/// ```
/// // p = 2, k = 1: the stopping time is 0 or 1 with equal probability
/// let mgf = spikecov::lowerbound::stopped_walk_mgf(2, 1, 1.0);
/// assert!((mgf - (0.5 + 0.5 * 1.0_f64.exp())).abs() < 1e-12);
/// ```
pub fn stopped_walk_mgf(p: usize, k: usize, t: f64) -> f64 {
    1.0 + StoppedWalkDist::new(p, k).mgf_excess(t)
}

/// The closed-form bound g(a) = max of the three case bounds:
/// large k: exp(7a)/√(1 − 8 log(2e) a); small k: exp(8a);
/// moderate k: exp(8a)/√(1 − 4√a) + 7 exp(−1/√a).
/// Domain 0 < a < 1/36.
pub fn g_bound(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < A_MAX) {
        return Err(Error::Domain(format!(
            "g(a) is defined for 0 < a < 1/36, got {a}"
        )));
    }
    let log2e = (2.0 * std::f64::consts::E).ln();
    let case1 = (7.0 * a).exp() / (1.0 - 8.0 * log2e * a).sqrt();
    let case2 = (8.0 * a).exp();
    let case3 = (8.0 * a).exp() / (1.0 - 4.0 * a.sqrt()).sqrt() + 7.0 * (-1.0 / a.sqrt()).exp();
    Ok(case1.max(case2).max(case3))
}

/// The necessity lower bound exp(t k² − k log(2p/k)) for E[exp(t G_H²)].
pub fn mgf_tightness_lb(p: usize, k: usize, t: f64) -> f64 {
    assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
    assert!(t >= 0.0, "need t ≥ 0");
    let (kf, pf) = (k as f64, p as f64);
    (t * kf * kf - kf * (2.0 * pf / kf).ln()).exp()
}

// ---------------------------------------------------------------------------
// χ² divergences for the rank-one spiked mixture
// ---------------------------------------------------------------------------

/// The exact χ² divergence between the n-sample uniform Rademacher-prior
/// mixture N(0, I + λuu') and N(0, I):
/// χ² = E[(1 − λ²G_H²/k²)^(−n/2)] − 1, by exact enumeration.
///
/// Requires 0 ≤ λ ≤ 1; returns +∞ at λ = 1 (the |G_H| = k atom carries
/// positive mass and the integrand diverges there).
pub fn chi2_rank_one_exact(n: usize, lambda: f64, p: usize, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "χ² enumeration needs 0 ≤ λ ≤ 1, got {lambda}"
        )));
    }
    assert!(n >= 1, "need n ≥ 1");
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let dist = StoppedWalkDist::new(p, k);
    let k2 = (k * k) as f64;
    let half_n = n as f64 / 2.0;
    let mut excess = 0.0;
    for &(_, g, prob) in dist.atoms() {
        if prob == 0.0 {
            continue;
        }
        let x = lambda * lambda * (g * g) as f64 / k2;
        if x >= 1.0 {
            return Ok(f64::INFINITY);
        }
        // (1−x)^(−n/2) − 1, summed with full relative precision
        excess += prob * f64::exp_m1(-half_n * f64::ln_1p(-x));
        if !excess.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    Ok(excess)
}

/// The proof's surrogate: E[exp(n λ² ⟨uu', ũũ'⟩²)] − 1 = E[exp(t G_H²)] − 1
/// with t = nλ²/k². Not equal to [`chi2_rank_one_exact`] in general; the two
/// are separate routes and are never asserted equal.
pub fn chi2_surrogate(n: usize, lambda: f64, p: usize, k: usize) -> f64 {
    assert!(n >= 1, "need n ≥ 1");
    assert!(lambda >= 0.0, "need λ ≥ 0");
    let t = n as f64 * lambda * lambda / (k * k) as f64;
    StoppedWalkDist::new(p, k).mgf_excess(t)
}

// ---------------------------------------------------------------------------
// Testing error floor and detection threshold
// ---------------------------------------------------------------------------

/// w from a given g value: max{0, 1 − √((g − 1)/2)}.
pub fn testing_error_from_g(g: f64) -> f64 {
    (1.0 - ((g - 1.0) / 2.0).sqrt()).max(0.0)
}

/// The testing-error floor w(β₀) = max{0, 1 − √((g(β₀) − 1)/2)} on (0, 1/36).
pub fn testing_error_lb(beta0: f64) -> Result<f64> {
    Ok(testing_error_from_g(g_bound(beta0)?))
}

/// The detection boundary λ = 1 ∧ √(β₀ (k/n) log(ep/k)). β₀ = 0 gives 0.
pub fn detection_threshold(beta0: f64, k: usize, p: usize, n: usize) -> f64 {
    assert!(beta0 >= 0.0, "need β₀ ≥ 0");
    assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
    assert!(n >= 1, "need n ≥ 1");
    let (kf, nf, pf) = (k as f64, n as f64, p as f64);
    (beta0 * kf / nf * (1.0 + (pf / kf).ln())).sqrt().min(1.0)
}

// ---------------------------------------------------------------------------
// Mixture likelihood ratio
// ---------------------------------------------------------------------------

/// The log likelihood ratio of the uniform k-sparse Rademacher mixture
/// alternative against N(0, I), evaluated on the data matrix `x`:
///
/// log mean_u ∏_rows N(0, I + λuu')(row) / N(0, I)(row)
///
/// with the per-atom closed form −(n/2)log(1+λ) + λ/(2(1+λ)) · u'(X'X)u,
/// combined by a max-shifted log-sum-exp in a fixed atom order (supports
/// lexicographic, then sign patterns with the first support sign fixed
/// positive — u and −u index the same distribution, which halves the count).
///
/// Errors when C(p, k)·2^(k−1) exceeds `budget`.
pub fn lr_mixture_stat(x: &SampleMatrix, lambda: f64, k: usize, budget: u64) -> Result<f64> {
    assert!(lambda >= 0.0, "need λ ≥ 0");
    let p = x.p();
    let n = x.n();
    assert!(k >= 1 && k <= p, "need 1 ≤ k ≤ p");
    let n_supports = binomial_u128(p, k).ok_or_else(|| Error::Domain("C(p,k) overflow".into()))?;
    let n_signs: u128 = 1u128 << (k - 1);
    let atom_count = n_supports
        .checked_mul(n_signs)
        .filter(|&c| c <= budget as u128)
        .ok_or(Error::BudgetExceeded {
            examined: 0,
            budget,
        })?;

    // Gram matrix X'X, so each atom costs k² flops
    let mut gram = vec![0.0; p * p];
    for row in 0..n {
        let r = x.row(row);
        for i in 0..p {
            let ri = r[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..p {
                gram[i * p + j] += ri * r[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[i * p + j] = gram[j * p + i];
        }
    }

    let coef = lambda / (2.0 * (1.0 + lambda));
    let base = -(n as f64) / 2.0 * (1.0 + lambda).ln();
    let mut logs = Vec::with_capacity(atom_count as usize);
    let mut support: Vec<usize> = (0..k).collect();
    let mut signs = vec![1.0_f64; k];
    loop {
        for mask in 0..(1u64 << (k - 1)) {
            signs[0] = 1.0;
            for (b, s) in signs.iter_mut().enumerate().skip(1) {
                *s = if (mask >> (b - 1)) & 1 == 0 { 1.0 } else { -1.0 };
            }
            // u'(X'X)u with u = signs/√k on the support
            let mut quad = 0.0;
            for a in 0..k {
                let ga = &gram[support[a] * p..];
                for b in 0..k {
                    quad += signs[a] * signs[b] * ga[support[b]];
                }
            }
            quad /= k as f64;
            logs.push(base + coef * quad);
        }
        // advance the support lexicographically
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if support[i] < p - (k - i) {
                support[i] += 1;
                for j in (i + 1)..k {
                    support[j] = support[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            break;
        }
    }

    let max = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
    if !max.is_finite() {
        return Ok(max);
    }
    let sum: f64 = logs.iter().map(|&l| (l - max).exp()).sum();
    Ok(max + sum.ln() - (atom_count as f64).ln())
}

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

// ---------------------------------------------------------------------------
// Exact big-rational path
// ---------------------------------------------------------------------------

/// Exact rational pmfs, the oracle for the float paths (practical for
/// p up to ~20).
pub mod exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    /// Exact binomial coefficient.
    pub fn binomial(n: usize, k: usize) -> BigInt {
        if k > n {
            return BigInt::zero();
        }
        let k = k.min(n - k);
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    /// Walk pmf: entry j is P(G_m = m − 2j) = C(m, j) / 2^m.
    pub fn walk_pmf(m: usize) -> Vec<BigRational> {
        let denom = BigInt::one() << m;
        (0..=m)
            .map(|j| BigRational::new(binomial(m, j), denom.clone()))
            .collect()
    }

    /// Hypergeometric(p, k, k) pmf: entry i is P(H = i).
    pub fn hypergeom_pmf(p: usize, k: usize) -> Vec<BigRational> {
        assert!(k >= 1 && k <= p);
        let total = binomial(p, k);
        (0..=k)
            .map(|i| BigRational::new(binomial(k, i) * binomial(p - k, k - i), total.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn walk_pmf_is_a_symmetric_distribution() {
        for m in 0..=14 {
            let w = WalkDist::new(m);
            let total: f64 = w.atoms().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12, "m = {m}: mass {total}");
            for (g, p) in w.atoms() {
                assert!(close(p, w.prob(-g), 1e-14), "asymmetry at m={m}, g={g}");
            }
        }
    }

    #[test]
    fn hypergeom_pmf_sums_to_one() {
        for (p, k) in [(1, 1), (5, 2), (12, 5), (40, 20), (40, 37)] {
            let h = HypergeomDist::new(p, k);
            let total: f64 = h.pmf().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "p={p}, k={k}: mass {total}");
        }
    }

    #[test]
    fn stopped_walk_invariants() {
        for (p, k) in [(2, 1), (7, 3), (12, 6), (9, 9)] {
            let d = StoppedWalkDist::new(p, k);
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
            for &(h, g, _) in d.atoms() {
                assert!(g.unsigned_abs() as usize <= h && h <= k);
            }
        }
    }

    #[test]
    fn float_pmfs_match_rational_oracle() {
        for m in 0..=20 {
            let w = WalkDist::new(m);
            let ex = exact::walk_pmf(m);
            for (j, q) in ex.iter().enumerate() {
                let f = q.to_f64().unwrap();
                assert!(close(w.pmf[j], f, 1e-12), "walk m={m}, j={j}");
            }
        }
        for (p, k) in [(4, 2), (10, 3), (20, 8), (20, 20)] {
            let h = HypergeomDist::new(p, k);
            let ex = exact::hypergeom_pmf(p, k);
            for (i, q) in ex.iter().enumerate() {
                let f = q.to_f64().unwrap();
                assert!(close(h.prob(i), f, 1e-12), "hyper p={p}, k={k}, i={i}");
            }
        }
    }

    #[test]
    fn mgf_examples() {
        // t = 0 ⇒ exactly 1
        assert_eq!(stopped_walk_mgf(6, 3, 0.0), 1.0);
        // p = k = 1: H ≡ 1 and G² ≡ 1, so the MGF is e^t
        for t in [0.1, 0.5, 2.0] {
            assert!(close(stopped_walk_mgf(1, 1, t), t.exp(), 1e-12));
        }
        // p = 2, k = 1: H ∈ {0, 1} each with probability 1/2
        for t in [0.1, 1.0] {
            assert!(close(stopped_walk_mgf(2, 1, t), 0.5 + 0.5 * t.exp(), 1e-12));
        }
    }

    #[test]
    fn g_bound_shape() {
        // g(0+) = 1; the moderate-k case approaches at a √a rate, so the
        // 1e-6 neighborhood needs a ≈ 1e-14
        assert!(g_bound(1e-14).unwrap() <= 1.0 + 1e-6);
        assert!(g_bound(1e-8).unwrap() <= 1.001);
        // hand-evaluated case maximum at a = 0.01 (case III dominates)
        let g = g_bound(0.01).unwrap();
        assert!((g - 1.3988).abs() < 5e-4, "g(0.01) = {g}");
        // monotone
        assert!(g_bound(0.02).unwrap() > g_bound(0.01).unwrap());
        // domain errors outside (0, 1/36)
        assert!(g_bound(A_MAX).is_err());
        assert!(g_bound(0.05).is_err());
        assert!(g_bound(0.0).is_err());
        assert!(g_bound(-0.01).is_err());
    }

    #[test]
    fn mgf_bounded_by_g_on_a_small_grid() {
        for p in [5usize, 9, 17] {
            for k in 1..=p {
                for a in [0.005, 0.01, 0.027] {
                    let t = a / k as f64 * (1.0 + (p as f64 / k as f64).ln());
                    let mgf = stopped_walk_mgf(p, k, t);
                    let g = g_bound(a).unwrap();
                    assert!(mgf <= g + 1e-9, "p={p}, k={k}, a={a}: {mgf} > {g}");
                    let lb = mgf_tightness_lb(p, k, t);
                    assert!(lb <= mgf + 1e-9 * (1.0 + mgf), "tightness p={p}, k={k}, a={a}");
                }
            }
        }
    }

    #[test]
    fn tightness_examples() {
        // t = 0, k = p: exp(−p log 2) = 2^(−p)
        for p in [1usize, 4, 9] {
            assert!(close(mgf_tightness_lb(p, p, 0.0), 0.5_f64.powi(p as i32), 1e-12));
        }
        // p = 4, k = 2, t = 1: exp(4 − 2 log 4) = e⁴/16
        assert!(close(mgf_tightness_lb(4, 2, 1.0), 4.0_f64.exp() / 16.0, 1e-12));
    }

    #[test]
    fn chi2_exact_examples() {
        assert_eq!(chi2_rank_one_exact(5, 0.0, 7, 2).unwrap(), 0.0);
        // p = k = 1, n = 2, λ = 0.5: (1 − 0.25)^(−1) − 1 = 1/3
        let v = chi2_rank_one_exact(2, 0.5, 1, 1).unwrap();
        assert!(close(v, 1.0 / 3.0, 1e-14), "{v}");
        // λ = 1 diverges: the |G| = k atom has positive mass
        assert!(chi2_rank_one_exact(1, 1.0, 1, 1).unwrap().is_infinite());
        assert!(chi2_rank_one_exact(3, 1.0, 9, 4).unwrap().is_infinite());
        // λ > 1 is outside the parameter space
        assert!(chi2_rank_one_exact(2, 1.1, 4, 2).is_err());
    }

    #[test]
    fn chi2_exact_closed_form_at_scalar_case() {
        for n in 1..=50 {
            for tenths in 0..=9 {
                let lambda = tenths as f64 / 10.0;
                let got = chi2_rank_one_exact(n, lambda, 1, 1).unwrap();
                let want = (1.0 - lambda * lambda).powf(-(n as f64) / 2.0) - 1.0;
                assert!(close(got, want, 1e-12), "n={n}, λ={lambda}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn chi2_exact_is_monotone() {
        for lambda in [0.2, 0.5, 0.8] {
            let mut last = 0.0;
            for n in [1usize, 2, 5, 10, 30] {
                let v = chi2_rank_one_exact(n, lambda, 8, 3).unwrap();
                assert!(v >= last);
                last = v;
            }
        }
        let mut last = 0.0;
        for tenths in 0..=10 {
            let lambda = tenths as f64 / 10.0;
            let v = chi2_rank_one_exact(4, lambda, 8, 3).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn chi2_surrogate_examples() {
        assert_eq!(chi2_surrogate(4, 0.0, 6, 2), 0.0);
        // p = k = 1, n = 2, λ = 0.5: t = 0.5, single walk value ±1
        assert!(close(chi2_surrogate(2, 0.5, 1, 1), 0.5_f64.exp() - 1.0, 1e-12));
        // closed form e^(nλ²) − 1 at p = k = 1 (the surrogate's own form;
        // never asserted equal to the exact χ²)
        for n in [1usize, 3, 10] {
            for lambda in [0.1, 0.4, 0.9] {
                let t: f64 = n as f64 * lambda * lambda;
                assert!(close(chi2_surrogate(n, lambda, 1, 1), t.exp() - 1.0, 1e-12));
            }
        }
        // at the β₀ = 0.01 detection threshold the Lemma bound applies
        let (p, k, n) = (10, 2, 50);
        let lambda = detection_threshold(0.01, k, p, n);
        let v = chi2_surrogate(n, lambda, p, k);
        assert!(v <= g_bound(0.01).unwrap() - 1.0 + 1e-12);
    }

    #[test]
    fn testing_error_floor() {
        // w(0+) = 1, approached at a fourth-root rate
        assert!(testing_error_lb(1e-14).unwrap() >= 0.999);
        assert!(testing_error_lb(1e-8).unwrap() >= 0.98);
        let w = testing_error_lb(0.01).unwrap();
        assert!((w - 0.553).abs() < 5e-3, "w(0.01) = {w}");
        // the clamp branch of max{0, ·}
        assert_eq!(testing_error_from_g(3.0), 0.0);
        assert_eq!(testing_error_from_g(4.2), 0.0);
        assert!(testing_error_lb(0.05).is_err());
    }

    #[test]
    fn detection_threshold_values() {
        assert_eq!(detection_threshold(0.0, 2, 10, 50), 0.0);
        // k = p: log(ep/p) = 1, so the threshold is 1 ∧ √(β₀ p/n)
        let v = detection_threshold(0.04, 8, 8, 2);
        assert!(close(v, (0.04_f64 * 8.0 / 2.0).sqrt(), 1e-12));
        assert_eq!(detection_threshold(9.0, 8, 8, 2), 1.0); // capped
        // β₀ = 0.01, k = 2, p = 10, n = 50
        let v = detection_threshold(0.01, 2, 10, 50);
        let want = (0.01_f64 * (2.0 / 50.0) * (1.0 + 5.0_f64.ln())).sqrt();
        assert!(close(v, want, 1e-12));
        assert!((v - 0.0323).abs() < 1e-4, "threshold = {v}");
    }

    #[test]
    fn lr_stat_examples() {
        let x = SampleMatrix::new(2, 3, vec![0.3, -1.0, 0.5, 1.2, 0.0, -0.7]).unwrap();
        // λ = 0: identical hypotheses, statistic exactly 0
        assert_eq!(lr_mixture_stat(&x, 0.0, 2, 1000).unwrap(), 0.0);

        // p = k = 1, one row: −½ log(1+λ) + λ/(2(1+λ)) x²
        let single = SampleMatrix::new(1, 1, vec![1.7]).unwrap();
        let lambda = 0.9;
        let got = lr_mixture_stat(&single, lambda, 1, 10).unwrap();
        let want = -0.5 * (1.0 + lambda).ln() + lambda / (2.0 * (1.0 + lambda)) * 1.7 * 1.7;
        assert!(close(got, want, 1e-12));
    }

    #[test]
    fn lr_stat_is_sign_invariant() {
        let x = SampleMatrix::new(
            3,
            4,
            vec![0.5, -0.2, 1.1, 0.3, -0.9, 0.4, 0.0, 1.5, 0.2, 0.2, -0.6, -1.2],
        )
        .unwrap();
        let flipped = SampleMatrix::new(
            3,
            4,
            x.data()
                .chunks(4)
                .flat_map(|row| vec![row[0], -row[1], row[2], -row[3]])
                .collect(),
        )
        .unwrap();
        let a = lr_mixture_stat(&x, 0.7, 2, 1000).unwrap();
        let b = lr_mixture_stat(&flipped, 0.7, 2, 1000).unwrap();
        assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn lr_stat_budget_is_enforced() {
        let x = SampleMatrix::new(2, 10, vec![0.1; 20]).unwrap();
        // C(10,3)·4 = 480 atoms > 100
        assert!(matches!(
            lr_mixture_stat(&x, 0.5, 3, 100),
            Err(crate::error::Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn rational_path_matches_brute_force_small_m() {
        // direct enumeration of all 2^m sign sequences
        for m in 0..=10usize {
            let mut counts = vec![BigRational::zero(); m + 1];
            for mask in 0u32..(1 << m) {
                let sum: i64 = (0..m).map(|b| if (mask >> b) & 1 == 0 { 1i64 } else { -1 }).sum();
                let j = ((m as i64 - sum) / 2) as usize;
                counts[j] += BigRational::new(BigInt::one(), BigInt::one() << m);
            }
            assert_eq!(counts, exact::walk_pmf(m), "m = {m}");
        }
    }
}
