//! Sparse spiked covariance estimation and its minimax testing machinery.
//!
//! The library implements, at desk scale, the full pipeline around the
//! sparse spiked covariance model Σ = VΛV' + I with jointly k-sparse V:
//!
//! * [`matcore`] — deterministic symmetric linear algebra: cyclic Jacobi
//!   eigendecomposition, spectral norms, padded submatrices, orthonormal
//!   bases and the sin-theta subspace loss.
//! * [`model`] — ground-truth models, parameter spaces Θ₀/Θ₁/Θ₂, seeded
//!   Gaussian sampling, sample covariance, sparse priors, CSV data I/O.
//! * [`estimators`] — the support-selection estimation pipeline: the η
//!   deviation threshold, the admissible family B_k, and the estimators for
//!   the covariance matrix, rank, principal subspace, precision matrix,
//!   eigenvalues, and noise variance, plus the adaptive-k heuristic.
//! * [`lowerbound`] — exact combinatorics behind the testing lower bounds:
//!   the hypergeometrically stopped random walk and its MGF, χ² divergences
//!   of rank-one spiked mixtures, the testing-error floor, the detection
//!   threshold, and the mixture likelihood-ratio statistic.
//! * [`harness`] — seeded, reproducible Monte Carlo experiments with
//!   machine-readable CSV/JSON reports, wired to the `spikecov` CLI.
//!
//! Everything is deterministic given the seeds: the RNG is a counter-based
//! SplitMix64 ([`rng`]), replicate streams are derived by hashing, and all
//! reductions run in fixed order, so reports are byte-identical across
//! thread counts.
//!
//! # Example
//!
//! Simulate a rank-one spiked model, run the pipeline, and check the
//! recovered support and subspace:
//!
//! ```
//! use spikecov::{estimators, model, IndexSet, SelectorConfig, sin_theta_loss};
//!
//! let support = IndexSet::new(vec![0, 3]).unwrap();
//! let v = model::equal_mass_vector(8, &support);
//! let truth = model::SpikedModel::rank_one(8, 2, v, 6.0).unwrap();
//!
//! let n = 600;
//! let s = truth.sample(n, 42).sample_covariance();
//! let est = estimators::estimate_all(&s, n, &SelectorConfig::new(2)).unwrap();
//!
//! assert_eq!(est.a_hat.as_ref().unwrap().as_slice(), &[0, 3]);
//! // at population input the recovery is exact
//! let pop = estimators::estimate_all(&truth.build_covariance(), n, &SelectorConfig::new(2)).unwrap();
//! assert_eq!(pop.sigma_hat, truth.build_covariance());
//! ```

pub mod error;
pub mod estimators;
pub mod harness;
pub mod lowerbound;
pub mod matcore;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{EstimationResult, SelectorConfig};
pub use matcore::{
    eig_sym, pad_submatrix, principal_projection, sin_theta_loss, spectral_norm, EigenDecomp,
    IndexSet, OrthoBasis, SymMatrix,
};
pub use model::{membership_theta, ParamSpaceSpec, SampleMatrix, SparsePrior, SpikedModel};
