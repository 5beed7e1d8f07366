//! Seeded Monte Carlo experiments with machine-readable reports.
//!
//! Every experiment is a pure function of its configuration and master seed:
//! replicate i of cell c draws from the stream `hash(master, c, i)`, losses
//! are stored per replicate index, and aggregation runs in replicate order,
//! so reports are byte-identical across thread counts and reruns of any
//! subset of cells.
//!
//! Reports serialize to schema-versioned JSON (round-trippable) and to CSV
//! with a documented header; both embed the master seed, a config echo, and
//! the library version.

use crate::error::{Error, Result};
use crate::estimators::{self, SelectorConfig};
use crate::lowerbound;
use crate::matcore::{eig_sym, sin_theta_loss, spectral_norm, IndexSet, OrthoBasis, SymMatrix};
use crate::model::{draw_prior, equal_mass_vector, seeded_basis, SparsePrior, SpikedModel};
use crate::rng::{derive_stream, SplitMix64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Version stamp of the report schema.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Full-pipeline losses against the rate formulas, λ × n grid.
    EstimationRisk,
    /// Empirical P(r̂ ≠ r) along a grid of threshold multiples β.
    RankDetection,
    /// Type-I + Type-II error of the exact mixture likelihood-ratio test
    /// against the w(β₀) floor.
    LrFloor,
    /// Exact stopped-walk MGF against its closed-form bounds on a grid.
    MgfAudit,
    /// Sin-theta and Weyl inequalities on random matrix pairs.
    SinThetaAudit,
    /// Estimation risk across an n grid with a ratio-stability summary.
    RateScaling,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "estimation-risk" | "risk" => Ok(Self::EstimationRisk),
            "rank-detection" | "rank-detect" => Ok(Self::RankDetection),
            "lr-floor" => Ok(Self::LrFloor),
            "mgf-audit" => Ok(Self::MgfAudit),
            "sin-theta-audit" => Ok(Self::SinThetaAudit),
            "rate-scaling" => Ok(Self::RateScaling),
            other => Err(Error::InvalidConfig(format!("unknown experiment kind '{other}'"))),
        }
    }
}

/// Output format for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}'"))),
        }
    }
}

/// Full experiment description. Defaults are desk-scale; every field can be
/// overridden by a config file and then by CLI flags (CLI > file > defaults).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub p: usize,
    pub k: usize,
    pub r: usize,
    /// Spike sizes for risk experiments (grid crossed with `ns`).
    pub lambdas: Vec<f64>,
    /// Threshold multiples β for rank detection: λ = β·threshold(1, k, p, n).
    pub betas: Vec<f64>,
    /// The below-boundary constant for lr-floor runs (must be < 1/36).
    pub beta0: f64,
    /// Condition bound echoed into reports; models here use equal spikes.
    pub tau: f64,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub gamma1: f64,
    /// None means the γ₁-derived default 8√γ₁ + 34.
    pub gamma2: Option<f64>,
    pub budget: u64,
    /// Feed the population covariance through the pipeline (no sampling).
    pub population_input: bool,
    /// MGF audit grid: p from `mgf_p_min` to `mgf_p_max`, all k, each a.
    pub mgf_p_min: usize,
    pub mgf_p_max: usize,
    pub mgf_a: Vec<f64>,
    /// Minimum eigengap for the sin-theta audit pair generator.
    pub gap: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::EstimationRisk,
            p: 8,
            k: 2,
            r: 1,
            lambdas: vec![1.0],
            betas: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            beta0: 0.01,
            tau: 1.0,
            ns: vec![100],
            replicates: 100,
            seed: 0,
            gamma1: SelectorConfig::DEFAULT_GAMMA1,
            gamma2: None,
            budget: SelectorConfig::DEFAULT_BUDGET,
            population_input: false,
            mgf_p_min: 5,
            mgf_p_max: 40,
            mgf_a: vec![0.005, 0.01, 0.02, 0.027],
            gap: 0.1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("need at least one replicate".into()));
        }
        if !(self.r <= self.k && self.k <= self.p && self.k >= 1) {
            return Err(Error::InvalidConfig(format!(
                "need r ≤ k ≤ p with k ≥ 1, got r={}, k={}, p={}",
                self.r, self.k, self.p
            )));
        }
        if self.ns.iter().any(|&n| n < 1) {
            return Err(Error::InvalidConfig("sample sizes must be ≥ 1".into()));
        }
        if self.tau < 1.0 {
            return Err(Error::InvalidConfig("τ must be at least 1".into()));
        }
        Ok(())
    }

    /// The selector configuration implied by this experiment config.
    pub fn selector(&self) -> Result<SelectorConfig> {
        let mut cfg = SelectorConfig::new(self.k)
            .with_gamma1(self.gamma1)?
            .with_budget(self.budget);
        if let Some(g2) = self.gamma2 {
            cfg = cfg.with_gamma2(g2);
        }
        Ok(cfg)
    }
}

/// Optional overrides parsed from a flat key-value config file or CLI flags.
/// Precedence when applied: the override wins over the existing value.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub kind: Option<ExperimentKind>,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub beta0: Option<f64>,
    pub tau: Option<f64>,
    pub ns: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub budget: Option<u64>,
    pub population_input: Option<bool>,
    pub mgf_p_min: Option<usize>,
    pub mgf_p_max: Option<usize>,
    pub mgf_a: Option<Vec<f64>>,
    pub gap: Option<f64>,
}

impl ConfigOverrides {
    /// Parse a flat `key = value` file (`#` comments, blank lines allowed).
    ///
    /// Keys: experiment, p, k, r, lambda, beta, beta0, tau, n, reps, seed,
    /// gamma1, gamma2, budget, population-input, mgf-p-min, mgf-p-max,
    /// mgf-a, gap. List values are comma-separated.
    pub fn parse_file(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        let mut ov = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse {
                    path: path.into(),
                    msg: format!("line {}: expected 'key = value'", lineno + 1),
                })?;
            let ctx = |msg: String| Error::Parse {
                path: path.into(),
                msg: format!("line {}: {msg}", lineno + 1),
            };
            match key {
                "experiment" => ov.kind = Some(ExperimentKind::parse(value)?),
                "p" => ov.p = Some(parse_one(value).map_err(ctx)?),
                "k" => ov.k = Some(parse_one(value).map_err(ctx)?),
                "r" => ov.r = Some(parse_one(value).map_err(ctx)?),
                "lambda" => ov.lambdas = Some(parse_list(value).map_err(ctx)?),
                "beta" => ov.betas = Some(parse_list(value).map_err(ctx)?),
                "beta0" => ov.beta0 = Some(parse_one(value).map_err(ctx)?),
                "tau" => ov.tau = Some(parse_one(value).map_err(ctx)?),
                "n" => ov.ns = Some(parse_list(value).map_err(ctx)?),
                "reps" => ov.replicates = Some(parse_one(value).map_err(ctx)?),
                "seed" => ov.seed = Some(parse_one(value).map_err(ctx)?),
                "gamma1" => ov.gamma1 = Some(parse_one(value).map_err(ctx)?),
                "gamma2" => ov.gamma2 = Some(parse_one(value).map_err(ctx)?),
                "budget" => ov.budget = Some(parse_one(value).map_err(ctx)?),
                "population-input" => {
                    ov.population_input = Some(parse_one(value).map_err(ctx)?)
                }
                "mgf-p-min" => ov.mgf_p_min = Some(parse_one(value).map_err(ctx)?),
                "mgf-p-max" => ov.mgf_p_max = Some(parse_one(value).map_err(ctx)?),
                "mgf-a" => ov.mgf_a = Some(parse_list(value).map_err(ctx)?),
                "gap" => ov.gap = Some(parse_one(value).map_err(ctx)?),
                other => {
                    return Err(Error::Parse {
                        path: path.into(),
                        msg: format!("line {}: unknown key '{other}'", lineno + 1),
                    })
                }
            }
        }
        Ok(ov)
    }

    /// Apply these overrides on top of `cfg`.
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        take!(
            kind, p, k, r, lambdas, betas, beta0, tau, ns, replicates, seed, gamma1, budget,
            population_input, mgf_p_min, mgf_p_max, mgf_a, gap
        );
        if self.gamma2.is_some() {
            cfg.gamma2 = self.gamma2;
        }
    }
}

fn parse_one<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("bad value '{s}': {e}"))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|x| parse_one(x.trim()))
        .collect::<std::result::Result<Vec<T>, String>>()
}

// ---------------------------------------------------------------------------
// Rate formulas
// ---------------------------------------------------------------------------

fn log_ep_over_k(p: usize, k: usize) -> f64 {
    1.0 + (p as f64 / k as f64).ln()
}

/// (λ+1)·(k/n)·log(ep/k) + λ²r/n, the covariance-risk rate.
pub fn rate_sigma(p: usize, k: usize, r: usize, lambda: f64, n: usize) -> f64 {
    let nf = n as f64;
    (lambda + 1.0) * k as f64 / nf * log_ep_over_k(p, k) + lambda * lambda * r as f64 / nf
}

/// k(λ+1)/(nλ²)·log(ep/k) ∧ 1, the subspace-risk rate (1 at λ = 0).
pub fn rate_v(p: usize, k: usize, lambda: f64, n: usize) -> f64 {
    if lambda == 0.0 {
        return 1.0;
    }
    (k as f64 * (lambda + 1.0) / (n as f64 * lambda * lambda) * log_ep_over_k(p, k)).min(1.0)
}

/// (k/n)·log(ep/k), the precision and eigenvalue rate.
pub fn rate_omega_eig(p: usize, k: usize, n: usize) -> f64 {
    k as f64 / n as f64 * log_ep_over_k(p, k)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Metadata stamped into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub schema_version: u32,
    pub library_version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
}

impl ReportMeta {
    fn new(cfg: &ExperimentConfig) -> Self {
        ReportMeta {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.seed,
            config: cfg.clone(),
        }
    }
}

/// Per-replicate losses; `None` marks a replicate lost to a budget error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateLoss {
    pub replicate: usize,
    pub budget_error: bool,
    pub r_hat: Option<usize>,
    pub loss_sigma: Option<f64>,
    pub loss_v: Option<f64>,
    pub loss_omega: Option<f64>,
    pub loss_eig: Option<f64>,
    /// ‖Σ̂ − Σ‖ − max_i |Ê_i − E_i|; non-negative when Weyl holds.
    pub weyl_slack: Option<f64>,
    /// ‖Ω̂‖; always at most 2 by construction.
    pub omega_norm: Option<f64>,
}

/// One cell (parameter combination) of a risk experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCell {
    pub cell: usize,
    pub p: usize,
    pub k: usize,
    pub r: usize,
    pub lambda: f64,
    pub n: usize,
    pub replicates: Vec<ReplicateLoss>,
    pub budget_errors: usize,
    pub loss_sigma_mean: f64,
    pub loss_sigma_se: f64,
    pub loss_v_mean: f64,
    pub loss_v_se: f64,
    pub loss_omega_mean: f64,
    pub loss_omega_se: f64,
    pub loss_eig_mean: f64,
    pub loss_eig_se: f64,
    pub rate_sigma: f64,
    pub rate_v: f64,
    pub rate_omega: f64,
    pub rate_eig: f64,
    pub ratio_sigma: f64,
    pub ratio_v: f64,
    /// (k/n)·log(ep/k): the small-sample diagnostic the rate guarantees
    /// assume to be small; reported, never enforced.
    pub small_n_diag: f64,
}

/// Risk experiment report: one cell per (λ, n) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub meta: ReportMeta,
    pub cells: Vec<RiskCell>,
    /// max/min ratio spread over cells sharing a λ, for rate-scaling runs.
    pub ratio_spread_sigma: Option<f64>,
    pub ratio_spread_v: Option<f64>,
}

/// One point of a detection or lr-floor experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionPoint {
    pub point: usize,
    pub lambda: f64,
    /// λ as a multiple of detection_threshold(1, k, p, n).
    pub beta: f64,
    pub true_rank: usize,
    pub replicates: usize,
    pub completed: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub se: f64,
    /// The guarantee's bound shape p^(1−γ₁/2); its absolute constant is unknown.
    pub bound_shape: f64,
    /// w(β₀) floor (lr-floor points only).
    pub w_floor: Option<f64>,
    pub type1: Option<f64>,
    pub type2: Option<f64>,
    pub budget_errors: usize,
}

/// Rank-detection / lr-floor report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub meta: ReportMeta,
    pub points: Vec<DetectionPoint>,
}

/// One grid point of the MGF audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfPoint {
    pub p: usize,
    pub k: usize,
    pub a: f64,
    pub t: f64,
    pub mgf: f64,
    pub g_bound: f64,
    pub tightness_lb: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

/// MGF audit report over the (p, k, a) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfAuditReport {
    pub meta: ReportMeta,
    pub points: Vec<MgfPoint>,
    pub violations: usize,
}

/// Sin-theta / Weyl audit over random matrix pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinThetaAuditReport {
    pub meta: ReportMeta,
    pub pairs: usize,
    pub violations_sin_theta: usize,
    pub violations_weyl: usize,
    /// Minimum of lhs − rhs over all pairs for each inequality.
    pub min_sin_theta_slack: f64,
    pub min_weyl_slack: f64,
}

/// Any report, tagged for JSON round trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report")]
pub enum Report {
    Risk(RiskReport),
    Detection(DetectionReport),
    MgfAudit(MgfAuditReport),
    SinTheta(SinThetaAuditReport),
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// CSV rendering: one row per cell/point with the documented header.
    pub fn to_csv(&self) -> String {
        match self {
            Report::Risk(r) => {
                let mut out = String::from(
                    "cell,p,k,r,lambda,n,loss_sigma_mean,loss_sigma_se,loss_v_mean,loss_v_se,\
                     loss_omega_mean,loss_omega_se,loss_eig_mean,loss_eig_se,rate_sigma,rate_v,\
                     ratio_sigma,ratio_v,budget_errors\n",
                );
                for c in &r.cells {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        c.cell,
                        c.p,
                        c.k,
                        c.r,
                        c.lambda,
                        c.n,
                        c.loss_sigma_mean,
                        c.loss_sigma_se,
                        c.loss_v_mean,
                        c.loss_v_se,
                        c.loss_omega_mean,
                        c.loss_omega_se,
                        c.loss_eig_mean,
                        c.loss_eig_se,
                        c.rate_sigma,
                        c.rate_v,
                        c.ratio_sigma,
                        c.ratio_v,
                        c.budget_errors
                    ));
                }
                out
            }
            Report::Detection(r) => {
                let mut out = String::from(
                    "point,lambda,beta,true_rank,replicates,completed,errors,error_rate,se,\
                     bound_shape,w_floor,type1,type2,budget_errors\n",
                );
                for p in &r.points {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        p.point,
                        p.lambda,
                        p.beta,
                        p.true_rank,
                        p.replicates,
                        p.completed,
                        p.errors,
                        p.error_rate,
                        p.se,
                        p.bound_shape,
                        opt(p.w_floor),
                        opt(p.type1),
                        opt(p.type2),
                        p.budget_errors
                    ));
                }
                out
            }
            Report::MgfAudit(r) => {
                let mut out =
                    String::from("point,p,k,a,t,mgf,g_bound,tightness_lb,upper_ok,lower_ok\n");
                for (i, pt) in r.points.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        i, pt.p, pt.k, pt.a, pt.t, pt.mgf, pt.g_bound, pt.tightness_lb,
                        pt.upper_ok, pt.lower_ok
                    ));
                }
                out
            }
            Report::SinTheta(r) => {
                format!(
                    "pairs,violations_sin_theta,violations_weyl,min_sin_theta_slack,min_weyl_slack\n\
                     {},{},{},{},{}\n",
                    r.pairs,
                    r.violations_sin_theta,
                    r.violations_weyl,
                    r.min_sin_theta_slack,
                    r.min_weyl_slack
                )
            }
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write a report to `path` in the requested format.
pub fn emit_report(report: &Report, path: &str, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv(),
    };
    let mut f = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    f.write_all(text.as_bytes()).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

/// Load a JSON report back.
pub fn load_report(path: &str) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    Report::from_json(&text)
}

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// The ground-truth model used by risk and detection runs: support
/// {0, …, k−1}, equal spikes λ, and for r = 1 the equal-magnitude
/// direction (deterministic), otherwise a basis seeded from the master seed.
fn cell_model(cfg: &ExperimentConfig, lambda: f64, true_rank: usize) -> Result<SpikedModel> {
    let support = IndexSet::new((0..cfg.k).collect())?;
    if true_rank == 0 || lambda == 0.0 {
        return SpikedModel::identity(cfg.p, cfg.k);
    }
    let basis = if true_rank == 1 {
        OrthoBasis::new(cfg.p, 1, equal_mass_vector(cfg.p, &support))?
    } else {
        seeded_basis(
            cfg.p,
            &support,
            true_rank,
            derive_stream(cfg.seed, &[u64::MAX]),
        )?
    };
    SpikedModel::new(cfg.p, cfg.k, basis, vec![lambda; true_rank])
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ground truth bundled once per cell so replicates share it.
struct CellTruth {
    model: SpikedModel,
    sigma: SymMatrix,
    omega: SymMatrix,
    eig_targets: Vec<f64>,
}

impl CellTruth {
    fn new(model: SpikedModel) -> Self {
        let sigma = model.build_covariance();
        let omega = model.build_precision();
        let eig_targets = model.eigenvalue_targets();
        CellTruth {
            model,
            sigma,
            omega,
            eig_targets,
        }
    }
}

fn run_replicate(
    truth: &CellTruth,
    n: usize,
    sel: &SelectorConfig,
    population_input: bool,
    seed: u64,
    replicate: usize,
) -> Result<ReplicateLoss> {
    let (model, sigma, omega) = (&truth.model, &truth.sigma, &truth.omega);
    let s = if population_input {
        sigma.clone()
    } else {
        model.sample(n, seed).sample_covariance()
    };
    let est = match estimators::estimate_all(&s, n, sel) {
        Ok(e) => e,
        Err(Error::BudgetExceeded { .. }) => {
            return Ok(ReplicateLoss {
                replicate,
                budget_error: true,
                r_hat: None,
                loss_sigma: None,
                loss_v: None,
                loss_omega: None,
                loss_eig: None,
                weyl_slack: None,
                omega_norm: None,
            })
        }
        Err(e) => return Err(e),
    };
    let sigma_dev = spectral_norm(&est.sigma_hat.difference(sigma));
    let loss_sigma = sigma_dev * sigma_dev;
    let loss_v = if est.r_hat != model.r() {
        1.0
    } else {
        sin_theta_loss(&est.v_hat, model.basis())
    };
    let omega_hat = estimators::estimate_precision(&est.sigma_hat);
    let omega_dev = spectral_norm(&omega_hat.difference(omega));
    let eig_hat = estimators::estimate_eigenvalues(&est.sigma_hat);
    let eig_dev = eig_hat
        .iter()
        .zip(truth.eig_targets.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(ReplicateLoss {
        replicate,
        budget_error: false,
        r_hat: Some(est.r_hat),
        loss_sigma: Some(loss_sigma),
        loss_v: Some(loss_v),
        loss_omega: Some(omega_dev * omega_dev),
        loss_eig: Some(eig_dev * eig_dev),
        weyl_slack: Some(sigma_dev - eig_dev),
        omega_norm: Some(spectral_norm(&omega_hat)),
    })
}

/// Full-pipeline Monte Carlo risk over the λ × n grid.
pub fn run_estimation_risk(cfg: &ExperimentConfig, threads: usize) -> Result<RiskReport> {
    cfg.validate()?;
    let sel = cfg.selector()?;
    let pool = thread_pool(threads)?;
    let mut cells = Vec::new();
    let mut cell_idx = 0usize;
    for &lambda in &cfg.lambdas {
        let true_rank = if lambda == 0.0 { 0 } else { cfg.r };
        let truth = CellTruth::new(cell_model(cfg, lambda, true_rank)?);
        for &n in &cfg.ns {
            let master = cfg.seed;
            let reps: Vec<Result<ReplicateLoss>> = pool.install(|| {
                (0..cfg.replicates)
                    .into_par_iter()
                    .map(|rep| {
                        run_replicate(
                            &truth,
                            n,
                            &sel,
                            cfg.population_input,
                            derive_stream(master, &[cell_idx as u64, rep as u64]),
                            rep,
                        )
                    })
                    .collect()
            });
            let reps: Vec<ReplicateLoss> = reps.into_iter().collect::<Result<_>>()?;
            let budget_errors = reps.iter().filter(|r| r.budget_error).count();
            let collect = |f: fn(&ReplicateLoss) -> Option<f64>| -> Vec<f64> {
                reps.iter().filter_map(f).collect()
            };
            let (sig_m, sig_se) = mean_and_se(&collect(|r| r.loss_sigma));
            let (v_m, v_se) = mean_and_se(&collect(|r| r.loss_v));
            let (om_m, om_se) = mean_and_se(&collect(|r| r.loss_omega));
            let (ei_m, ei_se) = mean_and_se(&collect(|r| r.loss_eig));
            let rs = rate_sigma(cfg.p, cfg.k, true_rank, lambda, n);
            let rv = rate_v(cfg.p, cfg.k, lambda, n);
            cells.push(RiskCell {
                cell: cell_idx,
                p: cfg.p,
                k: cfg.k,
                r: true_rank,
                lambda,
                n,
                replicates: reps,
                budget_errors,
                loss_sigma_mean: sig_m,
                loss_sigma_se: sig_se,
                loss_v_mean: v_m,
                loss_v_se: v_se,
                loss_omega_mean: om_m,
                loss_omega_se: om_se,
                loss_eig_mean: ei_m,
                loss_eig_se: ei_se,
                rate_sigma: rs,
                rate_v: rv,
                rate_omega: rate_omega_eig(cfg.p, cfg.k, n),
                rate_eig: rate_omega_eig(cfg.p, cfg.k, n),
                ratio_sigma: sig_m / rs,
                ratio_v: v_m / rv,
                small_n_diag: cfg.k as f64 / n as f64 * log_ep_over_k(cfg.p, cfg.k),
            });
            cell_idx += 1;
        }
    }
    // ratio-stability summary: spread of ratios across n within each λ
    let spread = |get: fn(&RiskCell) -> f64| -> Option<f64> {
        let mut worst: Option<f64> = None;
        for &lambda in &cfg.lambdas {
            let ratios: Vec<f64> = cells
                .iter()
                .filter(|c| c.lambda == lambda && get(c) > 0.0)
                .map(get)
                .collect();
            if ratios.len() >= 2 {
                let max = ratios.iter().fold(f64::MIN, |m, &r| m.max(r));
                let min = ratios.iter().fold(f64::MAX, |m, &r| m.min(r));
                let s = max / min;
                worst = Some(worst.map_or(s, |w: f64| w.max(s)));
            }
        }
        worst
    };
    Ok(RiskReport {
        meta: ReportMeta::new(cfg),
        ratio_spread_sigma: spread(|c| c.ratio_sigma),
        ratio_spread_v: spread(|c| c.ratio_v),
        cells,
    })
}

/// Empirical rank-detection error along the β grid:
/// λ = β · detection_threshold(1, k, p, n), truth r (or 0 at β = 0).
pub fn run_rank_detection(cfg: &ExperimentConfig, threads: usize) -> Result<DetectionReport> {
    cfg.validate()?;
    let sel = cfg.selector()?;
    let n = cfg.ns[0];
    let thr = lowerbound::detection_threshold(1.0, cfg.k, cfg.p, n);
    let pool = thread_pool(threads)?;
    let mut points = Vec::new();
    for (idx, &beta) in cfg.betas.iter().enumerate() {
        let lambda = beta * thr;
        let true_rank = if lambda == 0.0 { 0 } else { cfg.r };
        let model = cell_model(cfg, lambda, true_rank)?;
        let master = cfg.seed;
        let outcomes: Vec<Result<Option<usize>>> = pool.install(|| {
            (0..cfg.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_stream(master, &[idx as u64, rep as u64]);
                    let s = if cfg.population_input {
                        model.build_covariance()
                    } else {
                        model.sample(n, seed).sample_covariance()
                    };
                    match estimators::estimate_all(&s, n, &sel) {
                        Ok(est) => Ok(Some(est.r_hat)),
                        Err(Error::BudgetExceeded { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        });
        let outcomes: Vec<Option<usize>> = outcomes.into_iter().collect::<Result<_>>()?;
        let budget_errors = outcomes.iter().filter(|o| o.is_none()).count();
        let completed = cfg.replicates - budget_errors;
        let errors = outcomes
            .iter()
            .flatten()
            .filter(|&&r_hat| r_hat != true_rank)
            .count();
        let error_rate = if completed > 0 {
            errors as f64 / completed as f64
        } else {
            0.0
        };
        let se = if completed > 0 {
            (error_rate * (1.0 - error_rate) / completed as f64).sqrt()
        } else {
            0.0
        };
        points.push(DetectionPoint {
            point: idx,
            lambda,
            beta,
            true_rank,
            replicates: cfg.replicates,
            completed,
            errors,
            error_rate,
            se,
            bound_shape: (cfg.p as f64).powf(1.0 - cfg.gamma1 / 2.0),
            w_floor: None,
            type1: None,
            type2: None,
            budget_errors,
        });
    }
    Ok(DetectionReport {
        meta: ReportMeta::new(cfg),
        points,
    })
}

/// Type-I + Type-II error of the threshold-0 mixture likelihood-ratio test
/// at λ = detection_threshold(β₀, k, p, n), against the w(β₀) floor.
/// β₀ = 0 exercises the degenerate λ = 0 case (identical hypotheses); the
/// floor is reported only where β₀ is inside w's domain.
pub fn run_lr_floor(cfg: &ExperimentConfig, threads: usize) -> Result<DetectionReport> {
    cfg.validate()?;
    let n = cfg.ns[0];
    let (p, k) = (cfg.p, cfg.k);
    let lambda = lowerbound::detection_threshold(cfg.beta0, k, p, n);
    let w_floor = lowerbound::testing_error_lb(cfg.beta0).ok();
    let null_model = SpikedModel::identity(p, k)?;
    let prior = SparsePrior::RademacherUniform { p, k };
    let budget = cfg.budget;
    let master = cfg.seed;
    let pool = thread_pool(threads)?;

    // arm 0 = null, arm 1 = mixture alternative
    let outcomes: Vec<Result<(bool, bool)>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let x0 = null_model.sample(n, derive_stream(master, &[0, rep as u64]));
                let stat0 = lowerbound::lr_mixture_stat(&x0, lambda, k, budget)?;
                let u = draw_prior(&prior, derive_stream(master, &[1, rep as u64, 0])).u;
                let alt = if lambda == 0.0 {
                    SpikedModel::identity(p, k)?
                } else {
                    SpikedModel::rank_one(p, k, u, lambda)?
                };
                let x1 = alt.sample(n, derive_stream(master, &[1, rep as u64, 1]));
                let stat1 = lowerbound::lr_mixture_stat(&x1, lambda, k, budget)?;
                // reject H0 iff the log likelihood ratio is positive; the
                // tie at λ = 0 counts against the alternative side
                Ok((stat0 > 0.0, stat1 <= 0.0))
            })
            .collect()
    });
    let outcomes: Vec<(bool, bool)> = outcomes.into_iter().collect::<Result<_>>()?;
    let m = outcomes.len() as f64;
    let rejects = outcomes.iter().filter(|o| o.0).count();
    let accepts = outcomes.iter().filter(|o| o.1).count();
    let type1 = rejects as f64 / m;
    let type2 = accepts as f64 / m;
    let se = ((type1 * (1.0 - type1) + type2 * (1.0 - type2)) / m).sqrt();
    let thr1 = lowerbound::detection_threshold(1.0, k, p, n);
    let point = DetectionPoint {
        point: 0,
        lambda,
        beta: if thr1 > 0.0 { lambda / thr1 } else { 0.0 },
        true_rank: 1,
        replicates: cfg.replicates,
        completed: cfg.replicates,
        errors: rejects + accepts,
        error_rate: type1 + type2,
        se,
        bound_shape: (p as f64).powf(1.0 - cfg.gamma1 / 2.0),
        w_floor,
        type1: Some(type1),
        type2: Some(type2),
        budget_errors: 0,
    };
    Ok(DetectionReport {
        meta: ReportMeta::new(cfg),
        points: vec![point],
    })
}

/// Exact stopped-walk MGF against g(a) and the tightness lower bound on the
/// full (p, k, a) grid.
pub fn run_mgf_audit(cfg: &ExperimentConfig, threads: usize) -> Result<MgfAuditReport> {
    let pool = thread_pool(threads)?;
    let mut grid = Vec::new();
    for p in cfg.mgf_p_min..=cfg.mgf_p_max {
        for k in 1..=p {
            for &a in &cfg.mgf_a {
                grid.push((p, k, a));
            }
        }
    }
    let points: Vec<Result<MgfPoint>> = pool.install(|| {
        grid.par_iter()
            .map(|&(p, k, a)| {
                let t = a / k as f64 * (1.0 + (p as f64 / k as f64).ln());
                let mgf = lowerbound::stopped_walk_mgf(p, k, t);
                let g = lowerbound::g_bound(a)?;
                let lb = lowerbound::mgf_tightness_lb(p, k, t);
                Ok(MgfPoint {
                    p,
                    k,
                    a,
                    t,
                    mgf,
                    g_bound: g,
                    tightness_lb: lb,
                    upper_ok: mgf <= g + 1e-9,
                    lower_ok: lb <= mgf + 1e-9 * (1.0 + mgf),
                })
            })
            .collect()
    });
    let points: Vec<MgfPoint> = points.into_iter().collect::<Result<_>>()?;
    let violations = points.iter().filter(|pt| !pt.upper_ok || !pt.lower_ok).count();
    Ok(MgfAuditReport {
        meta: ReportMeta::new(cfg),
        points,
        violations,
    })
}

/// Random (Σ, Σ̂) pairs with a controlled eigengap: checks the sin-theta
/// inequality ‖Σ̂−Σ‖ ≥ ½(σ_r − σ_{r+1})‖V̂V̂' − VV'‖ and Weyl's inequality
/// on every pair.
pub fn run_sin_theta_audit(cfg: &ExperimentConfig, threads: usize) -> Result<SinThetaAuditReport> {
    cfg.validate()?;
    let p = cfg.p;
    let gap = cfg.gap;
    let master = cfg.seed;
    let pool = thread_pool(threads)?;
    let results: Vec<(f64, f64)> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|pair| {
                let mut rng = SplitMix64::new(derive_stream(master, &[pair as u64]));
                // random orthobasis from a Gaussian matrix's eigenvectors
                let g = SymMatrix::from_fn(p, |_, _| rng.next_gaussian());
                let q = eig_sym(&g);
                // descending eigenvalues with a forced gap below position r
                let r = 1 + rng.next_index(p - 1);
                let mut vals: Vec<f64> = (0..p).map(|_| 2.0 * rng.next_f64()).collect();
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                for v in vals.iter_mut().take(r) {
                    *v += gap;
                }
                let sigma = SymMatrix::from_fn(p, |i, j| {
                    (0..p).map(|l| q.vector(l)[i] * vals[l] * q.vector(l)[j]).sum()
                });
                let scale = rng.next_f64();
                let noise = SymMatrix::from_fn(p, |_, _| scale * rng.next_gaussian());
                let sigma_hat =
                    SymMatrix::from_fn(p, |i, j| sigma.get(i, j) + noise.get(i, j));

                let d = eig_sym(&sigma);
                let dh = eig_sym(&sigma_hat);
                let dev = spectral_norm(&sigma_hat.difference(&sigma));
                let eigengap = d.value(r - 1) - d.value(r);
                let proj_dist = crate::matcore::projector_distance(
                    &d.leading_basis(r),
                    &dh.leading_basis(r),
                );
                let ssv_slack = dev - 0.5 * eigengap * proj_dist;
                let weyl_dev = (0..p)
                    .map(|i| (d.value(i) - dh.value(i)).abs())
                    .fold(0.0_f64, f64::max);
                let weyl_slack = dev - weyl_dev;
                (ssv_slack, weyl_slack)
            })
            .collect()
    });
    let violations_sin_theta = results.iter().filter(|(s, _)| *s < -1e-9).count();
    let violations_weyl = results.iter().filter(|(_, w)| *w < -1e-9).count();
    let min_sin_theta_slack = results.iter().map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
    let min_weyl_slack = results.iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
    Ok(SinThetaAuditReport {
        meta: ReportMeta::new(cfg),
        pairs: cfg.replicates,
        violations_sin_theta,
        violations_weyl,
        min_sin_theta_slack,
        min_weyl_slack,
    })
}

/// Dispatch on the configured experiment kind.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Report> {
    match cfg.kind {
        ExperimentKind::EstimationRisk | ExperimentKind::RateScaling => {
            Ok(Report::Risk(run_estimation_risk(cfg, threads)?))
        }
        ExperimentKind::RankDetection => Ok(Report::Detection(run_rank_detection(cfg, threads)?)),
        ExperimentKind::LrFloor => Ok(Report::Detection(run_lr_floor(cfg, threads)?)),
        ExperimentKind::MgfAudit => Ok(Report::MgfAudit(run_mgf_audit(cfg, threads)?)),
        ExperimentKind::SinThetaAudit => Ok(Report::SinTheta(run_sin_theta_audit(cfg, threads)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_risk_cfg() -> ExperimentConfig {
        ExperimentConfig {
            kind: ExperimentKind::EstimationRisk,
            p: 6,
            k: 2,
            r: 1,
            lambdas: vec![4.0],
            ns: vec![150],
            replicates: 8,
            seed: 99,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn risk_report_is_thread_count_invariant() {
        let cfg = small_risk_cfg();
        let r1 = run_estimation_risk(&cfg, 1).unwrap();
        let r8 = run_estimation_risk(&cfg, 8).unwrap();
        assert_eq!(r1, r8);
        assert_eq!(
            Report::Risk(r1).to_json().unwrap(),
            Report::Risk(r8).to_json().unwrap()
        );
    }

    #[test]
    fn risk_report_rerun_is_byte_identical() {
        let cfg = small_risk_cfg();
        let a = Report::Risk(run_estimation_risk(&cfg, 2).unwrap());
        let b = Report::Risk(run_estimation_risk(&cfg, 2).unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn population_dry_run_has_zero_losses() {
        // strong spike so the population rank threshold is cleared
        let mut cfg = small_risk_cfg();
        cfg.population_input = true;
        cfg.lambdas = vec![1.0e7];
        let report = run_estimation_risk(&cfg, 1).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.budget_errors, 0);
        assert!(cell.loss_sigma_mean == 0.0, "σ loss {}", cell.loss_sigma_mean);
        assert!(cell.loss_v_mean <= 1e-18, "V loss {}", cell.loss_v_mean);
        assert!(cell.loss_omega_mean <= 1e-12, "Ω loss {}", cell.loss_omega_mean);
        assert!(cell.loss_eig_mean <= 1e-12, "E loss {}", cell.loss_eig_mean);
    }

    #[test]
    fn zero_lambda_cells_have_rank_zero_truth() {
        let mut cfg = small_risk_cfg();
        cfg.lambdas = vec![0.0];
        cfg.ns = vec![600];
        let report = run_estimation_risk(&cfg, 2).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.r, 0);
        // pure-noise Σ̂ concentrates near I = Σ for n ≫ p
        assert!(cell.loss_sigma_mean < 0.5, "{}", cell.loss_sigma_mean);
        assert!(cell.rate_v == 1.0);
    }

    #[test]
    fn csv_has_one_row_per_cell_and_documented_header() {
        let mut cfg = small_risk_cfg();
        cfg.lambdas = vec![0.0, 4.0];
        cfg.ns = vec![80, 160];
        cfg.replicates = 2;
        let report = run_estimation_risk(&cfg, 2).unwrap();
        assert_eq!(report.cells.len(), 4);
        let csv = Report::Risk(report).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("cell,p,k,r,lambda,n,loss_sigma_mean"));
        assert!(lines[0].ends_with("budget_errors"));
    }

    #[test]
    fn json_round_trip_preserves_reports() {
        let cfg = small_risk_cfg();
        let report = Report::Risk(run_estimation_risk(&cfg, 2).unwrap());
        let text = report.to_json().unwrap();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(report, back);

        let mut mgf_cfg = ExperimentConfig {
            kind: ExperimentKind::MgfAudit,
            mgf_p_min: 5,
            mgf_p_max: 7,
            ..ExperimentConfig::default()
        };
        mgf_cfg.mgf_a = vec![0.01];
        let audit = Report::MgfAudit(run_mgf_audit(&mgf_cfg, 2).unwrap());
        let back = Report::from_json(&audit.to_json().unwrap()).unwrap();
        assert_eq!(audit, back);
    }

    #[test]
    fn rank_detection_error_curve() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::RankDetection,
            p: 6,
            k: 2,
            r: 1,
            betas: vec![0.0, 1e5],
            ns: vec![200],
            replicates: 10,
            seed: 3,
            ..ExperimentConfig::default()
        };
        let report = run_rank_detection(&cfg, 2).unwrap();
        assert_eq!(report.points.len(), 2);
        // β = 0: truth is rank 0 and the null calibration error is small
        assert_eq!(report.points[0].true_rank, 0);
        assert!(report.points[0].error_rate <= 0.2);
        // enormous β: detection succeeds
        assert_eq!(report.points[1].true_rank, 1);
        assert_eq!(report.points[1].error_rate, 0.0);
        // determinism
        let again = run_rank_detection(&cfg, 1).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn lr_floor_at_lambda_zero_errs_to_one() {
        // β₀ = 0 gives λ = 0: identical hypotheses, the ratio is exactly 1,
        // the test never rejects, Type-I = 0 and Type-II = 1
        let cfg = ExperimentConfig {
            kind: ExperimentKind::LrFloor,
            p: 4,
            k: 1,
            r: 1,
            beta0: 0.0,
            ns: vec![20],
            replicates: 10,
            seed: 5,
            ..ExperimentConfig::default()
        };
        let report = run_lr_floor(&cfg, 2).unwrap();
        let pt = &report.points[0];
        assert_eq!(pt.lambda, 0.0);
        assert_eq!(pt.w_floor, None);
        assert_eq!(pt.type1, Some(0.0));
        assert_eq!(pt.type2, Some(1.0));
        assert_eq!(pt.error_rate, 1.0);
        let again = run_lr_floor(&cfg, 1).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn detection_error_curve_is_nonincreasing_in_beta() {
        // fixed truth r = 1 across positive β; the curve may only drop,
        // within two standard errors of Monte Carlo noise
        let cfg = ExperimentConfig {
            kind: ExperimentKind::RankDetection,
            p: 8,
            k: 2,
            r: 1,
            betas: vec![1.0, 1_000.0, 50_000.0, 100_000.0, 300_000.0],
            ns: vec![200],
            replicates: 30,
            seed: 14,
            budget: 10_000_000,
            ..ExperimentConfig::default()
        };
        let report = run_rank_detection(&cfg, 2).unwrap();
        for w in report.points.windows(2) {
            let tol = 2.0 * (w[0].se + w[1].se);
            assert!(
                w[1].error_rate <= w[0].error_rate + tol,
                "error curve rose from β={} ({}) to β={} ({})",
                w[0].beta,
                w[0].error_rate,
                w[1].beta,
                w[1].error_rate
            );
        }
        // and the curve actually reaches detection at the top end
        assert_eq!(report.points.last().unwrap().error_rate, 0.0);
    }

    #[test]
    fn empty_grid_gives_header_only_csv() {
        let cfg = ExperimentConfig {
            lambdas: vec![],
            ..small_risk_cfg()
        };
        let report = run_estimation_risk(&cfg, 1).unwrap();
        assert!(report.cells.is_empty());
        let csv = Report::Risk(report).to_csv();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("cell,"));
    }

    #[test]
    fn single_replicate_reruns_are_byte_identical() {
        let cfg = ExperimentConfig {
            replicates: 1,
            ..small_risk_cfg()
        };
        let a = Report::Risk(run_estimation_risk(&cfg, 1).unwrap());
        let b = Report::Risk(run_estimation_risk(&cfg, 1).unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn mgf_audit_is_clean_on_a_small_grid() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::MgfAudit,
            mgf_p_min: 5,
            mgf_p_max: 12,
            mgf_a: vec![0.005, 0.027],
            ..ExperimentConfig::default()
        };
        let report = run_mgf_audit(&cfg, 2).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(
            report.points.len(),
            (5..=12).map(|p| p * 2).sum::<usize>()
        );
    }

    #[test]
    fn sin_theta_audit_is_clean() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::SinThetaAudit,
            p: 6,
            k: 2,
            r: 1,
            replicates: 300,
            seed: 11,
            gap: 0.1,
            ..ExperimentConfig::default()
        };
        let report = run_sin_theta_audit(&cfg, 2).unwrap();
        assert_eq!(report.violations_sin_theta, 0);
        assert_eq!(report.violations_weyl, 0);
        assert!(report.min_sin_theta_slack >= -1e-9);
    }

    #[test]
    fn config_file_and_overrides() {
        let dir = std::env::temp_dir().join("spikecov_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.conf");
        std::fs::write(
            &path,
            "# comment lines are ignored\nexperiment = rank-detect\np = 12\nk = 3\nlambda = 0.5, 2\nn = 100,200\nseed = 7\n",
        )
        .unwrap();
        let ov = ConfigOverrides::parse_file(path.to_str().unwrap()).unwrap();
        let mut cfg = ExperimentConfig::default();
        ov.apply(&mut cfg);
        assert_eq!(cfg.kind, ExperimentKind::RankDetection);
        assert_eq!(cfg.p, 12);
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.lambdas, vec![0.5, 2.0]);
        assert_eq!(cfg.ns, vec![100, 200]);
        assert_eq!(cfg.seed, 7);
        // CLI-style override beats the file value
        let cli = ConfigOverrides {
            p: Some(20),
            ..ConfigOverrides::default()
        };
        cli.apply(&mut cfg);
        assert_eq!(cfg.p, 20);

        let bad = dir.join("bad.conf");
        std::fs::write(&bad, "nonsense = 1\n").unwrap();
        assert!(ConfigOverrides::parse_file(bad.to_str().unwrap()).is_err());
    }

    #[test]
    fn emit_and_load_round_trip_on_disk() {
        let cfg = small_risk_cfg();
        let report = Report::Risk(run_estimation_risk(&cfg, 2).unwrap());
        let dir = std::env::temp_dir().join("spikecov_report_test");
        std::fs::create_dir_all(&dir).unwrap();
        let json_path = dir.join("r.json");
        emit_report(&report, json_path.to_str().unwrap(), ReportFormat::Json).unwrap();
        let back = load_report(json_path.to_str().unwrap()).unwrap();
        assert_eq!(report, back);
        let csv_path = dir.join("r.csv");
        emit_report(&report, csv_path.to_str().unwrap(), ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(csv_path).unwrap();
        assert!(text.starts_with("cell,"));
    }
}
