//! The `spikecov` command line: data simulation, estimation on CSV data, and
//! the Monte Carlo experiment suite with CSV/JSON reports.

use clap::{Args, Parser, Subcommand};
use spikecov::harness::{
    self, emit_report, load_report, ConfigOverrides, ExperimentConfig, ExperimentKind, Report,
    ReportFormat,
};
use spikecov::model::SampleMatrix;
use spikecov::{estimators, SpikedModel};

#[derive(Parser)]
#[command(
    name = "spikecov",
    version,
    about = "Sparse spiked covariance estimation and minimax experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the experiment subcommands; every flag overrides the
/// config file, which overrides the built-in defaults.
#[derive(Args, Debug, Default)]
struct ExperimentFlags {
    /// Flat key-value config file (keys documented in the README)
    #[arg(long)]
    config: Option<String>,
    /// Ambient dimension
    #[arg(long)]
    p: Option<usize>,
    /// Sparsity budget
    #[arg(long)]
    k: Option<usize>,
    /// True rank of the spike
    #[arg(long)]
    r: Option<usize>,
    /// Spike sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Threshold multiples for rank detection, comma separated
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Below-boundary constant β₀ for the lr-floor run
    #[arg(long)]
    beta0: Option<f64>,
    /// Condition-number bound τ (report echo)
    #[arg(long)]
    tau: Option<f64>,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Monte Carlo replicates per cell
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Deviation-threshold constant γ₁ (≥ 3)
    #[arg(long)]
    gamma1: Option<f64>,
    /// Rank-threshold constant γ₂ (default 8√γ₁ + 34)
    #[arg(long)]
    gamma2: Option<f64>,
    /// Enumeration budget in (B, D) pairs
    #[arg(long)]
    budget: Option<u64>,
    /// Feed the population covariance instead of sampling
    #[arg(long)]
    population_input: bool,
    /// Worker threads (0 = all cores); never affects report bytes
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// Output format: csv or json
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sample X from a spiked model and write it as CSV
    Simulate {
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Equal spike size λ
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: String,
    },
    /// Run the estimation pipeline on CSV data and print the result as JSON
    Estimate {
        /// Input CSV (header x1,...,xp, one observation per row)
        #[arg(long)]
        input: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        gamma2: Option<f64>,
        #[arg(long)]
        budget: Option<u64>,
        /// Use the data-driven γ₁ second pass
        #[arg(long)]
        data_driven_gamma1: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte Carlo estimation risk over a λ × n grid
    Risk(ExperimentFlags),
    /// Empirical rank-detection error along a β grid
    RankDetect(ExperimentFlags),
    /// Mixture likelihood-ratio testing-error floor
    LrFloor(ExperimentFlags),
    /// Stopped-walk MGF audit against its closed-form bounds
    MgfAudit(ExperimentFlags),
    /// Re-emit a stored JSON report (e.g. convert to CSV)
    Report {
        /// Input JSON report
        #[arg(long)]
        input: String,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<String>,
    },
}

fn build_config(kind: ExperimentKind, flags: &ExperimentFlags) -> spikecov::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        kind,
        ..ExperimentConfig::default()
    };
    if let Some(path) = &flags.config {
        ConfigOverrides::parse_file(path)?.apply(&mut cfg);
    }
    let cli = ConfigOverrides {
        kind: None,
        p: flags.p,
        k: flags.k,
        r: flags.r,
        lambdas: flags.lambda.clone(),
        betas: flags.beta.clone(),
        beta0: flags.beta0,
        tau: flags.tau,
        ns: flags.n.clone(),
        replicates: flags.reps,
        seed: flags.seed,
        gamma1: flags.gamma1,
        gamma2: flags.gamma2,
        budget: flags.budget,
        population_input: if flags.population_input { Some(true) } else { None },
        ..ConfigOverrides::default()
    };
    cli.apply(&mut cfg);
    Ok(cfg)
}

fn write_out(text: &str, out: &Option<String>) -> spikecov::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| spikecov::Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit(report: Report, flags: &ExperimentFlags) -> spikecov::Result<()> {
    let format = ReportFormat::parse(&flags.format)?;
    match &flags.out {
        Some(path) => emit_report(&report, path, format),
        None => {
            let text = match format {
                ReportFormat::Json => report.to_json()?,
                ReportFormat::Csv => report.to_csv(),
            };
            println!("{text}");
            Ok(())
        }
    }
}

fn run() -> spikecov::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            p,
            k,
            r,
            lambda,
            n,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig {
                p,
                k,
                r,
                ..ExperimentConfig::default()
            };
            cfg.validate()?;
            let model = if r == 0 || lambda == 0.0 {
                SpikedModel::identity(p, k)?
            } else {
                let support = spikecov::IndexSet::new((0..k).collect())?;
                let basis = if r == 1 {
                    spikecov::OrthoBasis::new(
                        p,
                        1,
                        spikecov::model::equal_mass_vector(p, &support),
                    )?
                } else {
                    spikecov::model::seeded_basis(p, &support, r, seed ^ 0x5eed)?
                };
                SpikedModel::new(p, k, basis, vec![lambda; r])?
            };
            model.sample(n, seed).write_csv_path(&out)?;
            eprintln!("wrote {n}x{p} samples to {out}");
            Ok(())
        }
        Command::Estimate {
            input,
            k,
            gamma1,
            gamma2,
            budget,
            data_driven_gamma1,
            out,
        } => {
            let x = SampleMatrix::read_csv_path(&input)?;
            let mut cfg = estimators::SelectorConfig::new(k);
            if let Some(g1) = gamma1 {
                cfg = cfg.with_gamma1(g1)?;
            }
            if let Some(g2) = gamma2 {
                cfg = cfg.with_gamma2(g2);
            }
            if let Some(b) = budget {
                cfg = cfg.with_budget(b);
            }
            let s = x.sample_covariance();
            let result = if data_driven_gamma1 {
                estimators::estimate_all_data_driven(&s, x.n(), &cfg)?
            } else {
                estimators::estimate_all(&s, x.n(), &cfg)?
            };
            write_out(&serde_json::to_string_pretty(&result)?, &out)
        }
        Command::Risk(flags) => {
            let cfg = build_config(ExperimentKind::EstimationRisk, &flags)?;
            let report = harness::run_experiment(&cfg, flags.threads)?;
            emit(report, &flags)
        }
        Command::RankDetect(flags) => {
            let cfg = build_config(ExperimentKind::RankDetection, &flags)?;
            let report = harness::run_experiment(&cfg, flags.threads)?;
            emit(report, &flags)
        }
        Command::LrFloor(flags) => {
            let cfg = build_config(ExperimentKind::LrFloor, &flags)?;
            let report = harness::run_experiment(&cfg, flags.threads)?;
            emit(report, &flags)
        }
        Command::MgfAudit(flags) => {
            let cfg = build_config(ExperimentKind::MgfAudit, &flags)?;
            let report = harness::run_experiment(&cfg, flags.threads)?;
            emit(report, &flags)
        }
        Command::Report { input, format, out } => {
            let report = load_report(&input)?;
            let format = ReportFormat::parse(&format)?;
            match out {
                Some(path) => emit_report(&report, &path, format),
                None => {
                    let text = match format {
                        ReportFormat::Json => report.to_json()?,
                        ReportFormat::Csv => report.to_csv(),
                    };
                    println!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
