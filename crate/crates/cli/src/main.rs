//! `ckf`: command-line front end for the censored Kalman filter experiments.
//!
//! Every subcommand writes its artifacts into `--out` and prints a one-line
//! JSON summary on stdout. Failures print `{"error": {"kind", "message"}}` on
//! stderr and exit nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use censored_kalman::bench::{run_experiment, ExperimentConfig};
use censored_kalman::diagnostics::{self, TABLE1_SAMPLES, TABLE1_SEED};
use censored_kalman::filters::run_filter;
use censored_kalman::likelihood::{default_bounds, estimate_r2, EstimateOptions, LikelihoodForm};
use censored_kalman::{Error, Execution, FilterVariant, LimitSpec, SimulationRecord};

#[derive(Parser)]
#[command(name = "ckf", version, about = "Censored Kalman filter experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated filter variants (kf, missing_kf, ckf).
    #[arg(long, global = true, value_delimiter = ',')]
    variants: Option<Vec<FilterVariant>>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one replication and write the trajectory.
    Simulate {
        /// Replication index (selects the RNG stream).
        #[arg(long, default_value_t = 0)]
        replication: usize,
    },
    /// Run filters over a simulated trajectory and write per-step traces.
    Filter {
        /// Simulation JSON from `simulate`; simulated on the fly if absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        replication: usize,
        /// Use adaptive limits at `offset` predicted standard deviations
        /// instead of the configured fixed limits.
        #[arg(long)]
        adaptive: Option<f64>,
    },
    /// Run the Monte Carlo experiment and write the report.
    Bench,
    /// Fit the measurement-noise variance on one trajectory.
    EstimateR2 {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        replication: usize,
        /// Drop the prediction term from the innovation variance.
        #[arg(long)]
        measurement_noise_only: bool,
    },
    /// Run the K-S normality grid of the censored posterior.
    Table1 {
        #[arg(long, default_value_t = TABLE1_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Also dump the conditional density for `--density-a`.
        #[arg(long, requires = "density_rho", allow_negative_numbers = true)]
        density_a: Option<f64>,
        #[arg(long, requires = "density_a")]
        density_rho: Option<f64>,
    },
}

impl Common {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let path = self.config.as_ref().ok_or_else(|| anyhow!(Error::Config("--config is required".into())))?;
        let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = &self.variants {
            cfg.variants = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> anyhow::Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn load_or_simulate(cfg: &ExperimentConfig, input: Option<&Path>, replication: usize) -> anyhow::Result<SimulationRecord> {
    match input {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(SimulationRecord::from_json(&text)?)
        }
        None => Ok(cfg.simulate_replication(replication)?),
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<serde_json::Value> {
    let common = &cli.common;
    match cli.command {
        Command::Simulate { replication } => {
            let cfg = common.experiment()?;
            let rec = cfg.simulate_replication(replication)?;
            let out = common.out_dir()?;
            write(&out.join("simulation.json"), &rec.to_json()?)?;
            rec.save_csv(&out.join("simulation.csv"))?;
            Ok(json!({
                "steps": rec.len(),
                "censored_fraction": rec.censored_fraction(),
                "files": ["simulation.json", "simulation.csv"],
            }))
        }
        Command::Filter { input, replication, adaptive } => {
            let cfg = common.experiment()?;
            let rec = load_or_simulate(&cfg, input.as_deref(), replication)?;
            let model = cfg.model()?;
            let init = cfg.initial_belief()?;
            let limits = match adaptive {
                Some(offset) => LimitSpec::Adaptive { offset },
                None => LimitSpec::Fixed(rec.intervals.clone()),
            };
            let out = common.out_dir()?;
            let mut summary = Vec::new();
            for &variant in &cfg.variants {
                let trace = run_filter(&model, &rec.observed, &limits, variant, &init)?;
                let file = format!("trace_{}.csv", variant.name());
                trace.save_csv(&out.join(&file))?;
                let rmse = censored_kalman::bench::rmse(&trace.posterior_means(), &rec.states)?;
                summary.push(json!({
                    "variant": variant,
                    "rmse": rmse,
                    "loglik": trace.total_loglik(),
                    "high_correlation_steps": trace.high_correlation_steps(),
                    "file": file,
                }));
            }
            Ok(json!({ "filters": summary }))
        }
        Command::Bench => {
            let cfg = common.experiment()?;
            let report = run_experiment(&cfg, common.execution())?;
            let out = common.out_dir()?;
            write(&out.join("report.json"), &report.to_json()?)?;
            let csv = fs::File::create(out.join("replications.csv"))?;
            report.write_replications_csv(csv)?;
            let means: serde_json::Map<_, _> = report
                .variants
                .iter()
                .map(|v| (v.variant.name().to_string(), json!(v.mean_rmse)))
                .collect();
            Ok(json!({
                "mean_rmse": means,
                "r2_hat_mean": report.r2_estimate.as_ref().map(|e| e.mean),
                "r2_hat_std": report.r2_estimate.as_ref().map(|e| e.std),
                "files": ["report.json", "replications.csv"],
            }))
        }
        Command::EstimateR2 { input, replication, measurement_noise_only } => {
            let cfg = common.experiment()?;
            let rec = load_or_simulate(&cfg, input.as_deref(), replication)?;
            let bounds = match cfg.estimation.bounds {
                Some([lo, hi]) => (lo, hi),
                None => default_bounds(&rec.observed),
            };
            let opts = EstimateOptions {
                grid_points: cfg.estimation.grid_points,
                form: if measurement_noise_only {
                    LikelihoodForm::MeasurementNoiseOnly
                } else {
                    LikelihoodForm::Full
                },
                execution: common.execution(),
                ..EstimateOptions::default()
            };
            let limits = LimitSpec::Fixed(rec.intervals.clone());
            let est = estimate_r2(&cfg.model()?, &rec.observed, &limits, bounds, &cfg.initial_belief()?, &opts)?;
            let out = common.out_dir()?;
            write(&out.join("estimate.json"), &serde_json::to_string_pretty(&est)?)?;
            let mut w = csv::Writer::from_path(out.join("loglik_trace.csv"))?;
            w.write_record(["r2", "loglik"])?;
            for p in &est.search_trace {
                w.write_record([p.r2.to_string(), p.loglik.to_string()])?;
            }
            w.flush()?;
            Ok(json!({
                "r2_hat": est.r2_hat,
                "loglik": est.loglik_at_opt,
                "at_boundary": est.at_boundary,
                "files": ["estimate.json", "loglik_trace.csv"],
            }))
        }
        Command::Table1 { samples, alpha, density_a, density_rho } => {
            let seed = common.seed.unwrap_or(TABLE1_SEED);
            let table = diagnostics::table1_experiment(seed, samples, alpha, common.execution())?;
            let out = common.out_dir()?;
            table.save_csv(&out.join("table1.csv"))?;
            write(&out.join("table1.json"), &serde_json::to_string_pretty(&table)?)?;
            let mut files = vec!["table1.csv".to_string(), "table1.json".to_string()];
            if let (Some(a), Some(rho)) = (density_a, density_rho) {
                let xs: Vec<f64> = (0..=400).map(|i| -5.0 + 0.025 * i as f64).collect();
                let curve = diagnostics::density_curve(rho, a, &xs)?;
                let file = "density.csv".to_string();
                diagnostics::write_density_csv(&curve, fs::File::create(out.join(&file))?)?;
                files.push(file);
            }
            Ok(json!({
                "seed": seed,
                "agreement": table.agreement(),
                "rejections": table.cells.iter().filter(|c| c.reject).count(),
                "files": files,
            }))
        }
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<Error>() {
        Some(Error::Domain(_)) => "domain",
        Some(Error::Dimension { .. }) => "dimension",
        Some(Error::Numeric { .. }) => "numeric",
        Some(Error::Contract(_)) => "contract",
        Some(Error::Config(_)) => "config",
        Some(Error::Io(_)) => "io",
        Some(Error::Csv(_)) => "csv",
        Some(Error::Json(_)) => "json",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "internal",
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(error_kind(&e), format!("{e:#}"), 1),
    }
}
