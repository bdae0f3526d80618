//! Monte Carlo oscillator experiments: simulate, filter with each variant,
//! score RMSE, optionally fit the measurement-noise variance, aggregate.
//!
//! Replication `k` simulates from stream `k` of the configured seed and feeds
//! the same realization to every variant (paired comparison). Replications
//! run through [`crate::parallel`]; aggregation happens after collection in
//! replication order, so the report does not depend on scheduling.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{run_filter, FilterVariant, GaussianBelief, LimitSpec};
use crate::likelihood::{default_bounds, estimate_r2, EstimateOptions};
use crate::linalg::matrix_from_rows;
use crate::model::{oscillator_model, simulate, stream_rng, CensorInterval, SimulationRecord, StateSpaceModel};
use crate::parallel::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorParams {
    /// Damping factor.
    pub c: f64,
    /// Rotation per step, radians.
    pub omega: f64,
    /// Process-noise standard deviation per state coordinate.
    pub q: f64,
    /// True measurement-noise variance.
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x0: Vec<f64>,
    pub p0: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensorLimits {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub enabled: bool,
    /// Search bounds for `r2`; defaults to `[1e-4, 1e2]` times the variance
    /// of the observed values.
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Run the censored filter with the fitted variance instead of the true
    /// one.
    #[serde(default = "default_true")]
    pub use_for_ckf: bool,
}

fn default_grid_points() -> usize {
    25
}

fn default_true() -> bool {
    true
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            bounds: None,
            grid_points: default_grid_points(),
            use_for_ckf: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub steps: usize,
    pub replications: usize,
    pub variants: Vec<FilterVariant>,
    pub oscillator: OscillatorParams,
    pub initial: InitialState,
    pub censoring: CensorLimits,
    #[serde(default)]
    pub estimation: EstimationConfig,
}

impl ExperimentConfig {
    /// The damped-oscillator setup: `c = 0.999`, `omega = 0.01 pi`,
    /// `q = 0.05`, `r2 = 0.5`, `x0 = [5, 0]`, `P0 = I`, limits `+/-0.5`,
    /// 1000 steps, 100 replications.
    pub fn damped_oscillator(seed: u64) -> Self {
        Self {
            seed,
            steps: 1000,
            replications: 100,
            variants: FilterVariant::ALL.to_vec(),
            oscillator: OscillatorParams {
                c: 0.999,
                omega: 0.005 * std::f64::consts::TAU,
                q: 0.05,
                r2: 0.5,
            },
            initial: InitialState {
                x0: vec![5.0, 0.0],
                p0: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            censoring: CensorLimits { lower: -0.5, upper: 0.5 },
            estimation: EstimationConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.steps < 2 {
            return bad(format!("steps must be >= 2, got {}", self.steps));
        }
        if self.variants.is_empty() {
            return bad("at least one filter variant is required".into());
        }
        if !(self.censoring.lower < self.censoring.upper) {
            return bad(format!(
                "censoring limits need lower < upper, got ({}, {})",
                self.censoring.lower, self.censoring.upper
            ));
        }
        if self.initial.x0.len() != 2 {
            return bad(format!("x0 must have 2 entries, got {}", self.initial.x0.len()));
        }
        if let Some([lo, hi]) = self.estimation.bounds {
            if !(lo > 0.0 && lo < hi) {
                return bad(format!("estimation bounds need 0 < min < max, got [{lo}, {hi}]"));
            }
        }
        self.model()?;
        self.initial_belief()?;
        Ok(())
    }

    pub fn model(&self) -> Result<StateSpaceModel> {
        let o = &self.oscillator;
        oscillator_model(o.c, o.omega, o.q, o.r2)
    }

    pub fn initial_belief(&self) -> Result<GaussianBelief> {
        let p0 = matrix_from_rows(&self.initial.p0).map_err(Error::Config)?;
        GaussianBelief::new(DVector::from_vec(self.initial.x0.clone()), p0)
    }

    pub fn intervals(&self) -> Result<Vec<CensorInterval>> {
        Ok(vec![CensorInterval::new(self.censoring.lower, self.censoring.upper)?])
    }

    /// Simulates replication `k` (stream `k` of the seed).
    pub fn simulate_replication(&self, k: usize) -> Result<SimulationRecord> {
        let x0 = DVector::from_vec(self.initial.x0.clone());
        simulate(&self.model()?, &x0, self.steps, &self.intervals()?, &mut stream_rng(self.seed, k as u64))
    }
}

/// Per-coordinate root-mean-squared error over time.
pub fn rmse(estimates: &[DVector<f64>], truth: &[DVector<f64>]) -> Result<Vec<f64>> {
    if estimates.len() != truth.len() {
        return Err(Error::dim("rmse rows", truth.len(), estimates.len()));
    }
    let n = truth.first().map_or(0, |x| x.len());
    if truth.is_empty() {
        return Err(Error::domain("rmse of an empty sequence"));
    }
    let mut acc = vec![0.0; n];
    for (e, x) in estimates.iter().zip(truth) {
        if e.len() != n || x.len() != n {
            return Err(Error::dim("rmse columns", n, e.len().max(x.len())));
        }
        for i in 0..n {
            acc[i] += (e[i] - x[i]).powi(2);
        }
    }
    let t = truth.len() as f64;
    Ok(acc.into_iter().map(|s| (s / t).sqrt()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: FilterVariant,
    /// Mean over replications of the per-coordinate RMSE.
    pub mean_rmse: Vec<f64>,
    pub per_replication: Vec<Vec<f64>>,
    /// Filter time summed over replications (simulation excluded).
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
    pub boundary_hits: usize,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub variants: Vec<VariantSummary>,
    pub r2_estimate: Option<NoiseSummary>,
    pub censored_fraction: Vec<f64>,
}

impl BenchReport {
    pub fn variant(&self, v: FilterVariant) -> Option<&VariantSummary> {
        self.variants.iter().find(|s| s.variant == v)
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.variants.iter_mut().for_each(|v| v.wall_clock_secs = 0.0);
        if let Some(r) = out.r2_estimate.as_mut() {
            r.wall_clock_secs = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (replication, variant): `replication, variant, rmse_1..n,
    /// r2_used, censored_fraction`.
    pub fn write_replications_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.variants.first().and_then(|v| v.per_replication.first()).map_or(0, |r| r.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replication".to_string(), "variant".to_string()];
        header.extend((1..=n).map(|i| format!("rmse_{i}")));
        header.push("r2_used".into());
        header.push("censored_fraction".into());
        w.write_record(&header)?;
        for k in 0..self.config.replications {
            for v in &self.variants {
                let mut row = vec![k.to_string(), v.variant.name().to_string()];
                row.extend(v.per_replication[k].iter().map(|e| e.to_string()));
                row.push(self.r2_used(v.variant, k).to_string());
                row.push(self.censored_fraction[k].to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn r2_used(&self, variant: FilterVariant, k: usize) -> f64 {
        match &self.r2_estimate {
            Some(est) if variant == FilterVariant::Censored && self.config.estimation.use_for_ckf => est.values[k],
            _ => self.config.oscillator.r2,
        }
    }
}

struct ReplicationResult {
    rmse: Vec<Vec<f64>>,
    secs: Vec<f64>,
    r2_hat: Option<(f64, bool, f64)>,
    censored_fraction: f64,
}

fn run_replication(cfg: &ExperimentConfig, k: usize) -> Result<ReplicationResult> {
    let model = cfg.model()?;
    let init = cfg.initial_belief()?;
    let rec = cfg.simulate_replication(k)?;
    let limits = LimitSpec::Fixed(rec.intervals.clone());

    let r2_hat = if cfg.estimation.enabled {
        let bounds = match cfg.estimation.bounds {
            Some([lo, hi]) => (lo, hi),
            None => default_bounds(&rec.observed),
        };
        let opts = EstimateOptions {
            grid_points: cfg.estimation.grid_points,
            execution: Execution::Sequential,
            ..EstimateOptions::default()
        };
        let start = Instant::now();
        let est = estimate_r2(&model, &rec.observed, &limits, bounds, &init, &opts)?;
        Some((est.r2_hat, est.at_boundary, start.elapsed().as_secs_f64()))
    } else {
        None
    };

    let mut rmses = Vec::with_capacity(cfg.variants.len());
    let mut secs = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let filter_model = match r2_hat {
            Some((r2, _, _)) if variant == FilterVariant::Censored && cfg.estimation.use_for_ckf => {
                model.with_measurement_noise(DMatrix::from_element(1, 1, r2))?
            }
            _ => model.clone(),
        };
        let start = Instant::now();
        let trace = run_filter(&filter_model, &rec.observed, &limits, variant, &init)?;
        secs.push(start.elapsed().as_secs_f64());
        rmses.push(rmse(&trace.posterior_means(), &rec.states)?);
    }
    Ok(ReplicationResult {
        rmse: rmses,
        secs,
        r2_hat,
        censored_fraction: rec.censored_fraction(),
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<BenchReport> {
    cfg.validate()?;
    let reps = parallel::try_map_indexed(cfg.replications, exec, |k| run_replication(cfg, k))?;

    let variants = cfg
        .variants
        .iter()
        .enumerate()
        .map(|(j, &variant)| {
            let per_replication: Vec<Vec<f64>> = reps.iter().map(|r| r.rmse[j].clone()).collect();
            let n = per_replication[0].len();
            let mean_rmse = (0..n)
                .map(|i| per_replication.iter().map(|r| r[i]).sum::<f64>() / per_replication.len() as f64)
                .collect();
            VariantSummary {
                variant,
                mean_rmse,
                per_replication,
                wall_clock_secs: reps.iter().map(|r| r.secs[j]).sum(),
            }
        })
        .collect();

    let r2_estimate = cfg.estimation.enabled.then(|| {
        let values: Vec<f64> = reps.iter().filter_map(|r| r.r2_hat.map(|e| e.0)).collect();
        let (mean, std) = mean_std(&values);
        NoiseSummary {
            mean,
            std,
            boundary_hits: reps.iter().filter(|r| r.r2_hat.is_some_and(|e| e.1)).count(),
            wall_clock_secs: reps.iter().filter_map(|r| r.r2_hat.map(|e| e.2)).sum(),
            values,
        }
    });

    Ok(BenchReport {
        config: cfg.clone(),
        variants,
        r2_estimate,
        censored_fraction: reps.iter().map(|r| r.censored_fraction).collect(),
    })
}
