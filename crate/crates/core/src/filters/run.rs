use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::update::{adaptive_limits, predict, update_step, CORRELATION_WARNING};
use super::{FilterVariant, GaussianBelief, LimitSpec, PredictiveStats};
use crate::error::{Error, Result};
use crate::likelihood::step_loglik;
use crate::model::{CensorInterval, CensorStatus, CensoredMeasurement, StateSpaceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub prior: GaussianBelief,
    pub posterior: GaussianBelief,
    /// Log predictive density of this step's measurement under the censored
    /// law, in nats.
    pub loglik: f64,
    pub status: Vec<CensorStatus>,
    pub intervals: Vec<CensorInterval>,
    /// Smallest posterior covariance eigenvalue before clamping; NaN when the
    /// update was skipped.
    pub min_eigenvalue: f64,
    pub clamped: bool,
    /// Largest `|corr(x_j, y*_i)|` over censored coordinates.
    pub max_abs_correlation: Option<f64>,
}

impl TraceStep {
    /// Whether the Gaussian re-approximation of this step's posterior is
    /// suspect (predictive correlation above [`CORRELATION_WARNING`]).
    pub fn high_correlation(&self) -> bool {
        self.max_abs_correlation.is_some_and(|c| c > CORRELATION_WARNING)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub variant: FilterVariant,
    pub initial: GaussianBelief,
    pub steps: Vec<TraceStep>,
}

impl FilterTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_belief(&self) -> &GaussianBelief {
        self.steps.last().map_or(&self.initial, |s| &s.posterior)
    }

    pub fn posterior_means(&self) -> Vec<DVector<f64>> {
        self.steps.iter().map(|s| s.posterior.mean.clone()).collect()
    }

    /// Number of steps flagged by [`TraceStep::high_correlation`].
    pub fn high_correlation_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.high_correlation()).count()
    }

    pub fn total_loglik(&self) -> f64 {
        self.steps.iter().map(|s| s.loglik).sum()
    }

    /// CSV with columns `t, prior_mean_*, prior_var_*, post_mean_*,
    /// post_var_*, status_*, step_loglik`. `t` starts at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.initial.dim();
        let m = self.steps.first().map_or(0, |s| s.status.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for prefix in ["prior_mean", "prior_var", "post_mean", "post_var"] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        header.extend((1..=m).map(|i| format!("status_{i}")));
        header.push("step_loglik".into());
        w.write_record(&header)?;
        for (t, s) in self.steps.iter().enumerate() {
            let mut row = vec![(t + 1).to_string()];
            for b in [&s.prior, &s.posterior] {
                row.extend(b.mean.iter().map(|v| v.to_string()));
                row.extend(b.cov.diagonal().iter().map(|v| v.to_string()));
            }
            row.extend(s.status.iter().map(|st| st.as_str().to_string()));
            row.push(s.loglik.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Runs `variant` over `measurements`, starting from `init` (the belief at
/// time 0; the first step predicts from it).
pub fn run_filter(
    model: &StateSpaceModel,
    measurements: &[CensoredMeasurement],
    limits: &LimitSpec,
    variant: FilterVariant,
    init: &GaussianBelief,
) -> Result<FilterTrace> {
    let m = model.measurement_dim();
    if init.dim() != model.state_dim() {
        return Err(Error::dim("initial belief", model.state_dim(), init.dim()));
    }
    if let LimitSpec::Fixed(iv) = limits {
        if iv.len() != m {
            return Err(Error::dim("censor intervals", m, iv.len()));
        }
    }
    let mut belief = init.clone();
    let mut steps = Vec::with_capacity(measurements.len());
    for (t, meas) in measurements.iter().enumerate() {
        let prior = predict(&belief, model, t)?;
        let intervals = match limits {
            LimitSpec::Fixed(iv) => iv.clone(),
            LimitSpec::Adaptive { offset } => adaptive_limits(&prior, model, *offset)?,
        };
        let pred = PredictiveStats::new(&prior, model, t)?;
        let loglik = step_loglik(&pred, meas, &intervals)?;
        let out = update_step(variant, &prior, meas, &intervals, model, t)?;
        belief = out.posterior.clone();
        steps.push(TraceStep {
            prior,
            posterior: out.posterior,
            loglik,
            status: meas.status.clone(),
            intervals,
            min_eigenvalue: out.psd.min_eigenvalue,
            clamped: out.psd.clamped,
            max_abs_correlation: out.max_abs_correlation,
        });
    }
    let trace = FilterTrace {
        variant,
        initial: init.clone(),
        steps,
    };
    let flagged = trace.high_correlation_steps();
    if flagged > 0 {
        log::debug!(
            "{variant}: {flagged} of {} steps had predictive correlation above {CORRELATION_WARNING}; \
             the censored posterior may be far from Gaussian there",
            trace.len()
        );
    }
    Ok(trace)
}
