//! Censored predictive likelihood and maximum-likelihood fitting of the
//! latent measurement-noise variance.
//!
//! Each step contributes, with `s^2 = H P^- H^T + r^2`:
//!
//! * interior `y`: `ln( phi((y - H x^-)/s) / s )`
//! * `y = a`: `ln Phi((a - H x^-)/s)`
//! * `y = b`: `ln (1 - Phi((b - H x^-)/s))`
//!
//! The state-uncertainty term `H P^- H^T` matters: dropping it (the
//! [`LikelihoodForm::MeasurementNoiseOnly`] ablation) biases the fitted
//! variance. All terms are evaluated in log space, so far-tail censoring
//! contributes large negative but finite values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{run_filter, FilterVariant, GaussianBelief, LimitSpec, PredictiveStats};
use crate::model::{CensorInterval, CensorStatus, CensoredMeasurement, StateSpaceModel};
use crate::normal;
use crate::parallel::{self, Execution};

/// Which predictive variance enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikelihoodForm {
    /// `H P^- H^T + R`.
    #[default]
    Full,
    /// `R` alone. Only for comparison against the full form.
    MeasurementNoiseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatusCounts {
    pub interior: usize,
    pub at_lower: usize,
    pub at_upper: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.interior + self.at_lower + self.at_upper
    }

    fn add(&mut self, s: CensorStatus) {
        match s {
            CensorStatus::Interior => self.interior += 1,
            CensorStatus::AtLower => self.at_lower += 1,
            CensorStatus::AtUpper => self.at_upper += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLikSummary {
    pub total: f64,
    pub per_step: Vec<f64>,
    /// Counted per measurement coordinate.
    pub counts: StatusCounts,
}

fn coordinate_term(
    status: CensorStatus,
    value: f64,
    mean: f64,
    s: f64,
    interval: &CensorInterval,
    i: usize,
) -> Result<f64> {
    match status {
        CensorStatus::Interior => Ok(normal::ln_pdf((value - mean) / s) - s.ln()),
        CensorStatus::AtLower => {
            if !interval.lower.is_finite() {
                return Err(Error::Contract(format!(
                    "coordinate {i} is flagged at_lower but its lower limit is infinite"
                )));
            }
            Ok(normal::ln_cdf((interval.lower - mean) / s))
        }
        CensorStatus::AtUpper => {
            if !interval.upper.is_finite() {
                return Err(Error::Contract(format!(
                    "coordinate {i} is flagged at_upper but its upper limit is infinite"
                )));
            }
            Ok(normal::ln_sf((interval.upper - mean) / s))
        }
    }
}

/// Log predictive density of one censored measurement. Vector measurements
/// sum the per-coordinate marginal terms, which is exact when the
/// innovation covariance is diagonal.
pub fn step_loglik(pred: &PredictiveStats, meas: &CensoredMeasurement, intervals: &[CensorInterval]) -> Result<f64> {
    let m = pred.mean.len();
    if meas.dim() != m || meas.status.len() != m {
        return Err(Error::dim("step_loglik measurement", m, meas.dim()));
    }
    if intervals.len() != m {
        return Err(Error::dim("step_loglik intervals", m, intervals.len()));
    }
    (0..m).try_fold(0.0, |acc, i| {
        Ok(acc + coordinate_term(meas.status[i], meas.value[i], pred.mean[i], pred.std(i), &intervals[i], i)?)
    })
}

/// Evaluates the censored log-likelihood of `data` with `R = r2 I`,
/// generating the predictive moments by a censored-filter pass.
pub fn total_loglik(
    r2: f64,
    model: &StateSpaceModel,
    data: &[CensoredMeasurement],
    limits: &LimitSpec,
    init: &GaussianBelief,
) -> Result<LogLikSummary> {
    total_loglik_with(LikelihoodForm::Full, r2, model, data, limits, init)
}

pub fn total_loglik_with(
    form: LikelihoodForm,
    r2: f64,
    model: &StateSpaceModel,
    data: &[CensoredMeasurement],
    limits: &LimitSpec,
    init: &GaussianBelief,
) -> Result<LogLikSummary> {
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::domain(format!("candidate variance must be > 0, got {r2}")));
    }
    let m = model.measurement_dim();
    let model = model.with_measurement_noise(DMatrix::identity(m, m) * r2)?;
    let trace = run_filter(&model, data, limits, FilterVariant::Censored, init)?;
    let mut counts = StatusCounts::default();
    let mut per_step = Vec::with_capacity(trace.len());
    for (t, step) in trace.steps.iter().enumerate() {
        step.status.iter().for_each(|&s| counts.add(s));
        let ll = match form {
            LikelihoodForm::Full => step.loglik,
            LikelihoodForm::MeasurementNoiseOnly => {
                let mut pred = PredictiveStats::new(&step.prior, &model, t)?;
                pred.var = model.measurement_noise(t).diagonal();
                step_loglik(&pred, &data[t], &step.intervals)?
            }
        };
        per_step.push(ll);
    }
    Ok(LogLikSummary {
        total: per_step.iter().sum(),
        per_step,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub r2: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub r2_hat: f64,
    pub loglik_at_opt: f64,
    /// Every evaluated `(r2, loglik)` pair, grid first then refinement.
    pub search_trace: Vec<SearchPoint>,
    /// The grid maximum sat on an end of the search bounds; the estimate is
    /// then unreliable.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub grid_points: usize,
    /// Stop refining once the bracket is narrower than `rel_tol * r2`.
    pub rel_tol: f64,
    pub form: LikelihoodForm,
    pub execution: Execution,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            grid_points: 25,
            rel_tol: 1e-4,
            form: LikelihoodForm::Full,
            execution: Execution::Parallel,
        }
    }
}

/// `[1e-4, 1e2]` times the sample variance of the observed values.
pub fn default_bounds(data: &[CensoredMeasurement]) -> (f64, f64) {
    let values: Vec<f64> = data.iter().flat_map(|m| m.value.iter().copied()).collect();
    let n = values.len() as f64;
    let var = if values.len() > 1 {
        let mean = values.iter().sum::<f64>() / n;
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let scale = if var > 0.0 && var.is_finite() { var } else { 1.0 };
    (1e-4 * scale, 1e2 * scale)
}

/// Maximizes `f` on `[lo, hi]` by golden-section search, recording every
/// evaluation. Stops when `done(lo, hi)` holds.
pub(crate) fn golden_section_max<F, D>(mut f: F, mut lo: f64, mut hi: f64, done: D, max_iter: usize) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
    D: Fn(f64, f64) -> bool,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..max_iter {
        if done(lo, hi) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(())
}

/// Maximum-likelihood estimate of the measurement-noise variance: a
/// log-spaced grid over `bounds`, then golden-section refinement (in
/// `ln r2`) on the bracket around the best grid point.
pub fn estimate_r2(
    model: &StateSpaceModel,
    data: &[CensoredMeasurement],
    limits: &LimitSpec,
    bounds: (f64, f64),
    init: &GaussianBelief,
    options: &EstimateOptions,
) -> Result<NoiseEstimate> {
    let (lo, hi) = bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::domain(format!("r2 bounds must satisfy 0 < min < max, got ({lo}, {hi})")));
    }
    if options.grid_points < 3 {
        return Err(Error::domain("r2 grid needs at least 3 points"));
    }
    let eval = |r2: f64| -> Result<f64> {
        let ll = total_loglik_with(options.form, r2, model, data, limits, init)?.total;
        Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
    };

    let k = options.grid_points;
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..k)
        .map(|i| match i {
            0 => lo,
            _ if i == k - 1 => hi,
            _ => (ln_lo + (ln_hi - ln_lo) * i as f64 / (k - 1) as f64).exp(),
        })
        .collect();
    let values = parallel::try_map_indexed(k, options.execution, |i| eval(grid[i]))?;
    let mut trace: Vec<SearchPoint> = grid
        .iter()
        .zip(&values)
        .map(|(&r2, &loglik)| SearchPoint { r2, loglik })
        .collect();
    let best = (0..k).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let at_boundary = best == 0 || best == k - 1;
    if at_boundary {
        log::warn!("likelihood maximum at the edge of the r2 search bounds ({lo}, {hi})");
    }

    let bracket_lo = grid[best.saturating_sub(1)].ln();
    let bracket_hi = grid[(best + 1).min(k - 1)].ln();
    let rel_tol = options.rel_tol;
    golden_section_max(
        |x| {
            let r2 = x.exp();
            let ll = eval(r2)?;
            trace.push(SearchPoint { r2, loglik: ll });
            Ok(ll)
        },
        bracket_lo,
        bracket_hi,
        |a, b| b.exp() - a.exp() <= rel_tol * (0.5 * (a + b)).exp(),
        200,
    )?;

    let opt = trace
        .iter()
        .copied()
        .fold(trace[0], |b, p| if p.loglik > b.loglik { p } else { b });
    Ok(NoiseEstimate {
        r2_hat: opt.r2,
        loglik_at_opt: opt.loglik,
        search_trace: trace,
        at_boundary,
    })
}
