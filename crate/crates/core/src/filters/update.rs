use nalgebra::{DMatrix, DVector};

use super::{FilterVariant, GaussianBelief, PredictiveStats};
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, symmetrize_psd, PsdCheck};
use crate::model::{CensorInterval, CensorStatus, CensoredMeasurement, StateSpaceModel};
use crate::truncnorm::{conditional_moments_lower, conditional_moments_upper, TailRatio};

/// Predictive state/measurement correlation above which the Gaussian
/// approximation of a censored posterior is considered unreliable.
pub const CORRELATION_WARNING: f64 = 0.75;

/// Posterior of one measurement update plus numerical bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub posterior: GaussianBelief,
    pub psd: PsdCheck,
    /// Largest `|corr(x_j, y*_i)|` over censored coordinates `i`, if any.
    pub max_abs_correlation: Option<f64>,
}

impl UpdateOutcome {
    fn unchanged(prior: &GaussianBelief) -> Self {
        Self {
            posterior: prior.clone(),
            psd: PsdCheck {
                min_eigenvalue: f64::NAN,
                clamped: false,
            },
            max_abs_correlation: None,
        }
    }

    fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let (cov, psd) = symmetrize_psd(&cov);
        Self {
            posterior: GaussianBelief { mean, cov },
            psd,
            max_abs_correlation: None,
        }
    }
}

/// `x^- = A x`, `P^- = A P A^T + Q_t`.
pub fn predict(belief: &GaussianBelief, model: &StateSpaceModel, t: usize) -> Result<GaussianBelief> {
    let a = model.transition();
    if a.ncols() != belief.dim() {
        return Err(Error::dim("predict", a.ncols(), belief.dim()));
    }
    let mean = a * &belief.mean;
    let cov = symmetrize(&(a * &belief.cov * a.transpose() + model.process_noise(t)));
    Ok(GaussianBelief { mean, cov })
}

/// `K = P H^T S^{-1}`, solved against the innovation covariance rather than
/// inverting it.
fn gain(pred: &PredictiveStats) -> Result<DMatrix<f64>> {
    let chol = pred.innovation_cov.clone().cholesky().ok_or_else(|| {
        Error::numeric(
            "kalman gain",
            format!("innovation covariance is not positive definite: {:?}", pred.innovation_cov.as_slice()),
        )
    })?;
    Ok(chol.solve(&pred.cross.transpose()).transpose())
}

fn check_measurement(meas: &CensoredMeasurement, m: usize) -> Result<()> {
    if meas.value.len() != m {
        return Err(Error::dim("measurement", m, meas.value.len()));
    }
    if meas.status.len() != m {
        return Err(Error::dim("measurement status", m, meas.status.len()));
    }
    Ok(())
}

fn kf_update_with(prior: &GaussianBelief, pred: &PredictiveStats, y: &DVector<f64>) -> Result<UpdateOutcome> {
    let k = gain(pred)?;
    let mean = &prior.mean + &k * (y - &pred.mean);
    let cov = &prior.cov - &k * pred.cross.transpose();
    Ok(UpdateOutcome::from_parts(mean, cov))
}

/// Standard Kalman measurement update.
pub fn kf_update(
    prior: &GaussianBelief,
    y: &DVector<f64>,
    model: &StateSpaceModel,
    t: usize,
) -> Result<GaussianBelief> {
    if y.len() != model.measurement_dim() {
        return Err(Error::dim("kf_update measurement", model.measurement_dim(), y.len()));
    }
    let pred = PredictiveStats::new(prior, model, t)?;
    Ok(kf_update_with(prior, &pred, y)?.posterior)
}

fn lower_limit(iv: &CensorInterval, i: usize) -> Result<f64> {
    if iv.lower.is_finite() {
        Ok(iv.lower)
    } else {
        Err(Error::Contract(format!(
            "coordinate {i} is flagged at_lower but its lower limit is {}",
            iv.lower
        )))
    }
}

fn upper_limit(iv: &CensorInterval, i: usize) -> Result<f64> {
    if iv.upper.is_finite() {
        Ok(iv.upper)
    } else {
        Err(Error::Contract(format!(
            "coordinate {i} is flagged at_upper but its upper limit is {}",
            iv.upper
        )))
    }
}

fn max_abs_correlation(prior: &GaussianBelief, pred: &PredictiveStats, i: usize) -> f64 {
    let s = pred.std(i);
    (0..prior.dim())
        .map(|j| {
            let sx = prior.cov[(j, j)].sqrt();
            if sx > 0.0 {
                (pred.cross[(j, i)] / (sx * s)).abs()
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

fn ckf_scalar_with(
    prior: &GaussianBelief,
    pred: &PredictiveStats,
    meas: &CensoredMeasurement,
    interval: &CensorInterval,
) -> Result<UpdateOutcome> {
    let s_xy = pred.cross.column(0).into_owned();
    let s = pred.std(0);
    let moments = match meas.status[0] {
        CensorStatus::Interior => return kf_update_with(prior, pred, &meas.value),
        CensorStatus::AtLower => {
            conditional_moments_lower(&prior.mean, &prior.cov, &s_xy, pred.mean[0], s, lower_limit(interval, 0)?)?
        }
        CensorStatus::AtUpper => {
            conditional_moments_upper(&prior.mean, &prior.cov, &s_xy, pred.mean[0], s, upper_limit(interval, 0)?)?
        }
    };
    Ok(UpdateOutcome {
        posterior: GaussianBelief {
            mean: moments.mean,
            cov: moments.cov,
        },
        psd: moments.psd,
        max_abs_correlation: Some(max_abs_correlation(prior, pred, 0)),
    })
}

/// Censored update for a scalar measurement.
///
/// Interior values get the ordinary Kalman update. A value at the lower
/// limit conditions the prior on `y* <= a`, with `m_x = x^-`, `S_x = P^-`,
/// `S_xy = P^- H^T` and `s_y^2 = H P^- H^T + r^2`; the upper limit is the
/// mirror image.
pub fn ckf_update_scalar(
    prior: &GaussianBelief,
    meas: &CensoredMeasurement,
    interval: &CensorInterval,
    model: &StateSpaceModel,
    t: usize,
) -> Result<GaussianBelief> {
    if model.measurement_dim() != 1 {
        return Err(Error::dim("scalar censored update", 1, model.measurement_dim()));
    }
    check_measurement(meas, 1)?;
    let pred = PredictiveStats::new(prior, model, t)?;
    Ok(ckf_scalar_with(prior, &pred, meas, interval)?.posterior)
}

fn ckf_multi_with(
    prior: &GaussianBelief,
    pred: &PredictiveStats,
    meas: &CensoredMeasurement,
    intervals: &[CensorInterval],
    h: &DMatrix<f64>,
) -> Result<UpdateOutcome> {
    let m = meas.dim();
    let k = gain(pred)?;
    let mut e = DVector::zeros(m);
    let mut g = DVector::from_element(m, 1.0);
    let mut max_corr: Option<f64> = None;
    for i in 0..m {
        let s = pred.std(i);
        match meas.status[i] {
            CensorStatus::Interior => e[i] = meas.value[i] - pred.mean[i],
            CensorStatus::AtLower => {
                let tail = TailRatio::lower((lower_limit(&intervals[i], i)? - pred.mean[i]) / s)?;
                e[i] = -s * tail.lambda;
                g[i] = tail.lower_variance_factor();
            }
            CensorStatus::AtUpper => {
                let tail = TailRatio::upper((upper_limit(&intervals[i], i)? - pred.mean[i]) / s)?;
                e[i] = s * tail.lambda;
                g[i] = tail.upper_variance_factor();
            }
        }
        if meas.status[i].is_censored() {
            let c = max_abs_correlation(prior, pred, i);
            max_corr = Some(max_corr.map_or(c, |m: f64| m.max(c)));
        }
    }
    let mean = &prior.mean + &k * e;
    let kg = &k * DMatrix::from_diagonal(&g);
    let cov = &prior.cov - kg * h * &prior.cov;
    let mut out = UpdateOutcome::from_parts(mean, cov);
    out.max_abs_correlation = max_corr;
    Ok(out)
}

/// Censored update for a vector measurement with uncorrelated coordinates.
///
/// Builds a per-coordinate innovation surrogate `E` (raw innovation, or the
/// signed tail-ratio shift `-/+ sqrt(S_ii) lam` when censored) and a diagonal
/// variance-reduction matrix `G`, then applies
/// `x = x^- + K E`, `P = (I - K G H) P^-` with `K = P^- H^T S^{-1}`.
/// All-interior input reduces to [`kf_update`]; a single coordinate reduces
/// to [`ckf_update_scalar`].
///
/// The per-coordinate treatment assumes the predicted measurement
/// coordinates are uncorrelated (`H P^- H^T + R` diagonal). Then
/// `P^- - P` is PSD. When censored coordinates are correlated through the
/// state, `S^{-1} G` is not symmetric and the covariance can grow or lose
/// definiteness; the result is still symmetrized and clamped.
pub fn ckf_update_multi(
    prior: &GaussianBelief,
    meas: &CensoredMeasurement,
    intervals: &[CensorInterval],
    model: &StateSpaceModel,
    t: usize,
) -> Result<GaussianBelief> {
    Ok(multi_outcome(prior, meas, intervals, model, t)?.posterior)
}

fn multi_outcome(
    prior: &GaussianBelief,
    meas: &CensoredMeasurement,
    intervals: &[CensorInterval],
    model: &StateSpaceModel,
    t: usize,
) -> Result<UpdateOutcome> {
    let m = model.measurement_dim();
    check_measurement(meas, m)?;
    if intervals.len() != m {
        return Err(Error::dim("censor intervals", m, intervals.len()));
    }
    if !crate::linalg::is_diagonal(model.measurement_noise(t)) {
        return Err(Error::domain(
            "the multi-coordinate censored update assumes uncorrelated measurement coordinates; R must be diagonal",
        ));
    }
    let pred = PredictiveStats::new(prior, model, t)?;
    ckf_multi_with(prior, &pred, meas, intervals, model.observation())
}

/// Limits centred on the predicted measurement: `((H x^-)_i - c, (H x^-)_i + c)`.
pub fn adaptive_limits(prior: &GaussianBelief, model: &StateSpaceModel, offset: f64) -> Result<Vec<CensorInterval>> {
    if !(offset > 0.0) {
        return Err(Error::domain(format!("adaptive limit offset must be > 0, got {offset}")));
    }
    let centre = model.observation() * &prior.mean;
    centre
        .iter()
        .map(|&c| CensorInterval::new(c - offset, c + offset))
        .collect()
}

/// Update of `prior` under `variant`, used by [`super::run_filter`].
pub fn update_step(
    variant: FilterVariant,
    prior: &GaussianBelief,
    meas: &CensoredMeasurement,
    intervals: &[CensorInterval],
    model: &StateSpaceModel,
    t: usize,
) -> Result<UpdateOutcome> {
    let m = model.measurement_dim();
    check_measurement(meas, m)?;
    match variant {
        FilterVariant::Kalman => {
            let pred = PredictiveStats::new(prior, model, t)?;
            kf_update_with(prior, &pred, &meas.value)
        }
        FilterVariant::MissingKalman => {
            if !meas.any_censored() {
                let pred = PredictiveStats::new(prior, model, t)?;
                return kf_update_with(prior, &pred, &meas.value);
            }
            if meas.all_censored() {
                return Ok(UpdateOutcome::unchanged(prior));
            }
            // Keep only the interior rows of H, R and y.
            let keep: Vec<usize> = (0..m).filter(|&i| !meas.status[i].is_censored()).collect();
            let h = model.observation().select_rows(&keep);
            let r = model.measurement_noise(t).select_rows(&keep).select_columns(&keep);
            let y = meas.value.select_rows(&keep);
            let pred = PredictiveStats::with_noise(prior, &h, &r)?;
            kf_update_with(prior, &pred, &y)
        }
        FilterVariant::Censored => {
            if intervals.len() != m {
                return Err(Error::dim("censor intervals", m, intervals.len()));
            }
            if m == 1 {
                let pred = PredictiveStats::new(prior, model, t)?;
                ckf_scalar_with(prior, &pred, meas, &intervals[0])
            } else {
                multi_outcome(prior, meas, intervals, model, t)
            }
        }
    }
}
