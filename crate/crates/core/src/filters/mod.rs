//! Recursive filters for censored measurements.
//!
//! Three variants share one predict step and differ only in how a
//! measurement at a censoring limit is treated:
//!
//! * [`FilterVariant::Kalman`] takes the clamped value at face value.
//! * [`FilterVariant::MissingKalman`] drops censored coordinates and keeps
//!   the prediction.
//! * [`FilterVariant::Censored`] conditions on the censoring event
//!   (`y* <= a` or `y* >= b`) and re-Gaussianizes the posterior.

mod run;
mod update;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, min_eigenvalue, symmetrize, PSD_CLAMP_TOLERANCE};
use crate::model::StateSpaceModel;

pub use run::{run_filter, FilterTrace, TraceStep};
pub use update::{
    adaptive_limits, ckf_update_multi, ckf_update_scalar, kf_update, predict, update_step, UpdateOutcome,
    CORRELATION_WARNING,
};

/// Mean and covariance of the state estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    #[serde(with = "crate::linalg::serde_vector")]
    pub mean: DVector<f64>,
    #[serde(with = "crate::linalg::serde_matrix")]
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::dim("belief covariance", n, cov.nrows()));
        }
        if !is_symmetric(&cov, 1e-10) {
            return Err(Error::domain("belief covariance must be symmetric"));
        }
        if min_eigenvalue(&cov) < -PSD_CLAMP_TOLERANCE {
            return Err(Error::domain("belief covariance must be positive semidefinite"));
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Predictive law of the latent measurement given the prior belief:
/// `y* ~ N(H m, H P H^T + R)` with cross-covariance `P H^T` to the state.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveStats {
    /// `H m`.
    pub mean: DVector<f64>,
    /// Diagonal of the innovation covariance.
    pub var: DVector<f64>,
    /// `P H^T`, n x m.
    pub cross: DMatrix<f64>,
    /// Full innovation covariance `H P H^T + R`.
    pub innovation_cov: DMatrix<f64>,
}

impl PredictiveStats {
    pub fn new(prior: &GaussianBelief, model: &StateSpaceModel, t: usize) -> Result<Self> {
        Self::with_noise(prior, model.observation(), model.measurement_noise(t))
    }

    pub fn with_noise(prior: &GaussianBelief, h: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<Self> {
        if h.ncols() != prior.dim() {
            return Err(Error::dim("predictive stats: H columns", prior.dim(), h.ncols()));
        }
        let cross = &prior.cov * h.transpose();
        let innovation_cov = symmetrize(&(h * &cross + r));
        let var = innovation_cov.diagonal();
        if let Some(i) = var.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::numeric(
                "predictive stats",
                format!("predictive variance of coordinate {i} is {}", var[i]),
            ));
        }
        Ok(Self {
            mean: h * &prior.mean,
            var,
            cross,
            innovation_cov,
        })
    }

    pub fn std(&self, i: usize) -> f64 {
        self.var[i].sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterVariant {
    #[serde(rename = "kf")]
    Kalman,
    #[serde(rename = "missing_kf")]
    MissingKalman,
    #[serde(rename = "ckf")]
    Censored,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 3] = [
        FilterVariant::Kalman,
        FilterVariant::MissingKalman,
        FilterVariant::Censored,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterVariant::Kalman => "kf",
            FilterVariant::MissingKalman => "missing_kf",
            FilterVariant::Censored => "ckf",
        }
    }
}

impl std::fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FilterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kf" | "kalman" => Ok(FilterVariant::Kalman),
            "missing_kf" | "missing-kf" | "missingkf" => Ok(FilterVariant::MissingKalman),
            "ckf" | "censored" => Ok(FilterVariant::Censored),
            other => Err(Error::domain(format!("unknown filter variant {other:?}"))),
        }
    }
}

/// Where the censoring limits come from at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitSpec {
    /// The same limits every step, one interval per measurement coordinate.
    Fixed(Vec<crate::model::CensorInterval>),
    /// Limits centred on the predicted measurement, `(H m)_i -/+ offset`.
    Adaptive { offset: f64 },
}
