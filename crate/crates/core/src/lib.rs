//! Kalman filtering for linear-Gaussian systems observed through Tobit
//! type-I (interval-censored) sensors.
//!
//! The crate is organised bottom-up:
//!
//! * [`normal`] and [`truncnorm`] hold the standard-normal tail kernels and
//!   the conditional-moment formulas for a Gaussian vector given that a
//!   correlated scalar fell below (or above) a limit.
//! * [`model`] defines the state-space model, the censoring operator and the
//!   trajectory simulator.
//! * [`filters`] implements the vanilla KF, the censored-as-missing baseline
//!   and the censored Kalman filter (scalar and multi-coordinate updates).
//! * [`likelihood`] evaluates the censored predictive likelihood and fits the
//!   measurement-noise variance.
//! * [`diagnostics`] studies how close the censored posterior is to Gaussian.
//! * [`bench`] runs the oscillator Monte Carlo experiments.
//!
//! Data-parallel loops (replications, likelihood grids, diagnostic grids) go
//! through [`parallel`], which uses rayon when the `parallel` feature is on
//! and falls back to a plain sequential loop otherwise.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod filters;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod parallel;
pub mod truncnorm;

pub use error::{Error, Result};
pub use filters::{FilterTrace, FilterVariant, GaussianBelief, LimitSpec, PredictiveStats};
pub use model::{CensorInterval, CensorStatus, CensoredMeasurement, SimulationRecord, StateSpaceModel};
pub use parallel::Execution;
