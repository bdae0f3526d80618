//! Moments of a normal variable truncated from above or below, and the
//! conditional moments of a jointly Gaussian vector `x` given that a
//! correlated scalar `y*` fell on one side of a limit.
//!
//! For the lower case, with `a* = (a - m_y)/s_y` and `lam = phi(a*)/Phi(a*)`:
//!
//! ```text
//! E[x | y* <= a]   = m_x - (S_xy / s_y) lam
//! Cov[x | y* <= a] = S_x - (S_xy S_xy^T / s_y^2) (a* lam + lam^2)
//! ```
//!
//! The upper case is the reflection `y* -> -y*`, which gives
//! `lam_u = phi(b*)/(1 - Phi(b*))` and the factor `lam_u^2 - b* lam_u`.
//! Both factors equal `1 - Var[y* | truncated]/s_y^2` and therefore lie in
//! `[0, 1)`: a censored observation never inflates the covariance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{symmetrize_psd, PsdCheck};
use crate::normal;

/// Conditional mean and covariance of `x` after a one-sided event on `y*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Standardized limit (`a*` or `b*`).
    pub standardized_limit: f64,
    /// Inverse Mills ratio evaluated at the standardized limit.
    pub tail_ratio: f64,
    /// Fractional variance reduction of `y*` under truncation, in `[0, 1)`.
    pub variance_factor: f64,
    pub psd: PsdCheck,
}

/// Inverse Mills ratio together with the point it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRatio {
    pub z: f64,
    pub lambda: f64,
}

impl TailRatio {
    pub fn lower(z: f64) -> Result<Self> {
        Ok(Self {
            z,
            lambda: normal::mills_lower(z)?,
        })
    }

    pub fn upper(z: f64) -> Result<Self> {
        Ok(Self {
            z,
            lambda: normal::mills_upper(z)?,
        })
    }

    /// `1 - Var/s^2` for a lower truncation at `z`: `z lam + lam^2`.
    pub fn lower_variance_factor(&self) -> f64 {
        self.lambda * (self.z + self.lambda)
    }

    /// `1 - Var/s^2` for an upper truncation at `z`: `lam^2 - z lam`.
    pub fn upper_variance_factor(&self) -> f64 {
        self.lambda * (self.lambda - self.z)
    }
}

fn standardize(m: f64, s: f64, a: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("scale must be positive and finite, got {s}")));
    }
    Ok((a - m) / s)
}

/// Mean of `N(m, s^2)` truncated to `(-inf, a]`.
pub fn truncated_mean_below(m: f64, s: f64, a: f64) -> Result<f64> {
    let lam = normal::mills_lower(standardize(m, s, a)?)?;
    Ok(m - s * lam)
}

/// Second raw moment `E[Y^2 | Y <= a]` for `Y ~ N(m, s^2)`.
///
/// Uses `m^2 + s^2 - 2 m s lam - s^2 a* lam`. The variant sometimes printed
/// with `m^2` in place of `s^2` is dimensionally inconsistent and is not
/// used.
pub fn truncated_second_moment_below(m: f64, s: f64, a: f64) -> Result<f64> {
    let z = standardize(m, s, a)?;
    let lam = normal::mills_lower(z)?;
    Ok(m * m + s * s - 2.0 * m * s * lam - s * s * z * lam)
}

/// Variance of `N(m, s^2)` truncated to `(-inf, a]`, `s^2 (1 - a* lam - lam^2)`.
pub fn truncated_variance_below(m: f64, s: f64, a: f64) -> Result<f64> {
    let t = TailRatio::lower(standardize(m, s, a)?)?;
    Ok(s * s * (1.0 - t.lower_variance_factor()))
}

fn check_shapes(m_x: &DVector<f64>, s_x: &DMatrix<f64>, s_xy: &DVector<f64>) -> Result<()> {
    let n = m_x.len();
    if s_x.nrows() != n || s_x.ncols() != n {
        return Err(Error::dim("conditional moments: S_x", n, s_x.nrows().max(s_x.ncols())));
    }
    if s_xy.len() != n {
        return Err(Error::dim("conditional moments: S_xy", n, s_xy.len()));
    }
    Ok(())
}

fn assemble(
    m_x: &DVector<f64>,
    s_x: &DMatrix<f64>,
    s_xy: &DVector<f64>,
    s_y: f64,
    signed_lambda: f64,
    tail: TailRatio,
    factor: f64,
) -> ConditionalMoments {
    let mean = m_x + s_xy * (signed_lambda / s_y);
    let cov = s_x - (s_xy * s_xy.transpose()) * (factor / (s_y * s_y));
    let (cov, psd) = symmetrize_psd(&cov);
    ConditionalMoments {
        mean,
        cov,
        standardized_limit: tail.z,
        tail_ratio: tail.lambda,
        variance_factor: factor,
        psd,
    }
}

/// Moments of `x` given `y* <= a`, where `(x, y*)` is jointly Gaussian with
/// means `(m_x, m_y)`, covariances `S_x`, `S_xy` and `y*` standard deviation
/// `s_y`.
pub fn conditional_moments_lower(
    m_x: &DVector<f64>,
    s_x: &DMatrix<f64>,
    s_xy: &DVector<f64>,
    m_y: f64,
    s_y: f64,
    a: f64,
) -> Result<ConditionalMoments> {
    check_shapes(m_x, s_x, s_xy)?;
    let tail = TailRatio::lower(standardize(m_y, s_y, a)?)?;
    let factor = tail.lower_variance_factor();
    Ok(assemble(m_x, s_x, s_xy, s_y, -tail.lambda, tail, factor))
}

/// Moments of `x` given `y* >= b`; the reflection of
/// [`conditional_moments_lower`].
///
/// The covariance factor is `lam_u^2 - b* lam_u` with `lam_u` the upper
/// Mills ratio. A form with `Phi(b*)` in the denominators appears in some
/// derivations; it disagrees with direct integration and is not used.
pub fn conditional_moments_upper(
    m_x: &DVector<f64>,
    s_x: &DMatrix<f64>,
    s_xy: &DVector<f64>,
    m_y: f64,
    s_y: f64,
    b: f64,
) -> Result<ConditionalMoments> {
    check_shapes(m_x, s_x, s_xy)?;
    let tail = TailRatio::upper(standardize(m_y, s_y, b)?)?;
    let factor = tail.upper_variance_factor();
    Ok(assemble(m_x, s_x, s_xy, s_y, tail.lambda, tail, factor))
}
