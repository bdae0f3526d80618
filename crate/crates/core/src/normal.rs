//! Standard-normal kernels evaluated without catastrophic underflow in the
//! tails.
//!
//! The central region uses `erfc` directly. Below `z = -6` the lower tail is
//! computed through the scaled complementary error function
//! `erfcx(x) = exp(x^2) erfc(x)`, so ratios such as `phi(z)/Phi(z)` and
//! `ln Phi(z)` stay finite long after `Phi(z)` itself underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Lower-tail threshold below which the scaled-erfc route is used.
pub const TAIL_THRESHOLD: f64 = -6.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[inline]
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `Phi(z)`, the standard-normal CDF.
pub fn cdf(z: f64) -> f64 {
    if z < TAIL_THRESHOLD {
        let u = -z * FRAC_1_SQRT_2;
        0.5 * erfcx(u) * (-u * u).exp()
    } else {
        0.5 * erfc(-z * FRAC_1_SQRT_2)
    }
}

/// `1 - Phi(z)` evaluated without cancellation.
pub fn sf(z: f64) -> f64 {
    cdf(-z)
}

/// `ln Phi(z)`, finite for every finite `z`.
pub fn ln_cdf(z: f64) -> f64 {
    if z < TAIL_THRESHOLD {
        let u = -z * FRAC_1_SQRT_2;
        (0.5 * erfcx(u)).ln() - u * u
    } else if z > 0.0 {
        (-sf(z)).ln_1p()
    } else {
        cdf(z).ln()
    }
}

/// `ln(1 - Phi(z))`.
pub fn ln_sf(z: f64) -> f64 {
    ln_cdf(-z)
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`.
///
/// Large arguments use the Laplace continued fraction evaluated with the
/// modified Lentz algorithm; small ones fall back to the direct product.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 4.0 {
        return (x * x).exp() * erfc(x);
    }
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

fn check_finite(z: f64, what: &str) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: argument must be finite, got {z}")))
    }
}

/// Lower inverse Mills ratio `phi(z)/Phi(z)`.
///
/// Positive and strictly decreasing; behaves like `-z` as `z -> -inf` and
/// like `phi(z)` as `z -> +inf`.
pub fn mills_lower(z: f64) -> Result<f64> {
    check_finite(z, "mills_lower")?;
    Ok(mills_lower_unchecked(z))
}

/// Upper inverse Mills ratio `phi(z)/(1 - Phi(z))`, the reflection of
/// [`mills_lower`].
pub fn mills_upper(z: f64) -> Result<f64> {
    check_finite(z, "mills_upper")?;
    Ok(mills_lower_unchecked(-z))
}

pub(crate) fn mills_lower_unchecked(z: f64) -> f64 {
    if z < TAIL_THRESHOLD {
        // phi(z)/Phi(z) = sqrt(2/pi) / erfcx(-z/sqrt 2)
        (2.0 / PI).sqrt() / erfcx(-z * FRAC_1_SQRT_2)
    } else {
        pdf(z) / cdf(z)
    }
}

/// Standard-normal quantile `Phi^{-1}(p)` for `p` in `(0, 1)`.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}
