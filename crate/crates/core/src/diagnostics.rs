//! How Gaussian is `x | y* <= a`?
//!
//! For a standardized pair `(x, y*)` with correlation `rho`, the censored
//! posterior `f(x | y* <= a) = phi(x) Phi((a - rho x)/sqrt(1 - rho^2)) / Phi(a)`
//! is skewed. The filters replace it by a Gaussian with the exact first two
//! moments; this module measures how much that costs with a K-S test over a
//! grid of limits and correlations.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::stream_rng;
use crate::normal;
use crate::parallel::{self, Execution};

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("correlation must satisfy |rho| < 1, got {rho}")))
    }
}

/// Draws `n` samples of `x | y* <= a` for a standardized bivariate normal
/// with correlation `rho`.
///
/// `y*` is drawn from the truncated law by inverse CDF in log space, then
/// `x | y* ~ N(rho y*, 1 - rho^2)`. No draws are rejected, so deep tails
/// cost the same as the centre.
pub fn sample_conditional_lower(rho: f64, a: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_rho(rho)?;
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    if a.is_nan() {
        return Err(Error::domain("censoring limit is NaN"));
    }
    let ln_mass = normal::ln_cdf(a);
    let sd = (1.0 - rho * rho).sqrt();
    Ok((0..n)
        .map(|_| {
            // open interval (0, 1)
            let u: f64 = 1.0 - rng.random::<f64>();
            let y = normal::quantile((u.ln() + ln_mass).exp());
            let z: f64 = StandardNormal.sample(rng);
            rho * y + sd * z
        })
        .collect())
}

/// Density of `x | y* <= a` for a standardized pair with correlation `rho`.
pub fn conditional_density_lower(x: f64, rho: f64, a: f64) -> Result<f64> {
    check_rho(rho)?;
    let s = (1.0 - rho * rho).sqrt();
    Ok((normal::ln_pdf(x) + normal::ln_cdf((a - rho * x) / s) - normal::ln_cdf(a)).exp())
}

/// `(x, f(x | y* <= a))` pairs for plotting.
pub fn density_curve(rho: f64, a: f64, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    xs.iter()
        .map(|&x| Ok((x, conditional_density_lower(x, rho, a)?)))
        .collect()
}

pub fn write_density_csv<W: Write>(curve: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "density"])?;
    for (x, f) in curve {
        w.write_record([x.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Kolmogorov survival function `P(K > x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic critical value `c` with `P(sqrt(n) D > c) = alpha`.
pub fn kolmogorov_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("significance level must be in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (0.1, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub n: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// K-S test of the sample against a normal with the sample's own mean and
/// variance, judged with the asymptotic (not Lilliefors) critical value.
pub fn ks_normality_test(samples: &[f64], alpha: f64) -> Result<KsTest> {
    let n = samples.len();
    if n < 50 {
        return Err(Error::domain(format!("K-S test needs at least 50 samples, got {n}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("K-S sample contains non-finite values"));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if !(var > 0.0) {
        return Err(Error::domain("K-S sample has zero variance"));
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let statistic = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal::cdf(v);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let critical_value = kolmogorov_critical(alpha)? / nf.sqrt();
    Ok(KsTest {
        n,
        statistic,
        critical_value,
        reject: statistic > critical_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityVerdict {
    pub a: f64,
    pub rho: f64,
    pub ks_stat: f64,
    pub reject: bool,
    pub n: usize,
}

/// Seed of the documented normality grid. Fixed before the grid was first
/// run; never tuned.
pub const TABLE1_SEED: u64 = 20_150_901;

/// Sample size per grid cell.
pub const TABLE1_SAMPLES: usize = 1000;

/// Limits `-3.00, -2.65, .., 2.95`.
pub fn table1_limits() -> Vec<f64> {
    (0..18).map(|i| round2(-3.0 + 0.35 * i as f64)).collect()
}

/// Correlations `0.05, 0.15, .., 0.95`.
pub fn table1_correlations() -> Vec<f64> {
    (0..10).map(|j| round2(0.05 + 0.1 * j as f64)).collect()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Accept/reject pattern of the reference study: `true` means normality
/// was rejected.
pub fn reference_reject(a: f64, rho: f64) -> bool {
    let (a, rho) = (round2(a), round2(rho));
    if rho <= 0.75 {
        false
    } else if rho <= 0.85 {
        (-1.95..=0.85).contains(&a)
    } else {
        a < 1.55
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub seed: u64,
    pub samples_per_cell: usize,
    pub alpha: f64,
    /// Row-major over limits, then correlations.
    pub cells: Vec<NormalityVerdict>,
}

impl Table1 {
    pub fn cell(&self, a: f64, rho: f64) -> Option<&NormalityVerdict> {
        self.cells
            .iter()
            .find(|c| (c.a - a).abs() < 1e-9 && (c.rho - rho).abs() < 1e-9)
    }

    /// Fraction of cells whose decision matches [`reference_reject`].
    pub fn agreement(&self) -> f64 {
        let hits = self
            .cells
            .iter()
            .filter(|c| c.reject == reference_reject(c.a, c.rho))
            .count();
        hits as f64 / self.cells.len() as f64
    }

    /// CSV with columns `a, rho, ks_stat, reject`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "rho", "ks_stat", "reject"])?;
        for c in &self.cells {
            w.write_record([
                format!("{:.2}", c.a),
                format!("{:.2}", c.rho),
                c.ks_stat.to_string(),
                u8::from(c.reject).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Runs the K-S normality grid. Cell `k` (row-major) draws from stream `k`
/// of `seed`.
pub fn table1_experiment(seed: u64, samples_per_cell: usize, alpha: f64, exec: Execution) -> Result<Table1> {
    let limits = table1_limits();
    let rhos = table1_correlations();
    let cols = rhos.len();
    let cells = parallel::try_map_indexed(limits.len() * cols, exec, |k| {
        let (a, rho) = (limits[k / cols], rhos[k % cols]);
        let mut rng = stream_rng(seed, k as u64);
        let xs = sample_conditional_lower(rho, a, samples_per_cell, &mut rng)?;
        let ks = ks_normality_test(&xs, alpha)?;
        Ok::<_, Error>(NormalityVerdict {
            a,
            rho,
            ks_stat: ks.statistic,
            reject: ks.reject,
            n: ks.n,
        })
    })?;
    Ok(Table1 {
        seed,
        samples_per_cell,
        alpha,
        cells,
    })
}
