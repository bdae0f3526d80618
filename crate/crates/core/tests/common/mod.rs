//! Oracles shared by the integration tests. Nothing here calls into the
//! crate's tail-ratio or truncated-moment code.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use censored_kalman::{CensoredMeasurement, GaussianBelief, StateSpaceModel};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard-normal CDF from the C library `erfc`.
pub fn big_phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const N: usize>(f: &dyn Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let centre = f(c);
    for n in 0..N {
        k[n] = WGK[7] * centre[n];
        g[n] = WG[3] * centre[n];
    }
    for j in 0..7 {
        let (lo, hi) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        for n in 0..N {
            k[n] += WGK[j] * (lo[n] + hi[n]);
            if j % 2 == 1 {
                g[n] += WG[j / 2] * (lo[n] + hi[n]);
            }
        }
    }
    let mut err: f64 = 0.0;
    for n in 0..N {
        k[n] *= h;
        err = err.max((k[n] - g[n] * h).abs());
    }
    (k, err)
}

/// Globally adaptive Gauss-Kronrod quadrature of a vector-valued
/// integrand: the subinterval with the largest error estimate is bisected
/// until the summed estimate drops below `tol` (or 4000 subintervals).
pub fn integrate<const N: usize>(f: &dyn Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64) -> [f64; N] {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if total_err <= tol || parts.len() >= 4000 {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(f, lo, mid)));
        parts.push((mid, hi, gk15(f, mid, hi)));
    }
    let mut out = [0.0; N];
    for (_, _, (v, _)) in &parts {
        for n in 0..N {
            out[n] += v[n];
        }
    }
    out
}

/// Standard normal conditioned on `t >= c`: plain rejection for small `c`,
/// exponential-proposal rejection (Robert 1995) in the tail.
pub fn normal_tail_sample(c: f64, rng: &mut impl Rng) -> f64 {
    if c < 0.5 {
        loop {
            let t: f64 = rng.sample(StandardNormal);
            if t >= c {
                return t;
            }
        }
    }
    let alpha = 0.5 * (c + (c * c + 4.0).sqrt());
    loop {
        let z = c - rng.random::<f64>().ln() / alpha;
        let u: f64 = rng.random();
        if u <= (-0.5 * (z - alpha).powi(2)).exp() {
            return z;
        }
    }
}

/// Random symmetric positive definite matrix `L L^T + floor I`.
pub fn random_spd(n: usize, floor: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let l = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &l * l.transpose() + DMatrix::identity(n, n) * floor
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Textbook Kalman filter prediction-error log-likelihood.
pub fn kf_loglik(model: &StateSpaceModel, data: &[CensoredMeasurement], init: &GaussianBelief) -> f64 {
    let (a, h) = (model.transition(), model.observation());
    let mut x = init.mean.clone();
    let mut p = init.cov.clone();
    let mut ll = 0.0;
    for (t, y) in data.iter().enumerate() {
        let xp = a * &x;
        let pp = a * &p * a.transpose() + model.process_noise(t);
        let s = h * &pp * h.transpose() + model.measurement_noise(t);
        let e: DVector<f64> = &y.value - h * &xp;
        let s_inv = s.clone().try_inverse().unwrap();
        let m = e.len() as f64;
        ll -= 0.5 * (m * (2.0 * std::f64::consts::PI).ln() + s.determinant().ln() + (e.transpose() * &s_inv * &e)[0]);
        let k = &pp * h.transpose() * s_inv;
        x = xp + &k * e;
        p = &pp - k * h * &pp;
    }
    ll
}
