//! Linear-Gaussian state-space model, Tobit type-I censoring and trajectory
//! simulation.
//!
//! ```text
//! x_{t+1} = A x_t + w_t,   w_t ~ N(0, Q_t)
//! y*_t    = H x_t + v_t,   v_t ~ N(0, R_t)
//! y_t     = clamp(y*_t, a, b)   (coordinate-wise)
//! ```
//!
//! # Random streams
//!
//! Simulations draw from ChaCha8. A run is identified by `(seed, stream)`;
//! replication `k` of a Monte Carlo experiment uses stream `k` of the
//! experiment seed, so replications are independent of each other and of
//! the order in which they are executed.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_diagonal, is_symmetric, min_eigenvalue, psd_sqrt};

/// Builds the generator for `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    transition: DMatrix<f64>,
    observation: DMatrix<f64>,
    process_noise: DMatrix<f64>,
    measurement_noise: DMatrix<f64>,
    process_schedule: Option<Vec<DMatrix<f64>>>,
    measurement_schedule: Option<Vec<DMatrix<f64>>>,
}

fn check_covariance(name: &str, m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::domain(format!(
            "{name} must be {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{name} has non-finite entries")));
    }
    if !is_symmetric(m, 1e-12) {
        return Err(Error::domain(format!("{name} is not symmetric")));
    }
    let min = min_eigenvalue(m);
    if min < -1e-12 * (1.0 + m.amax()) {
        return Err(Error::domain(format!(
            "{name} is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn check_measurement_noise(r: &DMatrix<f64>, m: usize) -> Result<()> {
    check_covariance("R", r, m)?;
    if r.diagonal().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::domain("R must be strictly positive on its diagonal"));
    }
    Ok(())
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, h: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 {
            return Err(Error::domain(format!(
                "A must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if h.ncols() != n || h.nrows() == 0 {
            return Err(Error::dim("H columns", n, h.ncols()));
        }
        if a.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("A and H must be finite"));
        }
        check_covariance("Q", &q, n)?;
        check_measurement_noise(&r, h.nrows())?;
        Ok(Self {
            transition: a,
            observation: h,
            process_noise: q,
            measurement_noise: r,
            process_schedule: None,
            measurement_schedule: None,
        })
    }

    /// Per-step process-noise covariances `Q_t`; steps past the end of the
    /// schedule use the constant `Q`.
    pub fn with_process_schedule(mut self, schedule: Vec<DMatrix<f64>>) -> Result<Self> {
        for q in &schedule {
            check_covariance("Q_t", q, self.state_dim())?;
        }
        self.process_schedule = Some(schedule);
        Ok(self)
    }

    /// Per-step measurement-noise covariances `R_t`; steps past the end of the
    /// schedule use the constant `R`.
    pub fn with_measurement_schedule(mut self, schedule: Vec<DMatrix<f64>>) -> Result<Self> {
        for r in &schedule {
            check_measurement_noise(r, self.measurement_dim())?;
        }
        self.measurement_schedule = Some(schedule);
        Ok(self)
    }

    /// Copy of the model with a constant `R` and no `R_t` schedule.
    pub fn with_measurement_noise(&self, r: DMatrix<f64>) -> Result<Self> {
        check_measurement_noise(&r, self.measurement_dim())?;
        Ok(Self {
            measurement_noise: r,
            measurement_schedule: None,
            ..self.clone()
        })
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn observation(&self) -> &DMatrix<f64> {
        &self.observation
    }

    /// `Q_t` for zero-based step `t`.
    pub fn process_noise(&self, t: usize) -> &DMatrix<f64> {
        self.process_schedule
            .as_ref()
            .and_then(|s| s.get(t))
            .unwrap_or(&self.process_noise)
    }

    /// `R_t` for zero-based step `t`.
    pub fn measurement_noise(&self, t: usize) -> &DMatrix<f64> {
        self.measurement_schedule
            .as_ref()
            .and_then(|s| s.get(t))
            .unwrap_or(&self.measurement_noise)
    }

    pub fn has_diagonal_measurement_noise(&self) -> bool {
        is_diagonal(&self.measurement_noise)
            && self
                .measurement_schedule
                .iter()
                .flatten()
                .all(is_diagonal)
    }
}

/// Damped rotation model with a scalar position measurement:
/// `A = c [cos w, -sin w; sin w, cos w]`, `H = [1 0]`, `Q = q^2 I`, `R = [r2]`.
pub fn oscillator_model(c: f64, omega: f64, q: f64, r2: f64) -> Result<StateSpaceModel> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("process noise std must be >= 0, got {q}")));
    }
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::domain(format!("measurement variance must be > 0, got {r2}")));
    }
    let (s, co) = omega.sin_cos();
    let a = DMatrix::from_row_slice(2, 2, &[co, -s, s, co]) * c;
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let qm = DMatrix::identity(2, 2) * (q * q);
    let rm = DMatrix::from_element(1, 1, r2);
    StateSpaceModel::new(a, h, qm, rm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorStatus {
    Interior,
    AtLower,
    AtUpper,
}

impl CensorStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CensorStatus::Interior => "interior",
            CensorStatus::AtLower => "at_lower",
            CensorStatus::AtUpper => "at_upper",
        }
    }

    pub fn is_censored(self) -> bool {
        self != CensorStatus::Interior
    }
}

impl std::str::FromStr for CensorStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(CensorStatus::Interior),
            "at_lower" => Ok(CensorStatus::AtLower),
            "at_upper" => Ok(CensorStatus::AtUpper),
            other => Err(Error::domain(format!("unknown censor status {other:?}"))),
        }
    }
}

/// Saturation limits of one measurement coordinate. Either end may be
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CensorInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::domain(format!(
                "censor interval needs lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// Clamps a latent value. The limits themselves belong to the censored
    /// events (`y* <= a` and `y* >= b`).
    pub fn censor(&self, latent: f64) -> (f64, CensorStatus) {
        if latent <= self.lower {
            (self.lower, CensorStatus::AtLower)
        } else if latent >= self.upper {
            (self.upper, CensorStatus::AtUpper)
        } else {
            (latent, CensorStatus::Interior)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredMeasurement {
    #[serde(with = "crate::linalg::serde_vector")]
    pub value: DVector<f64>,
    pub status: Vec<CensorStatus>,
}

impl CensoredMeasurement {
    pub fn interior(value: DVector<f64>) -> Self {
        let status = vec![CensorStatus::Interior; value.len()];
        Self { value, status }
    }

    pub fn scalar(value: f64, status: CensorStatus) -> Self {
        Self {
            value: DVector::from_element(1, value),
            status: vec![status],
        }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn any_censored(&self) -> bool {
        self.status.iter().any(|s| s.is_censored())
    }

    pub fn all_censored(&self) -> bool {
        self.status.iter().all(|s| s.is_censored())
    }
}

/// Coordinate-wise Tobit type-I censoring of a latent measurement.
pub fn censor(latent: &DVector<f64>, intervals: &[CensorInterval]) -> Result<CensoredMeasurement> {
    if latent.len() != intervals.len() {
        return Err(Error::dim("censor intervals", latent.len(), intervals.len()));
    }
    let mut value = latent.clone();
    let mut status = Vec::with_capacity(latent.len());
    for (i, iv) in intervals.iter().enumerate() {
        let (v, s) = iv.censor(latent[i]);
        value[i] = v;
        status.push(s);
    }
    Ok(CensoredMeasurement { value, status })
}

/// Ground truth, latent measurements and censored observations of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    /// `x_1 .. x_T`, one row per step.
    #[serde(with = "crate::linalg::serde_vectors")]
    pub states: Vec<DVector<f64>>,
    /// `y*_1 .. y*_T`. Never handed to the filters.
    #[serde(with = "crate::linalg::serde_vectors")]
    pub latent: Vec<DVector<f64>>,
    pub observed: Vec<CensoredMeasurement>,
    pub intervals: Vec<CensorInterval>,
}

impl SimulationRecord {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn censored_fraction(&self) -> f64 {
        let total: usize = self.observed.iter().map(|m| m.dim()).sum();
        if total == 0 {
            return 0.0;
        }
        let censored = self
            .observed
            .iter()
            .flat_map(|m| m.status.iter())
            .filter(|s| s.is_censored())
            .count();
        censored as f64 / total as f64
    }

    /// CSV with columns `t, x_1..x_n, ystar_1..ystar_m, y_1..y_m,
    /// status_1..status_m`. `t` starts at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.states.first().map_or(0, |x| x.len());
        let m = self.latent.first().map_or(0, |y| y.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend((1..=m).map(|i| format!("ystar_{i}")));
        header.extend((1..=m).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|i| format!("status_{i}")));
        w.write_record(&header)?;
        for (t, ((x, ys), y)) in self
            .states
            .iter()
            .zip(&self.latent)
            .zip(&self.observed)
            .enumerate()
        {
            let mut row = vec![(t + 1).to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.extend(ys.iter().map(|v| v.to_string()));
            row.extend(y.value.iter().map(|v| v.to_string()));
            row.extend(y.status.iter().map(|s| s.as_str().to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(s)?;
        if rec.latent.len() != rec.states.len() || rec.observed.len() != rec.states.len() {
            return Err(Error::Contract("simulation record columns have different lengths".into()));
        }
        Ok(rec)
    }
}

/// Simulates `steps` transitions from `x0` and censors each latent
/// measurement. The first recorded state is `x_1 = A x0 + w_0`.
pub fn simulate(
    model: &StateSpaceModel,
    x0: &DVector<f64>,
    steps: usize,
    intervals: &[CensorInterval],
    rng: &mut impl rand::Rng,
) -> Result<SimulationRecord> {
    if steps == 0 {
        return Err(Error::domain("simulation needs at least one step"));
    }
    if x0.len() != model.state_dim() {
        return Err(Error::dim("simulate x0", model.state_dim(), x0.len()));
    }
    if intervals.len() != model.measurement_dim() {
        return Err(Error::dim("simulate intervals", model.measurement_dim(), intervals.len()));
    }
    let n = model.state_dim();
    let m = model.measurement_dim();
    let mut states = Vec::with_capacity(steps);
    let mut latent = Vec::with_capacity(steps);
    let mut observed = Vec::with_capacity(steps);
    let mut x = x0.clone();
    let q_const = psd_sqrt(model.process_noise(usize::MAX));
    let r_const = psd_sqrt(model.measurement_noise(usize::MAX));
    for t in 0..steps {
        let q_root = match &model.process_schedule {
            Some(s) if t < s.len() => psd_sqrt(&s[t]),
            _ => q_const.clone(),
        };
        let r_root = match &model.measurement_schedule {
            Some(s) if t < s.len() => psd_sqrt(&s[t]),
            _ => r_const.clone(),
        };
        let w = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        x = model.transition() * &x + &q_root * w;
        let v = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        let y_star = model.observation() * &x + &r_root * v;
        observed.push(censor(&y_star, intervals)?);
        states.push(x.clone());
        latent.push(y_star);
    }
    Ok(SimulationRecord {
        states,
        latent,
        observed,
        intervals: intervals.to_vec(),
    })
}
