//! Weibull simulator, censoring, and the in-memory dataset type.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`. Per record the draws are taken in a fixed order:
//! scale, shape, event-time uniform, censoring coin, censoring time. The two
//! censoring draws are always taken, so enabling censoring never shifts the
//! event times of later records.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::loss::SurvivalRecord;

/// Bumped whenever the draw order or sampling formulas change.
pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub scale: f64,
    pub shape: f64,
}

impl WeibullParams {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && shape > 0.0) || !scale.is_finite() || !shape.is_finite() {
            return Err(invalid(format!(
                "Weibull scale and shape must be positive, got ({scale}, {shape})"
            )));
        }
        Ok(Self { scale, shape })
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(invalid(format!("time must be non-negative, got {t}")));
        }
        Ok(())
    }

    /// `S(t) = exp(−(t/λ)^k)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok(libm::exp(-self.cumulative_hazard(t)?))
    }

    pub fn cumulative_hazard(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(libm::pow(t / self.scale, self.shape))
    }

    /// `h(t) = (k/λ)(t/λ)^{k−1}`; infinite at `t = 0` when `k < 1`.
    pub fn hazard(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.shape / self.scale * libm::pow(t / self.scale, self.shape - 1.0))
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.hazard(t)? * self.survival(t)?)
    }

    /// Time at which `S` equals `u`, for `u ∈ (0, 1]`.
    pub fn inverse_survival(&self, u: f64) -> f64 {
        self.scale * libm::pow(-libm::log(u), 1.0 / self.shape)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.inverse_survival(u)
    }
}

/// Independent uniform censoring `C ~ U(0, max_time)` applied with probability
/// `probability`, then optional administrative censoring at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringConfig {
    pub probability: f64,
    pub max_time: f64,
    pub administrative: Option<f64>,
}

impl Default for CensoringConfig {
    fn default() -> Self {
        Self {
            probability: 0.0,
            max_time: 10.0,
            administrative: None,
        }
    }
}

impl CensoringConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(invalid(format!(
                "censoring probability must be in [0, 1], got {}",
                self.probability
            )));
        }
        if !(self.max_time > 0.0) || !self.max_time.is_finite() {
            return Err(invalid(format!(
                "censoring max time must be positive, got {}",
                self.max_time
            )));
        }
        if let Some(a) = self.administrative {
            if !(a > 0.0) || !a.is_finite() {
                return Err(invalid(format!(
                    "administrative censoring time must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_disabled(&self) -> bool {
        self.probability == 0.0 && self.administrative.is_none()
    }
}

/// Covariate ranges and censoring for the simulated population. Each record draws
/// `λ ~ U(scale_range)`, `k ~ U(shape_range)` and uses `x = [λ, k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scale_range: (f64, f64),
    pub shape_range: (f64, f64),
    pub censoring: CensoringConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            scale_range: (1.0, 3.0),
            shape_range: (0.5, 5.0),
            censoring: CensoringConfig::none(),
        }
    }
}

impl SimulationConfig {
    /// Every record drawn from the single distribution `params`.
    pub fn fixed(params: WeibullParams) -> Self {
        Self {
            scale_range: (params.scale, params.scale),
            shape_range: (params.shape, params.shape),
            censoring: CensoringConfig::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("scale", self.scale_range), ("shape", self.shape_range)] {
            if !(lo > 0.0 && lo <= hi) || !hi.is_finite() {
                return Err(invalid(format!(
                    "{name} range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        self.censoring.validate()
    }
}

fn draw_in<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.gen();
    lo + (hi - lo) * u
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub simulation: Option<SimulationConfig>,
    pub split: Option<String>,
    pub generator_version: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<SurvivalRecord>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        Self::with_meta(records, DatasetMeta::default())
    }

    pub fn with_meta(records: Vec<SurvivalRecord>, meta: DatasetMeta) -> Result<Self> {
        if let Some(first) = records.first() {
            let dim = first.covariates.len();
            if let Some(bad) = records.iter().find(|r| r.covariates.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.covariates.len(),
                });
            }
        }
        if let Some(i) = records
            .iter()
            .position(|r| !(r.time >= 0.0) || !r.time.is_finite())
        {
            return Err(invalid(format!(
                "record {i} has invalid time {}",
                records[i].time
            )));
        }
        Ok(Self { records, meta })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn covariate_dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.covariates.len())
    }

    pub fn max_time(&self) -> Option<f64> {
        self.records.iter().map(|r| r.time).reduce(f64::max)
    }

    pub fn event_count(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    /// Consecutive chunks of the given sizes, tagged with `names`.
    pub fn split_sizes(self, sizes: &[usize], names: &[&str]) -> Result<Vec<Dataset>> {
        let total: usize = sizes.iter().sum();
        if total != self.records.len() || names.len() != sizes.len() {
            return Err(invalid(format!(
                "split sizes {sizes:?} do not cover {} records",
                self.records.len()
            )));
        }
        let mut rest = self.records.into_iter();
        Ok(sizes
            .iter()
            .zip(names)
            .map(|(&n, &name)| Dataset {
                records: rest.by_ref().take(n).collect(),
                meta: DatasetMeta {
                    split: Some(name.into()),
                    ..self.meta.clone()
                },
            })
            .collect())
    }
}

/// `n` simulated records, deterministic given `seed`.
pub fn generate_dataset(n: usize, config: &SimulationConfig, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("dataset size must be at least 1"));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = config.censoring;
    let records = (0..n)
        .map(|_| {
            let scale = draw_in(&mut rng, config.scale_range);
            let shape = draw_in(&mut rng, config.shape_range);
            let event_time = WeibullParams { scale, shape }.sample(&mut rng);
            let coin: f64 = rng.gen();
            let censor_time = draw_in(&mut rng, (0.0, c.max_time));

            let (mut time, mut event) = (event_time, true);
            if coin < c.probability && censor_time < time {
                time = censor_time;
                event = false;
            }
            if let Some(admin) = c.administrative {
                if time > admin {
                    time = admin;
                    event = false;
                }
            }
            SurvivalRecord::new(alloc::vec![scale, shape], time, event)
        })
        .collect();
    Dataset::with_meta(
        records,
        DatasetMeta {
            seed: Some(seed),
            simulation: Some(*config),
            split: None,
            generator_version: Some(GENERATOR_VERSION),
        },
    )
}
