//! Single training run with best-validation checkpointing, plus the small pieces of
//! the experiment harness that need no clock or threads: the learning-rate grid,
//! sweep selection and summary statistics.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::heads::{HeadEvaluation, HeadKind};
use crate::loss::{dataset_loss, dataset_loss_and_grad, SurvivalRecord};
use crate::network::{Activation, NetworkConfig, NetworkParams, ParamGradients};
use crate::optim::{Adam, AdamConfig};

/// How the grid horizon `t_max` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonRule {
    /// Largest time among the training and validation records, times `factor`.
    ObservedMax {
        factor: f64,
    },
    Fixed {
        t_max: f64,
    },
}

impl Default for HorizonRule {
    fn default() -> Self {
        HorizonRule::ObservedMax { factor: 1.001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub horizon: HorizonRule,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_points: 5,
            horizon: HorizonRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub head: HeadKind,
    pub grid: GridSpec,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Network initialization seed; also seeds mini-batch shuffling.
    pub seed: u64,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub standardize: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            head: HeadKind::LinearHazard,
            grid: GridSpec::default(),
            hidden_layers: alloc::vec![32, 32],
            activation: Activation::Relu,
            epochs: 200,
            learning_rate: adam.learning_rate,
            seed: 0,
            batch_size: None,
            standardize: false,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Per-feature z-scoring fitted on the training covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(records: &[SurvivalRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        let n = records.len() as f64;
        let dim = first.covariates.len();
        let mut mean = alloc::vec![0.0; dim];
        for r in records {
            mean.iter_mut()
                .zip(&r.covariates)
                .for_each(|(m, x)| *m += x / n);
        }
        let mut var = alloc::vec![0.0; dim];
        for r in records {
            var.iter_mut()
                .zip(&r.covariates)
                .zip(&mean)
                .for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
        }
        // constant features are centred but not scaled
        let sd = var
            .into_iter()
            .map(|v| if v > 0.0 { libm::sqrt(v) } else { 1.0 })
            .collect();
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    fn apply_all(&self, records: &[SurvivalRecord]) -> Vec<SurvivalRecord> {
        records
            .iter()
            .map(|r| SurvivalRecord::new(self.apply(&r.covariates), r.time, r.event))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's steps, measured before each step.
    pub train_loss: f64,
    /// Validation loss after the epoch's last step.
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub head: HeadKind,
    pub grid: TimeGrid,
    pub network_config: NetworkConfig,
    /// Parameters from `best_epoch`.
    pub network: NetworkParams,
    pub standardizer: Option<Standardizer>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub config: TrainConfig,
    /// Wall-clock seconds of the run; filled in by callers that own a clock.
    pub training_seconds: f64,
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    /// Raw head inputs `z(x)` for an unstandardized covariate vector.
    pub fn head_inputs(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.standardizer {
            Some(s) => {
                if x.len() != s.mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: s.mean.len(),
                        found: x.len(),
                    });
                }
                self.network.predict(&s.apply(x))
            }
            None => self.network.predict(x),
        }
    }

    pub fn evaluate_at(&self, x: &[f64], t: f64) -> Result<HeadEvaluation> {
        let z = self.head_inputs(x)?;
        self.head.evaluate(&z, &self.grid, t)
    }

    /// `(x, times)` evaluated with a single forward pass.
    pub fn evaluate_curve(&self, x: &[f64], times: &[f64]) -> Result<Vec<HeadEvaluation>> {
        let z = self.head_inputs(x)?;
        times
            .iter()
            .map(|&t| self.head.evaluate(&z, &self.grid, t))
            .collect()
    }
}

fn check_sets(train: &[SurvivalRecord], val: &[SurvivalRecord]) -> Result<usize> {
    let dim = train.first().ok_or(Error::EmptyDataset)?.covariates.len();
    if val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(bad) = train.iter().chain(val).find(|r| r.covariates.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.covariates.len(),
        });
    }
    Ok(dim)
}

/// Resolve `rule` against the records the run will see.
pub fn resolve_horizon(rule: HorizonRule, sets: &[&[SurvivalRecord]]) -> Result<f64> {
    let t_max = match rule {
        HorizonRule::Fixed { t_max } => t_max,
        HorizonRule::ObservedMax { factor } => {
            if !(factor >= 1.0) {
                return Err(invalid(format!(
                    "horizon factor must be >= 1, got {factor}"
                )));
            }
            let max = sets
                .iter()
                .flat_map(|s| s.iter().map(|r| r.time))
                .fold(0.0, f64::max);
            max * factor
        }
    };
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(invalid(format!(
            "grid horizon must be positive, got {t_max}"
        )));
    }
    Ok(t_max)
}

/// Error listing the records whose time exceeds `t_max`.
pub fn check_horizon(records: &[SurvivalRecord], t_max: f64) -> Result<()> {
    let offenders: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.time > t_max)
        .map(|(i, _)| i)
        .collect();
    if offenders.is_empty() {
        return Ok(());
    }
    Err(Error::TimesAboveHorizon {
        t_max,
        count: offenders.len(),
        rows: offenders.into_iter().take(20).collect(),
    })
}

fn diverged(err: Error, epoch: usize, learning_rate: f64) -> Error {
    match err {
        Error::NonFinite(_) => Error::Diverged {
            epoch,
            learning_rate,
        },
        other => other,
    }
}

/// Train for `config.epochs` epochs and keep the parameters of the epoch with the
/// lowest validation loss (earliest on ties).
pub fn train(
    config: &TrainConfig,
    train_set: &[SurvivalRecord],
    val_set: &[SurvivalRecord],
) -> Result<TrainedModel> {
    let input_dim = check_sets(train_set, val_set)?;
    if config.epochs == 0 {
        return Err(invalid("epochs must be at least 1"));
    }
    if config.batch_size == Some(0) {
        return Err(invalid("batch size must be positive"));
    }
    let t_max = resolve_horizon(config.grid.horizon, &[train_set, val_set])?;
    check_horizon(train_set, t_max)?;
    check_horizon(val_set, t_max)?;
    let grid = TimeGrid::uniform(t_max, config.grid.n_points)?;

    let standardizer = if config.standardize {
        Some(Standardizer::fit(train_set)?)
    } else {
        None
    };
    let (train_owned, val_owned);
    let (train_recs, val_recs) = match &standardizer {
        Some(s) => {
            train_owned = s.apply_all(train_set);
            val_owned = s.apply_all(val_set);
            (&train_owned[..], &val_owned[..])
        }
        None => (train_set, val_set),
    };

    let head = config.head;
    let network_config = NetworkConfig {
        input_dim,
        hidden_layers: config.hidden_layers.clone(),
        output_dim: head.output_dim(grid.segments()),
        activation: config.activation,
        seed: config.seed,
    };
    let mut params = NetworkParams::init(&network_config)?;
    let mut adam = Adam::new(params.param_count(), config.adam())?;
    let mut grads = ParamGradients::zeros_like(&params);
    let lr = config.learning_rate;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<SurvivalRecord> = Vec::new();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, NetworkParams)> = None;
    for epoch in 1..=config.epochs {
        let train_loss = match config.batch_size {
            None => {
                let loss = dataset_loss_and_grad(head, &params, &grid, train_recs, &mut grads)
                    .map_err(|e| diverged(e, epoch, lr))?;
                adam.step_network(&mut params, &grads)
                    .map_err(|e| diverged(e, epoch, lr))?;
                loss
            }
            Some(size) => {
                order.clear();
                order.extend_from_slice(train_recs);
                order.shuffle(&mut shuffle_rng);
                let mut sum = 0.0;
                let mut steps = 0;
                for batch in order.chunks(size) {
                    sum += dataset_loss_and_grad(head, &params, &grid, batch, &mut grads)
                        .map_err(|e| diverged(e, epoch, lr))?;
                    adam.step_network(&mut params, &grads)
                        .map_err(|e| diverged(e, epoch, lr))?;
                    steps += 1;
                }
                sum / steps as f64
            }
        };
        let val_loss =
            dataset_loss(head, &params, &grid, val_recs).map_err(|e| diverged(e, epoch, lr))?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if best.as_ref().is_none_or(|(_, b, _)| val_loss < *b) {
            best = Some((epoch, val_loss, params.clone()));
        }
    }

    let (best_epoch, best_val_loss, network) = best.expect("at least one epoch");
    Ok(TrainedModel {
        head,
        grid,
        network_config,
        network,
        standardizer,
        history,
        best_epoch,
        best_val_loss,
        config: config.clone(),
        training_seconds: 0.0,
    })
}

/// Mean negative log-likelihood of `records` under `model`.
pub fn evaluate(model: &TrainedModel, records: &[SurvivalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = model.input_dim();
    if let Some(bad) = records.iter().find(|r| r.covariates.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.covariates.len(),
        });
    }
    check_horizon(records, model.grid.t_max())?;
    match &model.standardizer {
        Some(s) => dataset_loss(
            model.head,
            &model.network,
            &model.grid,
            &s.apply_all(records),
        ),
        None => dataset_loss(model.head, &model.network, &model.grid, records),
    }
}

/// `count` learning rates spaced geometrically from `lr_min` to `lr_max`, both
/// endpoints included exactly.
pub fn learning_rate_grid(lr_min: f64, lr_max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(invalid(format!(
            "a sweep needs at least 2 learning rates, got {count}"
        )));
    }
    if !(lr_min > 0.0 && lr_min < lr_max) || !lr_max.is_finite() {
        return Err(invalid(format!(
            "learning-rate range must satisfy 0 < min < max, got ({lr_min}, {lr_max})"
        )));
    }
    let (lo, hi) = (libm::log(lr_min), libm::log(lr_max));
    let last = (count - 1) as f64;
    let mut lrs: Vec<f64> = (0..count)
        .map(|i| libm::exp(lo + (hi - lo) * i as f64 / last))
        .collect();
    lrs[0] = lr_min;
    lrs[count - 1] = lr_max;
    Ok(lrs)
}

/// Index of the entry with the lowest validation loss; ties go to the smaller
/// learning rate. `None` losses are failed runs. Returns `None` when all failed.
pub fn select_learning_rate(entries: &[(f64, Option<f64>)]) -> Option<usize> {
    entries
        .iter()
        .enumerate()
        .filter_map(|(i, (lr, loss))| loss.map(|l| (i, *lr, l)))
        .reduce(|best, cur| {
            if cur.2 < best.2 || (cur.2 == best.2 && cur.1 < best.1) {
                cur
            } else {
                best
            }
        })
        .map(|(i, _, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single sample.
    pub sd: f64,
}

impl Summary {
    pub fn single_sample(&self) -> bool {
        self.count == 1
    }
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    Some(Summary {
        count: values.len(),
        mean,
        sd,
    })
}
