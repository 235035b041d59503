//! Censored negative log-likelihood and its gradients.
//!
//! An observed event contributes `log f(τ | x)`, a right-censored record contributes
//! `log S(τ | x)`. Dataset losses are the negative *mean* over records.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::heads::HeadKind;
use crate::network::{ForwardCache, NetworkParams, ParamGradients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub covariates: Vec<f64>,
    /// Time of the event or of censoring.
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
}

impl SurvivalRecord {
    pub fn new(covariates: Vec<f64>, time: f64, event: bool) -> Self {
        Self {
            covariates,
            time,
            event,
        }
    }
}

pub fn record_log_likelihood(
    head: HeadKind,
    z: &[f64],
    grid: &TimeGrid,
    record: &SurvivalRecord,
) -> Result<f64> {
    let e = head.evaluate(z, grid, record.time)?;
    Ok(if record.event {
        e.log_density
    } else {
        e.log_survival
    })
}

/// `∂(−log L)/∂z` for a single record.
pub fn loss_grad_z(
    head: HeadKind,
    z: &[f64],
    grid: &TimeGrid,
    record: &SurvivalRecord,
) -> Result<Vec<f64>> {
    Ok(nll_and_grad_z(head, z, grid, record)?.1)
}

fn nll_and_grad_z(
    head: HeadKind,
    z: &[f64],
    grid: &TimeGrid,
    record: &SurvivalRecord,
) -> Result<(f64, Vec<f64>)> {
    let (e, g) = head.evaluate_with_gradients(z, grid, record.time)?;
    let (ll, mut grad) = if record.event {
        (e.log_density, g.log_density)
    } else {
        (e.log_survival, g.log_survival)
    };
    grad.iter_mut().for_each(|v| *v = -*v);
    Ok((-ll, grad))
}

fn check_output_dim(head: HeadKind, params: &NetworkParams, grid: &TimeGrid) -> Result<()> {
    let expected = head.output_dim(grid.segments());
    if params.output_dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: params.output_dim(),
        });
    }
    Ok(())
}

/// Mean negative log-likelihood of `records` under the network `params`.
pub fn dataset_loss(
    head: HeadKind,
    params: &NetworkParams,
    grid: &TimeGrid,
    records: &[SurvivalRecord],
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_output_dim(head, params, grid)?;
    let mut total = 0.0;
    for r in records {
        let z = params.predict(&r.covariates)?;
        total -= record_log_likelihood(head, &z, grid, r)?;
    }
    let loss = total / records.len() as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("dataset loss"));
    }
    Ok(loss)
}

/// Mean negative log-likelihood and its gradient with respect to the network
/// parameters. `grads` is overwritten. Records are reduced in order.
pub fn dataset_loss_and_grad(
    head: HeadKind,
    params: &NetworkParams,
    grid: &TimeGrid,
    records: &[SurvivalRecord],
    grads: &mut ParamGradients,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_output_dim(head, params, grid)?;
    grads.fill_zero();
    let mut cache = ForwardCache::default();
    let mut total = 0.0;
    for r in records {
        let z = params.forward_into(&r.covariates, &mut cache)?;
        let (nll, grad_z) = nll_and_grad_z(head, &z, grid, r)?;
        total += nll;
        params.backward_accumulate(&cache, &grad_z, grads)?;
    }
    let n = records.len() as f64;
    grads.scale(1.0 / n);
    let loss = total / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("dataset loss"));
    }
    Ok(loss)
}
