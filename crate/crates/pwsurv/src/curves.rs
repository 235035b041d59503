//! Survival, density, hazard and cumulative-hazard curves on a uniform time lattice,
//! optionally next to a reference Weibull distribution.

use std::fmt::Write as _;

use pwsurv_core::data::WeibullParams;
use pwsurv_core::training::TrainedModel;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub survival: f64,
    pub density: f64,
    pub hazard: f64,
    pub cumulative_hazard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    pub model: CurvePoint,
    pub truth: Option<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn build(
        model: &TrainedModel,
        x: &[f64],
        resolution: usize,
        truth: Option<WeibullParams>,
    ) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Argument(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        if x.len() != model.input_dim() {
            return Err(pwsurv_core::Error::DimensionMismatch {
                expected: model.input_dim(),
                found: x.len(),
            }
            .into());
        }
        let t_max = model.grid.t_max();
        let last = (resolution - 1) as f64;
        let mut times: Vec<f64> = (0..resolution).map(|i| t_max * i as f64 / last).collect();
        times[resolution - 1] = t_max;
        let evals = model.evaluate_curve(x, &times)?;
        let rows = times
            .into_iter()
            .zip(evals)
            .map(|(t, e)| {
                let truth = truth
                    .map(|w| -> Result<CurvePoint> {
                        Ok(CurvePoint {
                            survival: w.survival(t)?,
                            density: w.density(t)?,
                            hazard: w.hazard(t)?,
                            cumulative_hazard: w.cumulative_hazard(t)?,
                        })
                    })
                    .transpose()?;
                Ok(CurveRow {
                    t,
                    model: CurvePoint {
                        survival: e.survival(),
                        density: e.density(),
                        hazard: e.hazard,
                        cumulative_hazard: e.cumulative_hazard,
                    },
                    truth,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    /// Largest `|S_model(t) − S_true(t)|` over the lattice, if truth columns exist.
    pub fn survival_sup_distance(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.truth.map(|tr| (tr.survival - r.model.survival).abs()))
            .try_fold(0.0, |acc, d| d.map(|d| f64::max(acc, d)))
    }

    pub fn to_csv(&self) -> String {
        let with_truth = self.rows.first().is_some_and(|r| r.truth.is_some());
        let mut out = String::from("t,survival,density,hazard,cumulative_hazard");
        if with_truth {
            out.push_str(",true_survival,true_density,true_hazard,true_cumulative_hazard");
        }
        out.push('\n');
        for r in &self.rows {
            let m = r.model;
            let _ = write!(
                out,
                "{:?},{:?},{:?},{:?},{:?}",
                r.t, m.survival, m.density, m.hazard, m.cumulative_hazard
            );
            if let Some(tr) = r.truth {
                let _ = write!(
                    out,
                    ",{:?},{:?},{:?},{:?}",
                    tr.survival, tr.density, tr.hazard, tr.cumulative_hazard
                );
            }
            out.push('\n');
        }
        out
    }
}
