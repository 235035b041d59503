//! Time discretization of `[0, t_max]`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ordered partition `0 = τ_0 < τ_1 < … < τ_N = t_max` with cached segment widths.
///
/// Serialized as the plain list of points so non-uniform grids round-trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    points: Vec<f64>,
    widths: Vec<f64>,
}

impl TimeGrid {
    /// `n_points` equally spaced points from 0 to `t_max` inclusive.
    pub fn uniform(t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(invalid(format!(
                "t_max must be positive and finite, got {t_max}"
            )));
        }
        if n_points < 2 {
            return Err(invalid(format!(
                "a grid needs at least 2 points, got {n_points}"
            )));
        }
        let last = (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|i| t_max * (i as f64) / last).collect();
        points[n_points - 1] = t_max;
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points[0] != 0.0 {
            return Err(invalid(format!(
                "first grid point must be 0, got {}",
                points[0]
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("grid points"));
        }
        let widths: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = widths.iter().position(|&w| !(w > 0.0)) {
            return Err(invalid(format!(
                "grid points must be strictly increasing (points {} and {})",
                i,
                i + 1
            )));
        }
        Ok(Self { points, widths })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.widths.len()
    }

    pub fn t_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Largest `i < N` with `τ_i ≤ t`. `t_max` maps to the last segment.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        self.check_domain(t)?;
        let upper = self.points.partition_point(|&p| p <= t);
        Ok((upper - 1).min(self.segments() - 1))
    }

    /// Segment index together with the offset `t − τ_k` inside it.
    pub(crate) fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let k = self.segment_index(t)?;
        let offset = (t - self.points[k]).min(self.widths[k]);
        Ok((k, offset))
    }

    pub fn check_domain(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max()) {
            return Err(Error::OutOfDomain {
                time: t,
                t_max: self.t_max(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::from_points(points)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.points
    }
}
