//! The four piecewise model heads.
//!
//! A head turns a raw network output vector `z` and a [`TimeGrid`] into
//! `log f(t)`, `log S(t)`, `h(t)` and `H(t)` for any `t` in `[0, t_max]`. Every
//! quantity is built from weighted log-sum-exps over `z`, so the log-likelihood never
//! leaves the log domain and the gradients with respect to `z` come out as
//! softmax-style shares of those sums.
//!
//! Output layout per head, for a grid with `N` segments:
//!
//! | head              | outputs | meaning                                              |
//! |-------------------|---------|------------------------------------------------------|
//! | constant density  | `N + 1` | `z_0..z_{N-1}` segment levels, `z_N` mass beyond `t_max` |
//! | linear density    | `N + 2` | `z_0..z_N` node values, `z_{N+1}` mass beyond `t_max`  |
//! | constant hazard   | `N`     | `z_i = log h_i` on segment `i`                        |
//! | linear hazard     | `N + 1` | `z_i = log h(τ_i)` at node `i`                        |

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::numerics::{add_shares, log_weighted_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    ConstantDensity,
    ConstantHazard,
    LinearDensity,
    LinearHazard,
}

impl HeadKind {
    pub const ALL: [HeadKind; 4] = [
        HeadKind::ConstantDensity,
        HeadKind::ConstantHazard,
        HeadKind::LinearDensity,
        HeadKind::LinearHazard,
    ];

    /// Number of network outputs this head consumes on a grid with `segments` segments.
    pub fn output_dim(self, segments: usize) -> usize {
        match self {
            HeadKind::ConstantDensity => segments + 1,
            HeadKind::LinearDensity => segments + 2,
            HeadKind::ConstantHazard => segments,
            HeadKind::LinearHazard => segments + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::ConstantDensity => "constant-density",
            HeadKind::LinearDensity => "linear-density",
            HeadKind::ConstantHazard => "constant-hazard",
            HeadKind::LinearHazard => "linear-hazard",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, HeadKind::LinearDensity | HeadKind::LinearHazard)
    }

    pub fn evaluate(self, z: &[f64], grid: &TimeGrid, t: f64) -> Result<HeadEvaluation> {
        evaluate_impl(self, z, grid, t, None)
    }

    /// Evaluation plus `∂ log f / ∂z` and `∂ log S / ∂z`.
    pub fn evaluate_with_gradients(
        self,
        z: &[f64],
        grid: &TimeGrid,
        t: f64,
    ) -> Result<(HeadEvaluation, LogGradients)> {
        let mut grads = LogGradients::zeros(z.len());
        let eval = evaluate_impl(self, z, grid, t, Some(&mut grads))?;
        Ok((eval, grads))
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| {
                invalid(alloc::format!(
                    "unknown head '{s}' (expected constant-density, linear-density, constant-hazard or linear-hazard)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadEvaluation {
    pub log_density: f64,
    pub log_survival: f64,
    pub hazard: f64,
    pub cumulative_hazard: f64,
}

impl HeadEvaluation {
    pub fn density(&self) -> f64 {
        libm::exp(self.log_density)
    }

    pub fn survival(&self) -> f64 {
        libm::exp(self.log_survival)
    }

    fn from_density_logs(log_density: f64, log_survival: f64) -> Self {
        Self {
            log_density,
            log_survival,
            hazard: libm::exp(log_density - log_survival),
            cumulative_hazard: -log_survival,
        }
    }
}

/// Gradients of `log f(t)` and `log S(t)` with respect to the head inputs `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGradients {
    pub log_density: Vec<f64>,
    pub log_survival: Vec<f64>,
}

impl LogGradients {
    fn zeros(n: usize) -> Self {
        Self {
            log_density: vec![0.0; n],
            log_survival: vec![0.0; n],
        }
    }
}

fn check_inputs(kind: HeadKind, z: &[f64], grid: &TimeGrid) -> Result<()> {
    let expected = kind.output_dim(grid.segments());
    if z.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("head input z"));
    }
    Ok(())
}

fn evaluate_impl(
    kind: HeadKind,
    z: &[f64],
    grid: &TimeGrid,
    t: f64,
    grads: Option<&mut LogGradients>,
) -> Result<HeadEvaluation> {
    check_inputs(kind, z, grid)?;
    let (k, s) = grid.locate(t)?;
    let at_origin = t == 0.0;
    Ok(match kind {
        HeadKind::ConstantDensity => constant_density(z, grid, k, s, at_origin, grads),
        HeadKind::LinearDensity => linear_density(z, grid, k, s, at_origin, grads),
        HeadKind::ConstantHazard => constant_hazard(z, grid, k, s, grads),
        HeadKind::LinearHazard => linear_hazard(z, grid, k, s, grads),
    })
}

/// Weights of the constant-density normalizer `Z = e^{z_N} + Σ_j Δτ_j e^{z_j}`.
fn constant_density_norm_weights(grid: &TimeGrid) -> Vec<f64> {
    let n = grid.segments();
    let mut w = vec![1.0; n + 1];
    w[..n].copy_from_slice(grid.widths());
    w
}

/// Weights of the linear-density normalizer
/// `Z = e^{z_{N+1}} + Σ_j (Δτ_j/2)(e^{z_{j+1}} + e^{z_j})`, collected per node.
fn linear_density_norm_weights(grid: &TimeGrid) -> Vec<f64> {
    let n = grid.segments();
    let d = grid.widths();
    let mut w = vec![0.0; n + 2];
    for (j, &dj) in d.iter().enumerate() {
        w[j] += 0.5 * dj;
        w[j + 1] += 0.5 * dj;
    }
    w[n + 1] = 1.0;
    w
}

fn constant_density(
    z: &[f64],
    grid: &TimeGrid,
    k: usize,
    s: f64,
    at_origin: bool,
    grads: Option<&mut LogGradients>,
) -> HeadEvaluation {
    let n = grid.segments();
    let d = grid.widths();
    let norm_w = constant_density_norm_weights(grid);
    let log_norm = log_weighted_sum(z, &norm_w);
    let log_density = z[k] - log_norm;

    // Remaining mass: rest of segment k, all later segments, and the tail.
    let mut rest_w = vec![0.0; n + 1];
    rest_w[k] = d[k] - s;
    rest_w[k + 1..n].copy_from_slice(&d[k + 1..]);
    rest_w[n] = 1.0;
    let log_rest = log_weighted_sum(z, &rest_w);
    let log_survival = if at_origin {
        0.0
    } else {
        (log_rest - log_norm).min(0.0)
    };

    if let Some(g) = grads {
        g.log_density[k] += 1.0;
        add_shares(z, &norm_w, log_norm, -1.0, &mut g.log_density);
        if !at_origin {
            add_shares(z, &rest_w, log_rest, 1.0, &mut g.log_survival);
            add_shares(z, &norm_w, log_norm, -1.0, &mut g.log_survival);
        }
    }
    HeadEvaluation::from_density_logs(log_density, log_survival)
}

fn linear_density(
    z: &[f64],
    grid: &TimeGrid,
    k: usize,
    s: f64,
    at_origin: bool,
    grads: Option<&mut LogGradients>,
) -> HeadEvaluation {
    let n = grid.segments();
    let d = grid.widths();
    let dk = d[k];
    let norm_w = linear_density_norm_weights(grid);
    let log_norm = log_weighted_sum(z, &norm_w);

    let u = s / dk;
    let mut interp_w = vec![0.0; n + 2];
    interp_w[k] = 1.0 - u;
    interp_w[k + 1] = u;
    let log_interp = log_weighted_sum(z, &interp_w);
    let log_density = log_interp - log_norm;

    // ∫_t^{τ_{k+1}} of the interpolated density, split onto its two nodes, then the
    // full trapezoids of every later segment and the tail.
    let left = dk - s;
    let mut rest_w = vec![0.0; n + 2];
    rest_w[k] += left * left / (2.0 * dk);
    rest_w[k + 1] += left * (dk + s) / (2.0 * dk);
    for j in k + 1..n {
        rest_w[j] += 0.5 * d[j];
        rest_w[j + 1] += 0.5 * d[j];
    }
    rest_w[n + 1] = 1.0;
    let log_rest = log_weighted_sum(z, &rest_w);
    let log_survival = if at_origin {
        0.0
    } else {
        (log_rest - log_norm).min(0.0)
    };

    if let Some(g) = grads {
        add_shares(z, &interp_w, log_interp, 1.0, &mut g.log_density);
        add_shares(z, &norm_w, log_norm, -1.0, &mut g.log_density);
        if !at_origin {
            add_shares(z, &rest_w, log_rest, 1.0, &mut g.log_survival);
            add_shares(z, &norm_w, log_norm, -1.0, &mut g.log_survival);
        }
    }
    HeadEvaluation::from_density_logs(log_density, log_survival)
}

fn constant_hazard(
    z: &[f64],
    grid: &TimeGrid,
    k: usize,
    s: f64,
    grads: Option<&mut LogGradients>,
) -> HeadEvaluation {
    let d = grid.widths();
    let mut cum = 0.0;
    for i in 0..k {
        cum += d[i] * libm::exp(z[i]);
    }
    let hazard = libm::exp(z[k]);
    cum += s * hazard;

    if let Some(g) = grads {
        for i in 0..k {
            let dh = d[i] * libm::exp(z[i]);
            g.log_density[i] -= dh;
            g.log_survival[i] -= dh;
        }
        g.log_density[k] += 1.0 - s * hazard;
        g.log_survival[k] -= s * hazard;
    }
    HeadEvaluation {
        log_density: z[k] - cum,
        log_survival: -cum,
        hazard,
        cumulative_hazard: cum,
    }
}

fn linear_hazard(
    z: &[f64],
    grid: &TimeGrid,
    k: usize,
    s: f64,
    grads: Option<&mut LogGradients>,
) -> HeadEvaluation {
    let n = grid.segments();
    let d = grid.widths();
    let dk = d[k];

    let mut cum = 0.0;
    for i in 0..k {
        cum += (0.5 * d[i]) * (libm::exp(z[i]) + libm::exp(z[i + 1]));
    }
    let (hk, hk1) = (libm::exp(z[k]), libm::exp(z[k + 1]));
    let quad = s * s / (2.0 * dk);
    cum += hk * s + quad * (hk1 - hk);

    let u = s / dk;
    let mut interp_w = vec![0.0; n + 1];
    interp_w[k] = 1.0 - u;
    interp_w[k + 1] = u;
    let log_hazard = log_weighted_sum(z, &interp_w);

    if let Some(g) = grads {
        // H = Σ_i a_i e^{z_i} with node weights a_i.
        let mut cum_w = vec![0.0; n + 1];
        for i in 0..k {
            cum_w[i] += 0.5 * d[i];
            cum_w[i + 1] += 0.5 * d[i];
        }
        cum_w[k] += s - quad;
        cum_w[k + 1] += quad;
        for (i, &a) in cum_w.iter().enumerate() {
            let dh = a * libm::exp(z[i]);
            g.log_density[i] -= dh;
            g.log_survival[i] -= dh;
        }
        add_shares(z, &interp_w, log_hazard, 1.0, &mut g.log_density);
    }
    HeadEvaluation {
        log_density: log_hazard - cum,
        log_survival: -cum,
        hazard: libm::exp(log_hazard),
        cumulative_hazard: cum,
    }
}

fn levels(kind: HeadKind, z: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_inputs(kind, z, grid)?;
    Ok(match kind {
        HeadKind::ConstantDensity => {
            let log_norm = log_weighted_sum(z, &constant_density_norm_weights(grid));
            z[..grid.segments()]
                .iter()
                .map(|&zi| libm::exp(zi - log_norm))
                .collect()
        }
        HeadKind::LinearDensity => {
            let log_norm = log_weighted_sum(z, &linear_density_norm_weights(grid));
            z[..=grid.segments()]
                .iter()
                .map(|&zi| libm::exp(zi - log_norm))
                .collect()
        }
        HeadKind::ConstantHazard | HeadKind::LinearHazard => {
            z.iter().map(|&zi| libm::exp(zi)).collect()
        }
    })
}

/// Segment density levels `f_0..f_{N-1}` of the constant-density head.
pub fn density_levels_constant(z: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    levels(HeadKind::ConstantDensity, z, grid)
}

/// Node density values `f_0..f_N` of the linear-density head.
pub fn density_nodes_linear(z: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    levels(HeadKind::LinearDensity, z, grid)
}

/// Segment hazard levels `h_i = e^{z_i}` of the constant-hazard head.
pub fn hazard_levels_constant(z: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    levels(HeadKind::ConstantHazard, z, grid)
}

/// Node hazard values `h_i = e^{z_i}` of the linear-hazard head.
pub fn hazard_nodes_linear(z: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    levels(HeadKind::LinearHazard, z, grid)
}

pub fn eval_constant_density(z: &[f64], grid: &TimeGrid, t: f64) -> Result<HeadEvaluation> {
    HeadKind::ConstantDensity.evaluate(z, grid, t)
}

pub fn eval_linear_density(z: &[f64], grid: &TimeGrid, t: f64) -> Result<HeadEvaluation> {
    HeadKind::LinearDensity.evaluate(z, grid, t)
}

pub fn eval_constant_hazard(z: &[f64], grid: &TimeGrid, t: f64) -> Result<HeadEvaluation> {
    HeadKind::ConstantHazard.evaluate(z, grid, t)
}

pub fn eval_linear_hazard(z: &[f64], grid: &TimeGrid, t: f64) -> Result<HeadEvaluation> {
    HeadKind::LinearHazard.evaluate(z, grid, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN2: f64 = core::f64::consts::LN_2;

    fn ln(x: f64) -> f64 {
        libm::log(x)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn uniform(t_max: f64, n: usize) -> TimeGrid {
        TimeGrid::uniform(t_max, n).unwrap()
    }

    #[test]
    fn output_dims() {
        assert_eq!(HeadKind::ConstantDensity.output_dim(4), 5);
        assert_eq!(HeadKind::LinearDensity.output_dim(4), 6);
        assert_eq!(HeadKind::ConstantHazard.output_dim(4), 4);
        assert_eq!(HeadKind::LinearHazard.output_dim(4), 5);
        for h in HeadKind::ALL {
            assert_eq!(h.name().parse::<HeadKind>().unwrap(), h);
        }
        assert!("piecewise".parse::<HeadKind>().is_err());
    }

    #[test]
    fn constant_density_levels() {
        let f = density_levels_constant(&[0.0, 0.0, 0.0], &uniform(2.0, 3)).unwrap();
        assert!(f.iter().all(|&v| close(v, 1.0 / 3.0, 1e-15)));

        let g = uniform(1.0, 2);
        let f = density_levels_constant(&[0.0, ln(3.0)], &g).unwrap();
        assert!(close(f[0], 0.25, 1e-15));
        let e = eval_constant_density(&[0.0, ln(3.0)], &g, 1.0).unwrap();
        assert!(close(e.survival(), 0.75, 1e-15));

        // Z = 1 + 0.5·2 + 0.5·1 = 2.5
        let g = uniform(1.0, 3);
        let z = [LN2, 0.0, 0.0];
        let f = density_levels_constant(&z, &g).unwrap();
        assert!(close(f[0], 0.8, 1e-15) && close(f[1], 0.4, 1e-15));
        let tail = eval_constant_density(&z, &g, 1.0).unwrap().survival();
        assert!(close(0.5 * f[0] + 0.5 * f[1] + tail, 1.0, 1e-15));

        assert!(matches!(
            density_levels_constant(&[0.0; 2], &uniform(2.0, 3)),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn constant_density_eval() {
        let g = uniform(2.0, 3);
        let z = [0.0; 3];
        let e = eval_constant_density(&z, &g, 0.0).unwrap();
        assert_eq!(e.log_survival, 0.0);
        assert!(close(e.density(), 1.0 / 3.0, 1e-15));
        let e = eval_constant_density(&z, &g, 2.0).unwrap();
        assert!(close(e.survival(), 1.0 / 3.0, 1e-15));
        let e = eval_constant_density(&z, &g, 1.5).unwrap();
        assert!(close(e.survival(), 0.5, 1e-15));
        assert!(close(e.density(), 1.0 / 3.0, 1e-15));
        assert!(close(e.hazard, 2.0 / 3.0, 1e-15));
        assert!(matches!(
            eval_constant_density(&z, &g, 2.5),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn linear_density_nodes() {
        let f = density_nodes_linear(&[0.0; 3], &uniform(1.0, 2)).unwrap();
        assert!(f.iter().all(|&v| close(v, 0.5, 1e-15)));
        let f = density_nodes_linear(&[0.0; 4], &uniform(2.0, 3)).unwrap();
        assert!(f.iter().all(|&v| close(v, 1.0 / 3.0, 1e-15)));

        // Z = 1 + (1/2)(3 + 1) = 3, trapezoid mass 2/3, tail 1/3
        let g = uniform(1.0, 2);
        let z = [0.0, ln(3.0), 0.0];
        let f = density_nodes_linear(&z, &g).unwrap();
        assert!(close(f[0], 1.0 / 3.0, 1e-15) && close(f[1], 1.0, 1e-15));
        assert!(close(0.5 * (f[0] + f[1]), 2.0 / 3.0, 1e-15));
        let e = eval_linear_density(&z, &g, 1.0).unwrap();
        assert!(close(e.survival(), 1.0 / 3.0, 1e-15));
        assert!(density_nodes_linear(&[0.0; 3], &uniform(2.0, 3)).is_err());
    }

    #[test]
    fn linear_density_eval() {
        let g = uniform(1.0, 2);
        let e = eval_linear_density(&[0.0; 3], &g, 0.5).unwrap();
        assert!(close(e.density(), 0.5, 1e-15));
        assert!(close(e.survival(), 0.75, 1e-15));
        let e = eval_linear_density(&[0.3, -1.2, 2.0], &g, 0.0).unwrap();
        assert_eq!(e.log_survival, 0.0);
        assert_eq!(e.survival(), 1.0);
    }

    #[test]
    fn constant_hazard_eval() {
        assert_eq!(
            hazard_levels_constant(&[0.0, 0.0], &uniform(2.0, 3)).unwrap(),
            [1.0, 1.0]
        );
        assert!(close(
            hazard_levels_constant(&[LN2], &uniform(1.0, 2)).unwrap()[0],
            2.0,
            1e-15
        ));
        let h = hazard_levels_constant(&[-1.0, 0.0, 1.0], &uniform(3.0, 4)).unwrap();
        assert!(close(h[0], (-1f64).exp(), 1e-15) && h[1] == 1.0 && close(h[2], 1f64.exp(), 1e-15));

        let e = eval_constant_hazard(&[0.0, 0.0], &uniform(2.0, 3), 1.5).unwrap();
        assert!(close(e.cumulative_hazard, 1.5, 1e-15));
        assert!(close(e.survival(), (-1.5f64).exp(), 1e-15));

        let e = eval_constant_hazard(&[LN2], &uniform(1.0, 2), 0.5).unwrap();
        assert!(close(e.cumulative_hazard, 1.0, 1e-15));
        assert!(close(e.density(), 2.0 * (-1f64).exp(), 1e-15));

        let e = eval_constant_hazard(&[0.0, ln(3.0)], &uniform(2.0, 3), 2.0).unwrap();
        assert!(close(e.cumulative_hazard, 4.0, 1e-15));
    }

    #[test]
    fn linear_hazard_eval() {
        let g = uniform(1.0, 2);
        for t in [0.0, 0.2, 0.7, 1.0] {
            let e = eval_linear_hazard(&[0.0, 0.0], &g, t).unwrap();
            assert!(close(e.hazard, 1.0, 1e-15));
            assert!(close(e.cumulative_hazard, t, 1e-15));
        }
        let z = [0.0, ln(3.0)];
        let e = eval_linear_hazard(&z, &g, 1.0).unwrap();
        assert!(close(e.cumulative_hazard, 2.0, 1e-15));
        // h(t) = 1 + 2t, H(0.5) = 0.5 + 0.25
        let e = eval_linear_hazard(&z, &g, 0.5).unwrap();
        assert!(close(e.hazard, 2.0, 1e-15));
        assert!(close(e.cumulative_hazard, 0.75, 1e-15));
    }

    #[test]
    fn rejects_non_finite_z() {
        let g = uniform(1.0, 2);
        assert!(matches!(
            HeadKind::LinearHazard.evaluate(&[0.0, f64::NAN], &g, 0.5),
            Err(Error::NonFinite(_))
        ));
    }

    fn z_for(kind: HeadKind, n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, kind.output_dim(n))
    }

    fn case() -> impl Strategy<Value = (HeadKind, TimeGrid, Vec<f64>)> {
        (
            prop::sample::select(HeadKind::ALL.to_vec()),
            1usize..8,
            0.2f64..10.0,
        )
            .prop_flat_map(|(kind, n, t_max)| {
                let grid = uniform(t_max, n + 1);
                (Just(kind), Just(grid), z_for(kind, n))
            })
    }

    proptest! {
        #[test]
        fn survival_starts_at_one_and_stays_positive((kind, grid, z) in case()) {
            let e0 = kind.evaluate(&z, &grid, 0.0).unwrap();
            prop_assert_eq!(e0.survival(), 1.0);
            let end = kind.evaluate(&z, &grid, grid.t_max()).unwrap();
            prop_assert!(end.survival() > 0.0);
        }

        #[test]
        fn survival_non_increasing((kind, grid, z) in case(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s1 = kind.evaluate(&z, &grid, lo * grid.t_max()).unwrap().log_survival;
            let s2 = kind.evaluate(&z, &grid, hi * grid.t_max()).unwrap().log_survival;
            prop_assert!(s1 >= s2 - 1e-15);
        }

        #[test]
        fn evaluation_identities((kind, grid, z) in case(), frac in 0.0f64..=1.0) {
            let e = kind.evaluate(&z, &grid, frac * grid.t_max()).unwrap();
            prop_assert!(e.log_survival <= 0.0);
            prop_assert!((e.cumulative_hazard + e.log_survival).abs() <= 1e-10);
            let f = e.density();
            prop_assert!((f - e.hazard * e.survival()).abs() <= 1e-10 * f);
        }

        #[test]
        fn continuity_at_grid_points((kind, grid, z) in case()) {
            let eps = 1e-12 * grid.t_max();
            for &p in &grid.points()[1..grid.points().len() - 1] {
                let l = kind.evaluate(&z, &grid, p - eps).unwrap();
                let r = kind.evaluate(&z, &grid, p).unwrap();
                prop_assert!((l.survival() - r.survival()).abs() <= 1e-12 * grid.t_max().max(1.0) * 10.0);
                if kind.is_linear() {
                    let (fl, fr) = match kind {
                        HeadKind::LinearDensity => (l.density(), r.density()),
                        _ => (l.hazard, r.hazard),
                    };
                    prop_assert!((fl - fr).abs() <= 1e-9 * fr.max(1.0));
                }
            }
        }

        #[test]
        fn linear_hazard_with_flat_nodes_is_constant_hazard(
            n in 1usize..8, t_max in 0.2f64..10.0, level in -3.0f64..3.0, frac in 0.0f64..=1.0
        ) {
            let grid = uniform(t_max, n + 1);
            let t = frac * t_max;
            let lin = eval_linear_hazard(&vec![level; n + 1], &grid, t).unwrap();
            let con = eval_constant_hazard(&vec![level; n], &grid, t).unwrap();
            prop_assert_eq!(lin.cumulative_hazard, con.cumulative_hazard);
            prop_assert_eq!(lin.log_survival, con.log_survival);
            prop_assert!((lin.log_density - con.log_density).abs() <= 1e-14 * con.log_density.abs().max(1.0));
        }

        #[test]
        fn linear_density_with_flat_nodes_is_constant_density(
            n in 1usize..8, t_max in 0.2f64..10.0, level in -3.0f64..3.0, tail in -3.0f64..3.0,
            frac in 0.0f64..=1.0
        ) {
            let grid = uniform(t_max, n + 1);
            let t = frac * t_max;
            let mut zl = vec![level; n + 1];
            zl.push(tail);
            let mut zc = vec![level; n];
            zc.push(tail);
            let lin = eval_linear_density(&zl, &grid, t).unwrap();
            let con = eval_constant_density(&zc, &grid, t).unwrap();
            prop_assert!((lin.survival() - con.survival()).abs() <= 1e-12);
        }
    }
}
