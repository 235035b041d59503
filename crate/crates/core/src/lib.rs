//! Piecewise survival models parameterized by a small neural network.
//!
//! Four model heads are provided, each defined on a time grid over `[0, t_max]`:
//! piecewise constant or linear *density*, and piecewise constant or linear *hazard*.
//! A head maps the raw network output vector `z(x)` to the density, survival,
//! hazard and cumulative hazard at any time in the grid's range, entirely in the
//! log domain, together with analytic gradients with respect to `z`.
//!
//! The crate is `no_std` (it needs `alloc`). Math goes through `libm`, so results are
//! bit-for-bit reproducible across platforms. IO, timing, the CLI and the file
//! formats live in the companion `pwsurv` crate.
//!
//! ```
//! use pwsurv_core::{grid::TimeGrid, heads::HeadKind};
//!
//! let grid = TimeGrid::uniform(2.0, 3).unwrap();
//! let z = [0.0, 0.0, 0.0];
//! let e = HeadKind::ConstantDensity.evaluate(&z, &grid, 1.5).unwrap();
//! assert!((e.survival() - 0.5).abs() < 1e-12);
//! ```
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod grid;
pub mod heads;
pub mod loss;
pub mod network;
pub mod numerics;
pub mod optim;
pub mod training;

pub use error::{Error, Result};
