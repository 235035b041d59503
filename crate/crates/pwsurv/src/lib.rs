//! Std companion to `pwsurv-core`: dataset CSV files, the model file format,
//! timed training, learning-rate sweeps, replication studies, survival-curve
//! tables and the `pwsurv` command-line tool.

pub mod cli;
pub mod csv_io;
pub mod curves;
pub mod error;
pub mod harness;
pub mod model_file;

pub use error::{Error, Result};
pub use pwsurv_core as core;
