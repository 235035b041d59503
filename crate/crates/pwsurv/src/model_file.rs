//! Trained-model files.
//!
//! A model file is pretty-printed JSON with these top-level keys:
//!
//! - `format`: always `"pwsurv-model"`; `version`: [`FORMAT_VERSION`].
//! - `head`: `constant-density`, `linear-density`, `constant-hazard` or `linear-hazard`.
//! - `grid`: every grid point `[0, τ_1, …, t_max]`.
//! - `network_config`: `input_dim`, `hidden_layers`, `output_dim`, `activation`, `seed`.
//! - `initialization`: `"uniform-fan-in"` (weights `U(±1/√fan_in)`, zero biases).
//! - `network`: `activation` and `layers`, each with its shape (`inputs`, `outputs`),
//!   `weights` as a flat row-major `outputs × inputs` array, then `bias`.
//! - `standardizer`: `null` or per-feature `mean` / `sd` applied to covariates.
//! - `history`: one `{epoch, train_loss, val_loss}` per epoch.
//! - `best_epoch`, `best_val_loss`, `training_seconds`, and the `config` snapshot.
//!
//! Floats are written in shortest round-trip form, so loading restores the exact
//! parameters.

use std::fs;
use std::path::Path;

use pwsurv_core::training::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "pwsurv-model";
pub const FORMAT_VERSION: u32 = 1;
pub const INITIALIZATION: &str = "uniform-fan-in";

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    initialization: String,
    #[serde(flatten)]
    model: TrainedModel,
}

pub fn to_string(model: &TrainedModel) -> Result<String> {
    let env = Envelope {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        initialization: INITIALIZATION.into(),
        model: model.clone(),
    };
    let mut s = serde_json::to_string_pretty(&env)
        .map_err(|e| Error::Argument(format!("cannot serialize model: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn save(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(path, &text)
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn from_str(path: &Path, text: &str) -> Result<TrainedModel> {
    let env: Envelope = serde_json::from_str(text)
        .map_err(|e| format_err(path, format!("invalid model file: {e}")))?;
    if env.format != FORMAT_NAME {
        return Err(format_err(path, format!("unknown format '{}'", env.format)));
    }
    if env.version != FORMAT_VERSION {
        return Err(format_err(
            path,
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                env.version
            ),
        ));
    }
    let m = env.model;
    let expected = m.head.output_dim(m.grid.segments());
    if m.network.layers.is_empty() {
        return Err(format_err(path, "network has no layers"));
    }
    if m.network.output_dim() != expected || m.network_config.output_dim != expected {
        return Err(format_err(
            path,
            format!(
                "{} on {} segments needs {expected} outputs, network has {}",
                m.head,
                m.grid.segments(),
                m.network.output_dim()
            ),
        ));
    }
    let mut prev = m.network.input_dim();
    for (i, l) in m.network.layers.iter().enumerate() {
        if l.inputs != prev || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs
        {
            return Err(format_err(
                path,
                format!("layer {i} shape does not match its arrays"),
            ));
        }
        prev = l.outputs;
    }
    if let Some(s) = &m.standardizer {
        if s.mean.len() != m.network.input_dim() || s.sd.len() != s.mean.len() {
            return Err(format_err(
                path,
                "standardizer size does not match the input dimension",
            ));
        }
    }
    Ok(m)
}
