//! Model files.
//!
//! A model file is a single JSON document:
//!
//! ```text
//! { "format": "nidsgap-model", "version": 1, "model": { spec, feature_names,
//!   labels, standardizer, state, n_train } }
//! ```
//!
//! Field order is fixed by the type definitions and floats are written in
//! shortest round-trip form, so save/load/save is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TrainedModel;

pub const FORMAT: &str = "nidsgap-model";
pub const VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'static str,
    version: u32,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct OwnedEnvelope {
    format: String,
    version: u32,
    model: TrainedModel,
}

pub fn to_json(model: &TrainedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        format: FORMAT,
        version: VERSION,
        model,
    })?)
}

pub fn from_json(text: &str) -> Result<TrainedModel> {
    let env: OwnedEnvelope = serde_json::from_str(text)?;
    if env.format != FORMAT {
        return Err(Error::ModelFormat(format!("unexpected format {:?}", env.format)));
    }
    if env.version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {}", env.version)));
    }
    env.model.validate()?;
    Ok(env.model)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
