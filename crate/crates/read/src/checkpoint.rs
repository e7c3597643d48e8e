//! Single-file JSON model checkpoints.
//!
//! Tensors are stored as `f64` values, which `serde_json` writes in shortest
//! round-trip form, so save followed by load is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use read_core::hierarchy::NUM_RELATIONS;
use read_core::model::{ModelConfig, ModelParams};
use read_core::LabelVocabulary;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout_io::{parse_json, read_text, write_text};

pub const FORMAT: &str = "read-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    n: usize,
    hidden: usize,
    labels: Vec<String>,
    relations: usize,
    tensors: BTreeMap<String, TensorRecord>,
}

/// A trained model together with the vocabulary that fixes its label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab: LabelVocabulary,
    pub params: ModelParams,
}

pub fn to_json(ckpt: &Checkpoint) -> Result<String> {
    let p = &ckpt.params;
    let file = CheckpointFile {
        format: FORMAT.to_string(),
        n: p.config.code_size,
        hidden: p.config.hidden,
        labels: ckpt.vocab.names().to_vec(),
        relations: NUM_RELATIONS,
        tensors: p
            .tensors()
            .into_iter()
            .map(|(name, t)| {
                (
                    name,
                    TensorRecord {
                        shape: t.shape.clone(),
                        data: t.data.clone(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string(&file).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn from_json(text: &str, path: &Path) -> Result<Checkpoint> {
    // Check the format tag before committing to the full schema.
    let head: serde_json::Value = parse_json(text, path)?;
    match head.get("format").and_then(|f| f.as_str()) {
        Some(FORMAT) => {}
        other => return Err(Error::UnsupportedFormat(other.unwrap_or("").to_string())),
    }
    let mut file: CheckpointFile = parse_json(text, path)?;
    if file.relations != NUM_RELATIONS {
        return Err(Error::Invalid(format!(
            "checkpoint has {} relations, expected {NUM_RELATIONS}",
            file.relations
        )));
    }
    let vocab = LabelVocabulary::new(&file.labels)?;
    let mut params = ModelParams::zeros(ModelConfig {
        code_size: file.n,
        hidden: file.hidden,
        num_labels: vocab.len(),
    });
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (name, slot) in names.into_iter().zip(params.tensors_mut()) {
        let rec = file
            .tensors
            .remove(&name)
            .ok_or_else(|| Error::MissingTensor(name.clone()))?;
        if rec.shape != slot.shape || rec.data.len() != slot.data.len() {
            return Err(read_core::Error::ShapeMismatch {
                name,
                expected: slot.shape.clone(),
                found: rec.shape,
            }
            .into());
        }
        slot.data = rec.data;
    }
    if let Some(extra) = file.tensors.keys().next() {
        return Err(Error::Invalid(format!("unexpected tensor {extra}")));
    }
    Ok(Checkpoint { vocab, params })
}

pub fn save_model(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &to_json(ckpt)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    from_json(&read_text(path)?, path)
}
