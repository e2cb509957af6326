use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use candle_core::Tensor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::state::{CycleLosses, RngStreams, TrainConfig, TrainState};
use crate::error::{Error, Result};
use crate::models::{ModelBundle, ModelConfig, MODULES};
use crate::nn::archive::{read_archive, write_archive};
use crate::nn::Adam;

pub const CHECKPOINT_KIND: &str = "augmentation-checkpoint";
pub const MODEL_KIND: &str = "augmentor";

#[derive(Serialize, Deserialize)]
struct StateMeta {
    iteration: u64,
    train: TrainConfig,
    model: ModelConfig,
    rng: RngStreams,
    adam_steps: BTreeMap<String, u64>,
    history: VecDeque<CycleLosses>,
}

/// Hex SHA-256 of the canonical JSON of both configs.
pub fn config_fingerprint(model: &ModelConfig, train: &TrainConfig) -> Result<String> {
    let text = serde_json::to_string(&(model, train))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn optimizer<'a>(state: &'a TrainState, module: &str) -> &'a Adam {
    match module {
        crate::models::AUGMENTOR => &state.opt_augmentor,
        crate::models::DISCRIMINATOR => &state.opt_discriminator,
        _ => &state.opt_representation,
    }
}

fn optimizer_mut<'a>(state: &'a mut TrainState, module: &str) -> &'a mut Adam {
    match module {
        crate::models::AUGMENTOR => &mut state.opt_augmentor,
        crate::models::DISCRIMINATOR => &mut state.opt_discriminator,
        _ => &mut state.opt_representation,
    }
}

/// Writes parameters, optimizer moments, RNG streams and history to one file.
pub fn checkpoint_save(state: &TrainState, path: &Path) -> Result<()> {
    let mut tensors = BTreeMap::new();
    let mut adam_steps = BTreeMap::new();
    for m in MODULES {
        for (k, v) in state.bundle.module(m)?.vars() {
            tensors.insert(format!("{m}.param.{k}"), v.as_tensor().clone());
        }
        let opt = optimizer(state, m);
        for (k, t) in &opt.first {
            tensors.insert(format!("{m}.adam_m.{k}"), t.clone());
        }
        for (k, t) in &opt.second {
            tensors.insert(format!("{m}.adam_v.{k}"), t.clone());
        }
        adam_steps.insert(m.to_string(), opt.step);
    }
    let meta = StateMeta {
        iteration: state.iteration,
        train: state.config.clone(),
        model: state.bundle.config.clone(),
        rng: state.rng.clone(),
        adam_steps,
        history: state.history.clone(),
    };
    let metadata = BTreeMap::from([
        ("state".to_string(), serde_json::to_string(&meta)?),
        (
            "config_fingerprint".to_string(),
            config_fingerprint(&state.bundle.config, &state.config)?,
        ),
    ]);
    write_archive(path, CHECKPOINT_KIND, &tensors, metadata)
}

fn split_tensors(tensors: BTreeMap<String, Tensor>) -> BTreeMap<(String, String), BTreeMap<String, Tensor>> {
    let mut out: BTreeMap<(String, String), BTreeMap<String, Tensor>> = BTreeMap::new();
    for (name, t) in tensors {
        let mut parts = name.splitn(3, '.');
        if let (Some(m), Some(kind), Some(key)) = (parts.next(), parts.next(), parts.next()) {
            out.entry((m.to_string(), kind.to_string())).or_default().insert(key.to_string(), t);
        }
    }
    out
}

/// Restores a state saved by [`checkpoint_save`]; training continues exactly.
pub fn checkpoint_load(path: &Path) -> Result<TrainState> {
    let archive = read_archive(path, CHECKPOINT_KIND)?;
    let corrupt = |message: String| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        message,
    };
    let meta_text = archive.metadata.get("state").ok_or_else(|| corrupt("missing state".into()))?;
    let meta: StateMeta = serde_json::from_str(meta_text).map_err(|e| corrupt(e.to_string()))?;
    let mut state = TrainState::new(meta.model, meta.train, 0)?;
    let mut groups = split_tensors(archive.tensors);
    for m in MODULES {
        let params = groups.remove(&(m.to_string(), "param".to_string())).unwrap_or_default();
        state.bundle.module(m)?.load(&params)?;
        let first = groups.remove(&(m.to_string(), "adam_m".to_string())).unwrap_or_default();
        let second = groups.remove(&(m.to_string(), "adam_v".to_string())).unwrap_or_default();
        let opt = optimizer_mut(&mut state, m);
        opt.first = first;
        opt.second = second;
        opt.step = meta.adam_steps.get(m).copied().unwrap_or(0);
    }
    state.iteration = meta.iteration;
    state.rng = meta.rng;
    state.history = meta.history;
    Ok(state)
}

/// Saves only the augmentor parameters plus the model configuration.
pub fn save_augmentor(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let tensors = bundle
        .augmentor
        .params
        .vars()
        .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
        .collect();
    let metadata = BTreeMap::from([("model".to_string(), serde_json::to_string(&bundle.config)?)]);
    write_archive(path, MODEL_KIND, &tensors, metadata)
}

/// Loads an augmentor written by [`save_augmentor`] into a fresh bundle.
pub fn load_augmentor(path: &Path) -> Result<ModelBundle> {
    let archive = read_archive(path, MODEL_KIND)?;
    let text = archive.metadata.get("model").ok_or_else(|| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        message: "missing model config".into(),
    })?;
    let config: ModelConfig = serde_json::from_str(text)?;
    let bundle = ModelBundle::new(config, 0)?;
    bundle.augmentor.params.load(&archive.tensors)?;
    Ok(bundle)
}
