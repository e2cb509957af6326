use std::collections::{BTreeMap, BTreeSet};

use candle_core::Tensor;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hybrid::parent_id;
use super::model::{cross_entropy, Classifier, ClassifierSpec};
use super::predict::predict_utterance;
use crate::audio::crop_or_pad;
use crate::dataset::{DatasetManifest, FeatureStore, LabelKind};
use crate::error::{Error, Result};
use crate::models::batch_to_tensor;
use crate::nn::{Adam, AdamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierTrainConfig {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub segment_hop: usize,
    pub label_kind: LabelKind,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig {
                learning_rate: 1e-4,
                ..AdamConfig::default()
            },
            max_epochs: 100,
            batch_size: 32,
            validation_fraction: 0.1,
            patience: 10,
            segment_hop: 64,
            label_kind: LabelKind::Emotion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug)]
pub struct TrainedClassifier {
    pub model: Classifier,
    /// Class names in output-index order.
    pub classes: Vec<String>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl TrainedClassifier {
    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}

/// Originals held out for validation (with their synthetic copies removed from training).
fn validation_split(m: &DatasetManifest, fraction: f64, rng: &mut impl Rng) -> BTreeSet<String> {
    let mut parents: Vec<&str> = m.records.iter().filter(|r| !r.synthetic).map(|r| r.id.as_str()).collect();
    let n_val = (fraction * parents.len() as f64).round() as usize;
    if n_val == 0 || n_val >= parents.len() {
        return BTreeSet::new();
    }
    parents.shuffle(rng);
    parents[..n_val].iter().map(|s| s.to_string()).collect()
}

/// Trains on one random crop per item per epoch; keeps the parameters of the
/// best validation epoch and stops after `patience` epochs without improvement.
pub fn train_classifier(
    manifest: &DatasetManifest,
    store: &FeatureStore,
    spec: &ClassifierSpec,
    cfg: &ClassifierTrainConfig,
    seed: u64,
) -> Result<TrainedClassifier> {
    let counts = manifest.class_counts(cfg.label_kind)?;
    if counts.len() < 2 {
        return Err(Error::TooFewClasses(counts.len()));
    }
    if cfg.batch_size == 0 || !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::Config("classifier batch_size must be ≥ 1 and validation_fraction in [0, 1)".into()));
    }
    let classes: Vec<String> = counts.keys().cloned().collect();
    let index: BTreeMap<&str, u32> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = Classifier::new(spec.clone(), classes.len(), &mut rng)?;
    let mut adam = Adam::new(cfg.adam);

    let held_out = validation_split(manifest, cfg.validation_fraction, &mut rng);
    let mut train_items = Vec::new();
    let mut val_items = Vec::new();
    for r in &manifest.records {
        let label = index[r.require_label(cfg.label_kind)?.as_str()];
        let mel = store.get(&r.id)?;
        if mel.bands() != spec.bands {
            return Err(Error::DimMismatch(spec.bands, mel.bands()));
        }
        if held_out.contains(parent_id(&r.id)) {
            if !r.synthetic {
                val_items.push((mel, label));
            }
        } else {
            train_items.push((mel, label));
        }
    }

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, BTreeMap<String, Tensor>)> = None;
    let mut order: Vec<usize> = (0..train_items.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let mut crops = Vec::with_capacity(chunk.len());
            let mut targets = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let (mel, label) = train_items[i];
                let slack = mel.frames().saturating_sub(spec.frames);
                let offset = if slack > 0 { rng.random_range(0..=slack) } else { 0 };
                crops.push(crop_or_pad(mel.values(), offset, spec.frames));
                targets.push(label);
            }
            let x = batch_to_tensor(&crops)?;
            let logits = model.logits(&x)?;
            let loss = cross_entropy(&logits, &targets)?;
            let value = loss.to_scalar::<f32>()? as f64;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss(format!("classifier epoch {epoch}")));
            }
            let pred = logits.argmax(1)?.to_vec1::<u32>()?;
            correct += pred.iter().zip(&targets).filter(|(p, t)| p == t).count();
            loss_sum += value * chunk.len() as f64;
            adam.step(&model.params, &loss.backward()?)?;
        }
        let n = train_items.len().max(1) as f64;
        let validation_accuracy = if val_items.is_empty() {
            None
        } else {
            let mut hits = 0usize;
            for (mel, label) in &val_items {
                if predict_utterance(&model, mel, cfg.segment_hop)?.label == *label as usize {
                    hits += 1;
                }
            }
            Some(hits as f64 / val_items.len() as f64)
        };
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            validation_accuracy,
        };
        history.push(stats);
        // Higher validation accuracy wins; lower training loss breaks ties.
        let score = validation_accuracy.unwrap_or(0.0) - 1e-6 * stats.train_loss.min(1e5);
        let improved = best.as_ref().is_none_or(|(s, _, _)| score > *s);
        if improved {
            let snap = model
                .params
                .vars()
                .map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?)))
                .collect::<candle_core::Result<_>>()?;
            best = Some((score, epoch, snap));
        } else if epoch - best.as_ref().map_or(0, |b| b.1) >= cfg.patience {
            break;
        }
    }
    let best_epoch = match best {
        Some((_, e, snap)) => {
            model.params.load(&snap)?;
            e
        }
        None => 0,
    };
    Ok(TrainedClassifier {
        model,
        classes,
        history,
        best_epoch,
    })
}
