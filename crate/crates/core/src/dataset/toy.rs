//! Synthetic separable spectrogram corpus for desk-scale runs.
//!
//! Class `k` raises the energy of mel band-group `k` (the bands split into
//! `n_classes` contiguous groups) on a random subset of frames, over a flat
//! background with i.i.d. Gaussian noise. Values are clamped to [0, 1].

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Emotion, UtteranceRecord, Valence};
use super::store::FeatureStore;
use crate::audio::{FeatureConfig, MelSpectrogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub frames: usize,
    pub n_mels: usize,
    pub n_sessions: usize,
    pub background: f32,
    /// Elevation added to the class band-group on active frames.
    pub signal: f32,
    /// Probability that a frame carries the class elevation.
    pub activity: f64,
    pub noise_std: f32,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            n_per_class: 25,
            frames: 32,
            n_mels: 16,
            n_sessions: 5,
            background: 0.3,
            signal: 0.3,
            activity: 0.7,
            noise_std: 0.15,
        }
    }
}

impl ToyConfig {
    pub fn band_group(&self, class: usize) -> std::ops::Range<usize> {
        let g = self.n_mels / self.n_classes;
        class * g..(class + 1) * g
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            n_mels: self.n_mels,
            ..FeatureConfig::default()
        }
    }
}

/// Label of toy class `k`: Neutral, Angry, Sad, Happy for the first four, then `class{k}`.
pub fn toy_label(k: usize) -> Emotion {
    match k {
        0 => Emotion::Neutral,
        1 => Emotion::Angry,
        2 => Emotion::Sad,
        3 => Emotion::Happy,
        k => Emotion::Other(format!("class{k}")),
    }
}

pub fn generate_toy_dataset(cfg: &ToyConfig, seed: u64) -> Result<(DatasetManifest, FeatureStore)> {
    if cfg.n_classes < 2 {
        return Err(Error::TooFewClasses(cfg.n_classes));
    }
    if cfg.n_mels < cfg.n_classes || cfg.frames == 0 || cfg.n_sessions == 0 {
        return Err(Error::Config(
            "toy data needs n_mels >= n_classes, frames >= 1, n_sessions >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, cfg.noise_std.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let feature_cfg = cfg.feature_config();
    let frame_s = feature_cfg.hop_samples() as f64 / feature_cfg.sample_rate_hz as f64;

    let mut records = Vec::new();
    let mut store = FeatureStore::new();
    for j in 0..cfg.n_per_class {
        for k in 0..cfg.n_classes {
            let i = records.len();
            let group = cfg.band_group(k);
            let active: Vec<bool> = (0..cfg.frames).map(|_| rng.random_bool(cfg.activity)).collect();
            let values = Array2::from_shape_fn((cfg.frames, cfg.n_mels), |(t, m)| {
                let lift = if active[t] && group.contains(&m) { cfg.signal } else { 0.0 };
                let n = if cfg.noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (cfg.background + lift + n).clamp(0.0, 1.0)
            });
            let id = format!("toy_c{k}_{j:03}");
            let emotion = toy_label(k);
            let valence = (!emotion.is_known()).then_some(if k % 2 == 0 { Valence::Positive } else { Valence::Negative });
            records.push(UtteranceRecord {
                id: id.clone(),
                audio_path: format!("synthetic://{id}"),
                emotion: Some(emotion),
                valence,
                speaker: format!("spk{}", i % 10),
                session: format!("Ses{:02}", i % cfg.n_sessions + 1),
                language: "toy".into(),
                duration_s: cfg.frames as f64 * frame_s,
                synthetic: false,
            });
            store.insert(id, MelSpectrogram::new(values, feature_cfg.clone(), true)?);
        }
    }
    Ok((DatasetManifest::new("toy", records)?, store))
}
