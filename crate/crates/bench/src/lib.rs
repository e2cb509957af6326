//! Fixtures shared by the benchmarks.

use emoaug_core::dataset::{generate_toy_dataset, FeatureStore, LabelKind, ToyConfig, TripletSampler};
use emoaug_core::models::ModelConfig;
use emoaug_core::training::{TrainConfig, TrainState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two seconds of a chirp plus noise at 16 kHz.
pub fn test_waveform(seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..32_000)
        .map(|i| {
            let t = i as f32 / 16_000.0;
            (2.0 * std::f32::consts::PI * (200.0 + 300.0 * t) * t).sin() * 0.5 + rng.random_range(-0.05..0.05)
        })
        .collect()
}

/// Toy corpus, sampler and a fresh training state at toy scale.
pub fn toy_training(seed: u64) -> (FeatureStore, TripletSampler, TrainState) {
    let toy = ToyConfig::default();
    let (m, store) = generate_toy_dataset(&toy, seed).expect("toy data");
    let sampler = TripletSampler::new(&m, LabelKind::Emotion, toy.frames).expect("sampler");
    let tc = TrainConfig {
        batch_size: 8,
        ..TrainConfig::default()
    };
    let state = TrainState::new(ModelConfig::toy(toy.frames, toy.n_mels), tc, seed).expect("state");
    (store, sampler, state)
}
