use criterion::{black_box, criterion_group, criterion_main, Criterion};
use emoaug_bench::{test_waveform, toy_training};
use emoaug_core::audio::{compute_mel_spectrogram, FeatureConfig};
use emoaug_core::models::{batch_to_tensor, project_l1};
use emoaug_core::training::train_step;
use ndarray::{Array2, ArrayD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mel(c: &mut Criterion) {
    let wave = test_waveform(0);
    let cfg = FeatureConfig::default();
    c.bench_function("mel_2s_utterance", |b| b.iter(|| compute_mel_spectrogram(black_box(&wave), &cfg).unwrap()));
}

fn projection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = ArrayD::from_shape_fn(vec![512, 128], |_| rng.random_range(-1.0f32..1.0));
    c.bench_function("project_l1_512x128", |b| b.iter(|| project_l1(black_box(p.view()), 0.2)));
}

fn augmentor(c: &mut Criterion) {
    let (store, _, mut state) = toy_training(2);
    let segs: Vec<Array2<f32>> = store.iter().take(8).map(|(_, m)| m.values().clone()).collect();
    let x = batch_to_tensor(&segs).unwrap();
    let aug = &state.bundle.augmentor;
    let (mut n, mut e) = (ChaCha8Rng::seed_from_u64(3), ChaCha8Rng::seed_from_u64(4));
    c.bench_function("augment_toy_batch8", |b| b.iter(|| aug.augment(black_box(&x), &mut n, &mut e).unwrap()));

    let (store, sampler, _) = toy_training(2);
    c.bench_function("phase_cycle_toy_batch8", |b| b.iter(|| train_step(&mut state, &sampler, &store).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = mel, projection, augmentor
}
criterion_main!(benches);
