//! Toy training fixtures and the freeze, resume and variance-step checks.

use std::collections::BTreeSet;

use emoaug_core::dataset::{generate_toy_dataset, DatasetManifest, FeatureStore, LabelKind, ToyConfig, TripletSampler};
use emoaug_core::losses::var_loss_batch;
use emoaug_core::models::{batch_to_tensor, ModelConfig, Snapshot, MODULES};
use emoaug_core::nn::AdamConfig;
use emoaug_core::training::{
    checkpoint_load, checkpoint_save, run_single_phase, train_step, CycleLosses, Phase, TrainConfig, TrainState,
};

pub struct Toy {
    pub manifest: DatasetManifest,
    pub state: TrainState,
    pub sampler: TripletSampler,
    pub store: FeatureStore,
}

pub fn toy(seed: u64, learning_rate: f64) -> Toy {
    let cfg = ToyConfig::default();
    let (m, store) = generate_toy_dataset(&cfg, seed).unwrap();
    let sampler = TripletSampler::new(&m, LabelKind::Emotion, cfg.frames).unwrap();
    let train = TrainConfig {
        adam: AdamConfig { learning_rate, ..AdamConfig::default() },
        batch_size: 8,
        total_iterations: 2000,
        ..TrainConfig::default()
    };
    let state = TrainState::new(ModelConfig::toy(cfg.frames, cfg.n_mels), train, seed).unwrap();
    Toy { manifest: m, state, sampler, store }
}

/// Modules with at least one parameter whose bits differ.
pub fn changed_modules(before: &Snapshot, after: &Snapshot) -> BTreeSet<String> {
    MODULES
        .iter()
        .filter(|m| {
            let (b, a) = (&before[**m], &after[**m]);
            b.iter().any(|(k, v)| v.iter().zip(&a[k]).any(|(x, y)| x.to_bits() != y.to_bits()))
        })
        .map(|m| m.to_string())
        .collect()
}

fn phase_loss(phase: Phase, l: &CycleLosses) -> f64 {
    match phase {
        Phase::Representation => l.rep,
        Phase::Discriminator => l.disc,
        Phase::Variance => l.var.abs(),
        Phase::Preservation => l.gen + l.emo + l.bal,
    }
}

/// Runs `cycles` cycles phase by phase; each phase must change exactly its
/// designated module (or nothing, when its objective is exactly zero).
pub fn freeze_contract(seed: u64, cycles: usize, learning_rate: f64) -> Result<usize, String> {
    let mut t = toy(seed, learning_rate);
    let mut checked = 0;
    for c in 0..cycles {
        let batch = t.sampler.sample(8, &t.store, t.state.data_rng()).map_err(|e| e.to_string())?;
        for phase in Phase::ALL {
            let before = t.state.bundle.snapshot().unwrap();
            let losses = run_single_phase(&mut t.state, phase, &batch).map_err(|e| e.to_string())?;
            let after = t.state.bundle.snapshot().unwrap();
            let changed = changed_modules(&before, &after);
            let designated = BTreeSet::from([phase.trained_module().to_string()]);
            let ok = if phase_loss(phase, &losses) > 0.0 { changed == designated } else { changed.is_subset(&designated) };
            if !ok {
                return Err(format!("seed {seed} cycle {c} phase {}: changed {changed:?}", phase.name()));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

pub fn history(seed: u64, learning_rate: f64, cycles: usize) -> Vec<CycleLosses> {
    let mut t = toy(seed, learning_rate);
    (0..cycles).map(|_| train_step(&mut t.state, &t.sampler, &t.store).unwrap()).collect()
}

/// Largest loss difference between a straight run and one interrupted by a checkpoint after `split` cycles.
pub fn resume_gap(seed: u64, learning_rate: f64, split: usize, total: usize, dir: &std::path::Path) -> f64 {
    let straight = history(seed, learning_rate, total);
    let mut t = toy(seed, learning_rate);
    let mut resumed: Vec<CycleLosses> =
        (0..split).map(|_| train_step(&mut t.state, &t.sampler, &t.store).unwrap()).collect();
    let path = dir.join(format!("resume_{seed}.safetensors"));
    checkpoint_save(&t.state, &path).unwrap();
    drop(t.state);
    t.state = checkpoint_load(&path).unwrap();
    resumed.extend((split..total).map(|_| train_step(&mut t.state, &t.sampler, &t.store).unwrap()));
    straight
        .iter()
        .zip(&resumed)
        .flat_map(|(a, b)| {
            [a.rep - b.rep, a.disc - b.disc, a.var - b.var, a.gen - b.gen, a.emo - b.emo, a.bal - b.bal, a.total - b.total]
        })
        .map(f64::abs)
        .fold(0.0, f64::max)
        .max(if straight.len() == resumed.len() { 0.0 } else { f64::INFINITY })
}

/// Mean change of the variance loss caused by one Phase 3 step, measured on the
/// step's own batch and (noise, ε) draws.
pub fn variance_step_change(trials: usize, learning_rate: f64) -> f64 {
    let mut total = 0.0;
    for trial in 0..trials {
        let mut t = toy(100 + trial as u64, learning_rate);
        for _ in 0..3 {
            train_step(&mut t.state, &t.sampler, &t.store).unwrap();
        }
        let batch = t.sampler.sample(8, &t.store, t.state.data_rng()).unwrap();
        let x = batch_to_tensor(&batch.anchors).unwrap();
        let streams = t.state.augmentation_streams();
        let measure = |state: &TrainState| {
            let (mut noise, mut eps) = streams.clone();
            let aug = &state.bundle.augmentor;
            let v1 = aug.augment(&x, &mut noise, &mut eps).unwrap().x_hat;
            let v2 = aug.augment(&x, &mut noise, &mut eps).unwrap().x_hat;
            let rep = &state.bundle.representation;
            let r = (rep.represent(&v1).unwrap(), rep.represent(&v2).unwrap());
            var_loss_batch(&r.0, &r.1, state.config.variance_mode).unwrap().to_scalar::<f32>().unwrap() as f64
        };
        let before = measure(&t.state);
        let reported = run_single_phase(&mut t.state, Phase::Variance, &batch).unwrap().var;
        assert!((reported - before).abs() < 1e-6, "replayed draws disagree: {reported} vs {before}");
        total += measure(&t.state) - before;
    }
    total / trials as f64
}
