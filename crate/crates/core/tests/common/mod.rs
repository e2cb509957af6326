//! Randomized manifests and dataset property checks shared by the test targets.
#![allow(dead_code)]

pub mod oracles;
pub mod train;
pub mod uar;

use std::collections::{BTreeMap, BTreeSet};

use emoaug_core::audio::{FeatureConfig, MelSpectrogram};
use emoaug_core::dataset::{
    downsampled_count, make_session_folds, simulate_imbalance, split_target_language, DatasetManifest, Emotion,
    FeatureStore, LabelKind, TripletSampler, UtteranceRecord, Valence,
};
use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EMOTIONS: [&str; 5] = ["Angry", "Sad", "Neutral", "Happy", "Fear"];

/// (emotion index, session index) per record.
pub fn manifest_strategy(max_records: usize) -> impl Strategy<Value = DatasetManifest> {
    (2usize..=5, 1usize..=6)
        .prop_flat_map(move |(n_classes, n_sessions)| {
            prop::collection::vec((0..n_classes, 0..n_sessions), 1..=max_records)
        })
        .prop_map(|rows| build_manifest(&rows))
}

pub fn build_manifest(rows: &[(usize, usize)]) -> DatasetManifest {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, &(c, s))| {
            let emotion: Emotion = EMOTIONS[c].parse().unwrap();
            let valence = if c % 2 == 0 { Valence::Positive } else { Valence::Negative };
            UtteranceRecord {
                id: format!("utt{i:04}"),
                audio_path: format!("utt{i:04}.wav"),
                emotion: Some(emotion),
                valence: Some(valence),
                speaker: format!("spk{}", i % 7),
                session: format!("Ses{s:02}"),
                language: "en".into(),
                duration_s: 1.0 + (i % 5) as f64,
                synthetic: false,
            }
        })
        .collect();
    DatasetManifest::new("random", records).unwrap()
}

/// Tiny distinct spectrogram per record.
pub fn tiny_store(m: &DatasetManifest, frames: usize) -> FeatureStore {
    let mut store = FeatureStore::new();
    for (i, r) in m.records.iter().enumerate() {
        let v = Array2::from_shape_fn((frames + i % 3, 4), |(t, f)| ((i * 31 + t * 7 + f) % 97) as f32 / 96.0);
        store.insert(r.id.clone(), MelSpectrogram::new(v, FeatureConfig { n_mels: 4, ..FeatureConfig::default() }, true).unwrap());
    }
    store
}

fn ids(m: &DatasetManifest) -> Vec<String> {
    m.records.iter().map(|r| r.id.clone()).collect()
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Protected class untouched, others at max(1, round(k·n)), subset of the input, deterministic.
pub fn check_imbalance(m: &DatasetManifest, keep: f64, protected_idx: usize, seed: u64) -> Result<(), TestCaseError> {
    let counts = m.class_counts(LabelKind::Emotion).unwrap();
    let protected = EMOTIONS[protected_idx];
    let out = simulate_imbalance(m, keep, protected, LabelKind::Emotion, seed);
    if !counts.contains_key(protected) {
        prop_assert!(out.is_err(), "absent protected class accepted");
        return Ok(());
    }
    let out = out.map_err(|e| fail(e.to_string()))?;
    let after = out.class_counts(LabelKind::Emotion).unwrap();
    for (c, &n) in &counts {
        let want = if c == protected { n } else { downsampled_count(n, keep) };
        prop_assert_eq!(after.get(c).copied().unwrap_or(0), want, "class {}", c);
    }
    let protected_before: BTreeSet<String> =
        m.records.iter().filter(|r| r.label(LabelKind::Emotion).as_deref() == Some(protected)).map(|r| r.id.clone()).collect();
    let protected_after: BTreeSet<String> =
        out.records.iter().filter(|r| r.label(LabelKind::Emotion).as_deref() == Some(protected)).map(|r| r.id.clone()).collect();
    prop_assert_eq!(protected_before, protected_after);
    let all: BTreeSet<String> = ids(m).into_iter().collect();
    prop_assert!(ids(&out).iter().all(|i| all.contains(i)));
    let again = simulate_imbalance(m, keep, protected, LabelKind::Emotion, seed).unwrap();
    prop_assert_eq!(ids(&out), ids(&again));
    Ok(())
}

/// One fold per session; test sets disjoint, exhaustive, single-session; train is the complement.
pub fn check_folds(m: &DatasetManifest) -> Result<(), TestCaseError> {
    let sessions: BTreeSet<&str> = m.records.iter().map(|r| r.session.as_str()).collect();
    let folds = make_session_folds(m);
    if sessions.len() < 2 {
        prop_assert!(folds.is_err());
        return Ok(());
    }
    let folds = folds.map_err(|e| fail(e.to_string()))?;
    prop_assert_eq!(folds.len(), sessions.len());
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for f in &folds {
        prop_assert!(f.test.records.iter().all(|r| r.session == f.test_session));
        prop_assert!(f.train.records.iter().all(|r| r.session != f.test_session));
        prop_assert_eq!(f.train.len() + f.test.len(), m.len());
        for r in &f.test.records {
            *seen.entry(r.id.clone()).or_default() += 1;
        }
    }
    prop_assert_eq!(seen.len(), m.len());
    prop_assert!(seen.values().all(|&n| n == 1));
    Ok(())
}

/// Disjoint, correctly sized, stratified within ±1 per class, deterministic.
pub fn check_target_split(m: &DatasetManifest, eval: f64, train: f64, seed: u64) -> Result<(), TestCaseError> {
    let kind = LabelKind::Valence;
    let (tr, ev) = split_target_language(m, eval, train, kind, seed).map_err(|e| fail(e.to_string()))?;
    let n = m.len() as f64;
    prop_assert_eq!(ev.len(), (eval * n).round() as usize);
    prop_assert_eq!(tr.len(), ((train * n).round() as usize).min(m.len() - ev.len()));
    let a: BTreeSet<String> = ids(&tr).into_iter().collect();
    prop_assert!(ids(&ev).iter().all(|i| !a.contains(i)));
    let counts = m.class_counts(kind).unwrap();
    for (part, frac, size) in [(&ev, eval, ev.len()), (&tr, train, tr.len())] {
        let got = part.class_counts(kind).unwrap_or_default();
        let _ = frac;
        for (c, &total) in &counts {
            let ideal = size as f64 * total as f64 / n;
            let have = got.get(c).copied().unwrap_or(0) as f64;
            prop_assert!((have - ideal).abs() <= 1.0 + 1e-9, "class {} has {} vs ideal {:.2}", c, have, ideal);
        }
    }
    let (tr2, ev2) = split_target_language(m, eval, train, kind, seed).unwrap();
    prop_assert_eq!(ids(&tr), ids(&tr2));
    prop_assert_eq!(ids(&ev), ids(&ev2));
    Ok(())
}

/// label(A) == label(P) != label(N), A ≠ P as records, ids consistent with labels.
pub fn check_triplets(m: &DatasetManifest, batch: usize, seed: u64) -> Result<(), TestCaseError> {
    let counts = m.class_counts(LabelKind::Emotion).unwrap();
    let sampler = TripletSampler::new(m, LabelKind::Emotion, 6);
    let feasible = counts.len() >= 2 && counts.values().any(|&n| n >= 2);
    let store = tiny_store(m, 6);
    let batch_result = sampler.and_then(|s| s.sample(batch, &store, &mut ChaCha8Rng::seed_from_u64(seed)));
    if !feasible {
        prop_assert!(batch_result.is_err(), "infeasible manifest accepted");
        return Ok(());
    }
    let b = batch_result.map_err(|e| fail(e.to_string()))?;
    let label_of: BTreeMap<&str, String> =
        m.records.iter().map(|r| (r.id.as_str(), r.label(LabelKind::Emotion).unwrap())).collect();
    prop_assert_eq!(b.len(), batch);
    for i in 0..b.len() {
        let (a, p, n) = (&b.anchor_ids[i], &b.positive_ids[i], &b.negative_ids[i]);
        prop_assert_ne!(a, p);
        prop_assert_eq!(&label_of[a.as_str()], &b.labels[i]);
        prop_assert_eq!(&label_of[p.as_str()], &b.labels[i]);
        prop_assert_eq!(&label_of[n.as_str()], &b.negative_labels[i]);
        prop_assert_ne!(&b.labels[i], &b.negative_labels[i]);
        prop_assert_eq!(b.anchors[i].dim(), (6, 4));
    }
    let again = TripletSampler::new(m, LabelKind::Emotion, 6)
        .unwrap()
        .sample(batch, &store, &mut ChaCha8Rng::seed_from_u64(seed))
        .unwrap();
    prop_assert_eq!(&b, &again);
    Ok(())
}

/// Runs `check` on `cases` generated inputs; `Err` carries the minimal failing input.
pub fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    match runner.run(&strategy, check) {
        Ok(()) => Ok(cases),
        Err(TestError::Fail(why, input)) => Err(format!("{why} for {input:?}")),
        Err(TestError::Abort(why)) => Err(format!("aborted: {why}")),
    }
}

pub fn imbalance_property(cases: u32) -> Result<u32, String> {
    run_property(cases, (manifest_strategy(80), 0.05f64..=1.0, 0usize..5, any::<u64>()), |(m, k, p, s)| {
        check_imbalance(&m, k, p, s)
    })
}

pub fn folds_property(cases: u32) -> Result<u32, String> {
    run_property(cases, manifest_strategy(80), |m| check_folds(&m))
}

pub fn target_split_property(cases: u32) -> Result<u32, String> {
    let fractions = (0.0f64..=0.6).prop_flat_map(|e| (Just(e), 0.0f64..=(1.0 - e)));
    run_property(cases, (manifest_strategy(80), fractions, any::<u64>()), |(m, (e, t), s)| {
        check_target_split(&m, e, t, s)
    })
}

pub fn triplet_property(cases: u32) -> Result<u32, String> {
    run_property(cases, (manifest_strategy(40), 1usize..=12, any::<u64>()), |(m, b, s)| {
        check_triplets(&m, b, s)
    })
}

/// Worst excess of ‖X̂ − X‖₁ over ε·numel, per element, across `pairs` random (X, ε).
pub fn budget_excess(pairs: usize, seed: u64) -> f64 {
    use emoaug_core::models::{mel_to_tensor, ModelBundle, ModelConfig};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut bundle = ModelBundle::new(ModelConfig::toy(32, 16), seed).unwrap();
    for i in 0..pairs {
        if i % 100 == 0 {
            bundle = ModelBundle::new(ModelConfig::toy(32, 16), seed.wrapping_add(i as u64)).unwrap();
        }
        let x = Array2::from_shape_fn((32, 16), |_| rand::Rng::random_range(&mut rng, 0.0f32..=1.0));
        let xt = mel_to_tensor(&x).unwrap();
        let noise = bundle.augmentor.sample_noise(1, &mut rng).unwrap();
        let eps = rand::Rng::random_range(&mut rng, 0.01f32..0.5);
        let out = bundle.augmentor.augment_with(&xt, &noise, &[eps]).unwrap();
        let l1 = (&out.x_hat - &xt).unwrap().abs().unwrap().sum_all().unwrap().to_scalar::<f32>().unwrap() as f64;
        let numel = x.len() as f64;
        worst = worst.max(l1 / numel - eps as f64);
    }
    worst
}

/// Worst relative error of ‖project_l1(P, ε)‖₁ against ε·numel over random P.
pub fn projection_error(trials: usize, seed: u64) -> f64 {
    use emoaug_core::models::project_l1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    for _ in 0..trials {
        let (r, c) = (rand::Rng::random_range(&mut rng, 1..40), rand::Rng::random_range(&mut rng, 1..40));
        let scale = 10f32.powf(rand::Rng::random_range(&mut rng, -3.0..3.0));
        let p = Array2::from_shape_fn((r, c), |_| rand::Rng::random_range(&mut rng, -scale..scale)).into_dyn();
        let eps = rand::Rng::random_range(&mut rng, 0.001f64..1.0);
        let d = project_l1(p.view(), eps);
        let target = eps * p.len() as f64;
        let got: f64 = d.iter().map(|v| v.abs() as f64).sum();
        worst = worst.max((got - target).abs() / target);
    }
    worst
}
