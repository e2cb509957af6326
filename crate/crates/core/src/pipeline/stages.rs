use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{require, report_layout, FoldInfo, Stage, Workspace};
use crate::audio::{compute_mel_spectrogram, load_wav_mono, normalize_mel, FeatureConfig};
use crate::classifier::{
    build_hybrid_dataset, evaluate, load_classifier, save_classifier, train_classifier, AugmentScope,
    EvaluationReport, ReportMeta, SYNTHETIC_TAG,
};
use crate::config::{ExperimentConfig, Protocol};
use crate::dataset::{
    generate_toy_dataset, load_manifest, make_session_folds, map_to_valence, save_manifest, simulate_imbalance,
    split_target_language, DatasetManifest, Emotion, FeatureStore, LabelKind, TripletSampler,
};
use crate::error::{Error, Result};
use crate::report::{collect_representations, emit_report, emit_tsne, ReportLayout};
use crate::training::{
    checkpoint_load, checkpoint_save, config_fingerprint, save_augmentor, train_until, TrainState, TrainingLog,
};

/// Features and train/test splits for every fold.
pub struct PreparedData {
    pub manifest: DatasetManifest,
    pub store: FeatureStore,
    pub folds: Vec<(FoldInfo, DatasetManifest, DatasetManifest)>,
}

fn extract_features(m: &DatasetManifest, base: &Path, fc: &FeatureConfig) -> Result<FeatureStore> {
    let mut store = FeatureStore::new();
    for r in &m.records {
        let path = base.join(&r.audio_path);
        let wave = load_wav_mono(&path, fc.sample_rate_hz)?;
        let mel = compute_mel_spectrogram(&wave, fc)?;
        store.insert(r.id.clone(), normalize_mel(&mel, None));
    }
    Ok(store)
}

fn load_corpus(path: &Path, fc: &FeatureConfig) -> Result<(DatasetManifest, FeatureStore)> {
    let m = load_manifest(path)?;
    let store = extract_features(&m, path.parent().unwrap_or(Path::new(".")), fc)?;
    Ok((m, store))
}

fn language(m: &DatasetManifest) -> Result<String> {
    m.records
        .first()
        .map(|r| r.language.clone())
        .ok_or(Error::Empty("manifest"))
}

fn fold_seed(cfg: &ExperimentConfig, fold: usize) -> u64 {
    cfg.seed.wrapping_add(fold as u64)
}

/// Loads or generates the corpus, extracts features and builds the protocol's folds.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let kind = cfg.label_kind();
    if cfg.protocol == Protocol::CrossLingual {
        let missing = || Error::Config("cross-lingual protocol requires dataset.manifest and dataset.source_manifest".into());
        let (src, mut store) = load_corpus(cfg.dataset.source_manifest.as_deref().ok_or_else(missing)?, &cfg.features)?;
        let (tgt, tgt_store) = load_corpus(cfg.dataset.manifest.as_deref().ok_or_else(missing)?, &cfg.features)?;
        store.extend(tgt_store);
        let src = map_to_valence(&src, &cfg.dataset.valence_mapping)?;
        let tgt = map_to_valence(&tgt, &cfg.dataset.valence_mapping)?;
        let (src_lang, tgt_lang) = (language(&src)?, language(&tgt)?);
        let (tgt_train, tgt_eval) =
            split_target_language(&tgt, cfg.dataset.eval_fraction, cfg.dataset.train_fraction, kind, cfg.seed)?;
        let name = format!("{}→{}", src.source_name, tgt.source_name);
        let train = DatasetManifest::concat(name.clone(), &[&src, &tgt_train])?;
        let manifest = DatasetManifest::concat(name.clone(), &[&src, &tgt])?;
        let info = FoldInfo {
            index: 0,
            name,
            source: Some(src_lang),
            target: Some(tgt_lang.clone()),
            scope: cfg.augment_scope(Some(&tgt_lang)),
        };
        return Ok(PreparedData {
            manifest,
            store,
            folds: vec![(info, train, tgt_eval)],
        });
    }
    let (manifest, store) = match cfg.protocol {
        Protocol::Toy => generate_toy_dataset(&cfg.toy, cfg.seed)?,
        _ => {
            let path = cfg
                .dataset
                .manifest
                .as_deref()
                .ok_or_else(|| Error::Config(format!("protocol {:?} requires dataset.manifest", cfg.protocol)))?;
            load_corpus(path, &cfg.features)?
        }
    };
    let protected = match kind {
        LabelKind::Emotion => Emotion::from_str(&cfg.dataset.protected_class)
            .map(|e| e.to_string())
            .unwrap_or_else(|never| match never {}),
        LabelKind::Valence => cfg.dataset.protected_class.clone(),
    };
    let mut folds = Vec::new();
    for (i, f) in make_session_folds(&manifest)?.into_iter().enumerate() {
        if cfg.dataset.max_folds.is_some_and(|n| i >= n) {
            break;
        }
        let train = simulate_imbalance(&f.train, cfg.dataset.keep_fraction, &protected, kind, fold_seed(cfg, i))?;
        let info = FoldInfo {
            index: i,
            name: f.test_session.clone(),
            source: None,
            target: None,
            scope: AugmentScope::All,
        };
        folds.push((info, train, f.test));
    }
    Ok(PreparedData { manifest, store, folds })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<PathBuf> {
    create_parent(path)?;
    save_manifest(path, m)?;
    Ok(path.to_path_buf())
}

fn write_store(dir: &Path, store: &FeatureStore) -> Result<Vec<PathBuf>> {
    store.save(dir)?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();
    Ok(files)
}

fn read_manifest(path: PathBuf, stage: Stage) -> Result<DatasetManifest> {
    load_manifest(&require(path, stage)?)
}

fn read_store(ws: &Workspace) -> Result<FeatureStore> {
    FeatureStore::load(&require(ws.features_store(), Stage::Features)?)
}

pub(super) fn features(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let data = prepare_data(&ws.config)?;
    let mut files = vec![write_manifest(&ws.features_manifest(), &data.manifest)?];
    files.extend(write_store(&ws.features_store(), &data.store)?);
    let mut infos = Vec::new();
    for (info, train, test) in &data.folds {
        files.push(write_manifest(&ws.split(info.index, "train"), train)?);
        files.push(write_manifest(&ws.split(info.index, "test"), test)?);
        infos.push(info.clone());
    }
    files.push(write(&ws.folds_index(), serde_json::to_vec_pretty(&infos)?)?);
    Ok(files)
}

pub(super) fn train_aug(ws: &Workspace, progress: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let store = read_store(ws)?;
    let mut files = Vec::new();
    for fold in ws.folds()? {
        let train = read_manifest(ws.split(fold.index, "train"), Stage::Features)?;
        let sampler = TripletSampler::new(&train, cfg.label_kind(), cfg.models.frames)?;
        for sys in ws.systems() {
            let Some(weights) = sys.weights else { continue };
            let dir = ws.aug_dir(fold.index, &sys.name);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let ckpt = dir.join("checkpoint.safetensors");
            let mut tc = cfg.train_config();
            tc.weights = weights;
            let wanted = config_fingerprint(&cfg.models, &tc)?;
            let resumed = ckpt
                .exists()
                .then(|| checkpoint_load(&ckpt).ok())
                .flatten()
                .filter(|s| config_fingerprint(&s.bundle.config, &s.config).is_ok_and(|f| f == wanted));
            let append = resumed.is_some();
            let mut state = match resumed {
                Some(s) => s,
                None => TrainState::new(cfg.models.clone(), tc, fold_seed(cfg, fold.index))?,
            };
            progress(&format!(
                "train-aug fold{} {}: cycle {}/{}",
                fold.index, sys.name, state.iteration, state.config.total_iterations
            ));
            let log_path = dir.join("log.jsonl");
            let mut log = TrainingLog::create(&log_path, append)?;
            let every = cfg.optimizer.checkpoint_every;
            train_until(&mut state, &sampler, &store, |st, losses| {
                log.record(losses)?;
                if every > 0 && st.iteration % every == 0 {
                    log.flush()?;
                    checkpoint_save(st, &ckpt)?;
                    progress(&format!(
                        "train-aug fold{} {}: cycle {}/{} total {:.4}",
                        fold.index, sys.name, st.iteration, st.config.total_iterations, losses.total
                    ));
                }
                Ok(())
            })?;
            log.flush()?;
            checkpoint_save(&state, &ckpt)?;
            let model = dir.join("augmentor.safetensors");
            save_augmentor(&state.bundle, &model)?;
            files.extend([ckpt, model, log_path]);
        }
    }
    Ok(files)
}

pub(super) fn augment(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let store = read_store(ws)?;
    let mut files = Vec::new();
    for fold in ws.folds()? {
        let train = read_manifest(ws.split(fold.index, "train"), Stage::Features)?;
        for sys in ws.systems() {
            let bundle = match sys.weights {
                Some(_) => {
                    let p = require(ws.aug_dir(fold.index, &sys.name).join("checkpoint.safetensors"), Stage::TrainAug)?;
                    Some(checkpoint_load(&p)?.bundle)
                }
                None => None,
            };
            let multiplicity = if bundle.is_some() { cfg.augment.multiplicity } else { 0 };
            let (hybrid, hybrid_store) = build_hybrid_dataset(
                &train,
                &store,
                bundle.as_ref().map(|b| &b.augmentor),
                multiplicity,
                &fold.scope,
                fold_seed(cfg, fold.index),
            )?;
            let dir = ws.hybrid_dir(fold.index, &sys.name);
            files.push(write_manifest(&dir.join("manifest.jsonl"), &hybrid)?);
            let mut synthetic = FeatureStore::new();
            for (id, mel) in hybrid_store.iter().filter(|(id, _)| id.contains(SYNTHETIC_TAG)) {
                synthetic.insert(id.clone(), mel.clone());
            }
            files.extend(write_store(&dir.join("store"), &synthetic)?);
        }
    }
    Ok(files)
}

pub(super) fn train_ser(ws: &Workspace, progress: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let base = read_store(ws)?;
    let mut files = Vec::new();
    for fold in ws.folds()? {
        for sys in ws.systems() {
            let dir = ws.hybrid_dir(fold.index, &sys.name);
            let hybrid = read_manifest(dir.join("manifest.jsonl"), Stage::Augment)?;
            let mut store = base.clone();
            store.extend(FeatureStore::load(&require(dir.join("store"), Stage::Augment)?)?);
            let trained = train_classifier(
                &hybrid,
                &store,
                &cfg.classifier.spec,
                &cfg.classifier_train_config(),
                fold_seed(cfg, fold.index),
            )?;
            progress(&format!(
                "train-ser fold{} {}: {} items, best epoch {} of {}",
                fold.index,
                sys.name,
                hybrid.len(),
                trained.best_epoch,
                trained.history.len()
            ));
            let path = ws.classifier_path(fold.index, &sys.name);
            create_parent(&path)?;
            save_classifier(&trained, &path)?;
            files.push(path);
        }
    }
    Ok(files)
}

pub(super) fn eval(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let store = read_store(ws)?;
    let mut files = Vec::new();
    for fold in ws.folds()? {
        let test = read_manifest(ws.split(fold.index, "test"), Stage::Features)?;
        for sys in ws.systems() {
            let trained = load_classifier(&require(ws.classifier_path(fold.index, &sys.name), Stage::TrainSer)?)?;
            let mut report = evaluate(&trained, &test, &store, cfg.label_kind(), cfg.classifier.segment_hop)?;
            report.meta = ReportMeta {
                fold: Some(fold.name.clone()),
                system: Some(sys.name.clone()),
                source: fold.source.clone(),
                target: fold.target.clone(),
                config_fingerprint: Some(ws.fingerprint.clone()),
            };
            files.push(write(&ws.report_path(fold.index, &sys.name, "json"), report.to_json()?)?);
            files.push(write(&ws.report_path(fold.index, &sys.name, "csv"), report.to_csv())?);
        }
    }
    Ok(files)
}

pub(super) fn tsne(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let cfg = &ws.config;
    let store = read_store(ws)?;
    let manifest = read_manifest(ws.features_manifest(), Stage::Features)?;
    let fold = ws.folds()?.first().map(|f| f.index).ok_or(Error::Empty("folds"))?;
    let mut files = Vec::new();
    for sys in ws.systems() {
        if sys.weights.is_none() {
            continue;
        }
        let ckpt = require(ws.aug_dir(fold, &sys.name).join("checkpoint.safetensors"), Stage::TrainAug)?;
        let state = checkpoint_load(&ckpt)?;
        let set = collect_representations(
            &manifest,
            &store,
            &state.bundle,
            cfg.label_kind(),
            cfg.tsne.per_class,
            cfg.tsne.augmentations,
            cfg.seed,
        )?;
        let dir = ws.tsne_dir(&sys.name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        emit_tsne(&set, &cfg.tsne.embedding, cfg.seed, &dir)?;
        for name in ["tsne_points.csv", "tsne_summary.json", "tsne.png"] {
            files.push(dir.join(name));
        }
    }
    Ok(files)
}

pub(super) fn report(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let mut reports = Vec::new();
    for fold in ws.folds()? {
        for sys in ws.systems() {
            let p = require(ws.report_path(fold.index, &sys.name, "json"), Stage::Eval)?;
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            reports.push(EvaluationReport::from_json(&text)?);
        }
    }
    let layout = report_layout(&ws.config);
    let table = emit_report(&reports, layout)?;
    let stem = match layout {
        ReportLayout::Imbalanced => "imbalanced",
        ReportLayout::Ablation => "ablation",
        ReportLayout::CrossLingual => "cross_lingual",
    };
    let dir = ws.tables_dir();
    Ok(vec![
        write(&dir.join(format!("{stem}.csv")), table.to_csv())?,
        write(&dir.join(format!("{stem}.md")), table.to_markdown())?,
    ])
}
