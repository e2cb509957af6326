//! Segment classifier, hybrid original/augmented training sets, utterance voting and UAR.

mod hybrid;
mod model;
mod predict;
mod train;
mod uar;

use std::collections::BTreeMap;
use std::path::Path;

pub use hybrid::{build_hybrid_dataset, parent_id, synthetic_id, AugmentScope, SYNTHETIC_TAG};
pub use model::{cross_entropy, Classifier, ClassifierSpec};
pub use predict::{majority_vote, predict_utterance, UtterancePrediction};
pub use train::{train_classifier, ClassifierTrainConfig, EpochStats, TrainedClassifier};
pub use uar::{compute_uar, compute_uar_with_classes, EvaluationReport, ReportMeta};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DatasetManifest, FeatureStore, LabelKind};
use crate::error::{Error, Result};
use crate::nn::archive::{read_archive, write_archive};

pub const CLASSIFIER_KIND: &str = "classifier";

/// Predicts every record of `manifest` and scores against its labels.
pub fn evaluate(
    trained: &TrainedClassifier,
    manifest: &DatasetManifest,
    store: &FeatureStore,
    kind: LabelKind,
    hop: usize,
) -> Result<EvaluationReport> {
    let mut pairs = Vec::with_capacity(manifest.len());
    for r in &manifest.records {
        let reference = r.require_label(kind)?;
        let p = predict_utterance(&trained.model, store.get(&r.id)?, hop)?;
        pairs.push((reference, trained.classes[p.label].clone()));
    }
    compute_uar(&pairs)
}

pub fn save_classifier(trained: &TrainedClassifier, path: &Path) -> Result<()> {
    let tensors = trained
        .model
        .params
        .vars()
        .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
        .collect();
    let metadata = BTreeMap::from([
        ("spec".to_string(), serde_json::to_string(&trained.model.spec)?),
        ("classes".to_string(), serde_json::to_string(&trained.classes)?),
        ("history".to_string(), serde_json::to_string(&trained.history)?),
        ("best_epoch".to_string(), trained.best_epoch.to_string()),
    ]);
    write_archive(path, CLASSIFIER_KIND, &tensors, metadata)
}

pub fn load_classifier(path: &Path) -> Result<TrainedClassifier> {
    let archive = read_archive(path, CLASSIFIER_KIND)?;
    let field = |k: &str| {
        archive.metadata.get(k).ok_or_else(|| Error::CorruptCheckpoint {
            path: path.to_path_buf(),
            message: format!("missing `{k}`"),
        })
    };
    let spec: ClassifierSpec = serde_json::from_str(field("spec")?)?;
    let classes: Vec<String> = serde_json::from_str(field("classes")?)?;
    let history: Vec<EpochStats> = serde_json::from_str(field("history")?)?;
    let best_epoch = field("best_epoch")?.parse().unwrap_or(0);
    let model = Classifier::new(spec, classes.len(), &mut ChaCha8Rng::seed_from_u64(0))?;
    model.params.load(&archive.tensors)?;
    Ok(TrainedClassifier {
        model,
        classes,
        history,
        best_epoch,
    })
}
