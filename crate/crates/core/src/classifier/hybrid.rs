use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, FeatureStore, UtteranceRecord};
use crate::error::{Error, Result};
use crate::models::Augmentor;

/// Which originals receive augmented copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AugmentScope {
    #[default]
    All,
    Language(String),
    Ids(Vec<String>),
}

impl AugmentScope {
    pub fn contains(&self, r: &UtteranceRecord) -> bool {
        match self {
            AugmentScope::All => true,
            AugmentScope::Language(l) => &r.language == l,
            AugmentScope::Ids(ids) => ids.iter().any(|i| i == &r.id),
        }
    }
}

pub const SYNTHETIC_TAG: &str = "#aug";

pub fn synthetic_id(parent: &str, copy: usize) -> String {
    format!("{parent}{SYNTHETIC_TAG}{copy}")
}

/// The original an item was derived from (itself when not synthetic).
pub fn parent_id(id: &str) -> &str {
    id.split_once(SYNTHETIC_TAG).map_or(id, |(p, _)| p)
}

/// Originals plus `multiplicity` augmented copies of every in-scope original.
/// Copies inherit labels, get fresh noise and ε, and are flagged synthetic.
pub fn build_hybrid_dataset(
    train: &DatasetManifest,
    store: &FeatureStore,
    augmentor: Option<&Augmentor>,
    multiplicity: usize,
    scope: &AugmentScope,
    seed: u64,
) -> Result<(DatasetManifest, FeatureStore)> {
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let mut records = Vec::with_capacity(train.len() * (multiplicity + 1));
    let mut out = FeatureStore::new();
    for r in &train.records {
        let mel = store.get(&r.id)?;
        records.push(r.clone());
        out.insert(r.id.clone(), mel.clone());
        if multiplicity == 0 || !scope.contains(r) {
            continue;
        }
        let aug = augmentor.ok_or_else(|| Error::Config("augmentation requested without a trained augmentor".into()))?;
        for j in 0..multiplicity {
            let id = synthetic_id(&r.id, j);
            let mut copy = r.clone();
            copy.id = id.clone();
            copy.synthetic = true;
            out.insert(id, aug.augment_utterance(mel, &mut noise_rng, &mut eps_rng)?);
            records.push(copy);
        }
    }
    let name = format!("{}+aug{multiplicity}", train.source_name);
    Ok((DatasetManifest::new(name, records)?, out))
}
