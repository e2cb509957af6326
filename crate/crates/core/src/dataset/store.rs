use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::audio::{container, MelSpectrogram};
use crate::error::{Error, Result};

/// Record id → spectrogram. On disk: one container file per record plus `index.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureStore {
    items: BTreeMap<String, MelSpectrogram>,
}

fn file_stem(id: &str, n: usize) -> String {
    let clean: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{n:06}_{clean}")
}

impl FeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, mel: MelSpectrogram) {
        self.items.insert(id.into(), mel);
    }

    pub fn get(&self, id: &str) -> Result<&MelSpectrogram> {
        self.items.get(id).ok_or_else(|| Error::MissingFeature(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &MelSpectrogram)> {
        self.items.iter()
    }

    pub fn extend(&mut self, other: FeatureStore) {
        self.items.extend(other.items);
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut index = BTreeMap::new();
        for (n, (id, mel)) in self.items.iter().enumerate() {
            let name = format!("{}.mel", file_stem(id, n));
            container::write(&dir.join(&name), mel)?;
            index.insert(id.clone(), name);
        }
        let p = dir.join("index.json");
        fs::write(&p, serde_json::to_vec_pretty(&index)?).map_err(|e| Error::io(&p, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join("index.json");
        let index: BTreeMap<String, String> =
            serde_json::from_slice(&fs::read(&p).map_err(|e| Error::io(&p, e))?)?;
        let mut items = BTreeMap::new();
        for (id, name) in index {
            items.insert(id, container::read(&dir.join(name))?);
        }
        Ok(Self { items })
    }
}
