//! Utterance records and JSON-lines manifests.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Angry,
    Sad,
    Neutral,
    Happy,
    Other(String),
}

impl Emotion {
    pub fn as_str(&self) -> &str {
        match self {
            Emotion::Angry => "Angry",
            Emotion::Sad => "Sad",
            Emotion::Neutral => "Neutral",
            Emotion::Happy => "Happy",
            Emotion::Other(s) => s,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Emotion::Other(_))
    }
}

impl FromStr for Emotion {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "Angry" | "angry" | "ang" => Emotion::Angry,
            "Sad" | "sad" => Emotion::Sad,
            "Neutral" | "neutral" | "neu" => Emotion::Neutral,
            "Happy" | "happy" | "hap" => Emotion::Happy,
            other => Emotion::Other(other.to_string()),
        })
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Emotion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Emotion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Valence {
    Negative,
    Positive,
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Valence::Negative => "Negative",
            Valence::Positive => "Positive",
        })
    }
}

/// Which label a protocol classifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    #[default]
    Emotion,
    Valence,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::Emotion => "emotion",
            LabelKind::Valence => "valence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<Emotion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valence: Option<Valence>,
    pub speaker: String,
    pub session: String,
    pub language: String,
    pub duration_s: f64,
    /// Set on augmented copies materialized for classifier training.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

impl UtteranceRecord {
    pub fn label(&self, kind: LabelKind) -> Option<String> {
        match kind {
            LabelKind::Emotion => self.emotion.as_ref().map(|e| e.to_string()),
            LabelKind::Valence => self.valence.map(|v| v.to_string()),
        }
    }

    pub fn require_label(&self, kind: LabelKind) -> Result<String> {
        self.label(kind).ok_or_else(|| Error::MissingLabel {
            id: self.id.clone(),
            kind: kind.name(),
        })
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if !(self.duration_s > 0.0) {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        match (&self.emotion, self.valence) {
            (None, None) => Err("record needs an emotion or a valence".into()),
            (Some(Emotion::Other(e)), None) => Err(format!("unknown emotion `{e}` without a valence")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub records: Vec<UtteranceRecord>,
    pub source_name: String,
}

impl DatasetManifest {
    pub fn new(source_name: impl Into<String>, records: Vec<UtteranceRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self {
            records,
            source_name: source_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same source, a subset or reordering of records (ids stay unique).
    pub fn derive(&self, records: Vec<UtteranceRecord>) -> Self {
        Self {
            records,
            source_name: self.source_name.clone(),
        }
    }

    /// Label → indices into `records`, classes in sorted order.
    pub fn class_index(&self, kind: LabelKind) -> Result<BTreeMap<String, Vec<usize>>> {
        let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.require_label(kind)?).or_default().push(i);
        }
        Ok(map)
    }

    pub fn class_counts(&self, kind: LabelKind) -> Result<BTreeMap<String, usize>> {
        Ok(self
            .class_index(kind)?
            .into_iter()
            .map(|(k, v)| (k, v.len()))
            .collect())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    /// Concatenates manifests; duplicate ids are rejected.
    pub fn concat(name: impl Into<String>, parts: &[&DatasetManifest]) -> Result<Self> {
        Self::new(name, parts.iter().flat_map(|m| m.records.iter().cloned()).collect())
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_manifest(&text, source_name)
}

pub fn parse_manifest(text: &str, source_name: String) -> Result<DatasetManifest> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: UtteranceRecord = serde_json::from_str(line).map_err(|e| Error::ManifestLine {
            line: line_no,
            message: e.to_string(),
        })?;
        rec.validate().map_err(|message| Error::ManifestLine { line: line_no, message })?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        records.push(rec);
    }
    Ok(DatasetManifest { records, source_name })
}

pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in &manifest.records {
        let line = serde_json::to_string(r)?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
