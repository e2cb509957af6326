//! Experiment configuration: one TOML file with a section per module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::FeatureConfig;
use crate::classifier::{AugmentScope, ClassifierSpec, ClassifierTrainConfig};
use crate::dataset::{LabelKind, ToyConfig, ValenceMapping};
use crate::error::{Error, Result};
use crate::losses::{LossWeights, VarianceMode};
use crate::models::ModelConfig;
use crate::nn::AdamConfig;
use crate::report::TsneConfig;
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Imbalanced,
    CrossLingual,
    Ablation,
    Toy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Main corpus; the target language under the cross-lingual protocol.
    pub manifest: Option<PathBuf>,
    /// Source-language corpus for the cross-lingual protocol.
    pub source_manifest: Option<PathBuf>,
    pub label_kind: LabelKind,
    pub keep_fraction: f64,
    pub protected_class: String,
    pub eval_fraction: f64,
    pub train_fraction: f64,
    pub valence_mapping: ValenceMapping,
    /// Evaluate only the first N session folds (all when absent).
    pub max_folds: Option<usize>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            manifest: None,
            source_manifest: None,
            label_kind: LabelKind::Emotion,
            keep_fraction: 0.2,
            protected_class: "Neutral".into(),
            eval_fraction: 0.25,
            train_fraction: 0.1,
            valence_mapping: ValenceMapping::default(),
            max_folds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    pub w_g: f64,
    pub w_r: f64,
    pub w_e: f64,
    pub w_v: f64,
    pub w_b: f64,
    pub beta: f64,
    pub variance_mode: VarianceMode,
}

impl Default for LossSection {
    fn default() -> Self {
        let w = LossWeights::default();
        Self {
            w_g: w.w_g,
            w_r: w.w_r,
            w_e: w.w_e,
            w_v: w.w_v,
            w_b: w.w_b,
            beta: w.beta,
            variance_mode: VarianceMode::default(),
        }
    }
}

impl LossSection {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            w_g: self.w_g,
            w_r: self.w_r,
            w_e: self.w_e,
            w_v: self.w_v,
            w_b: self.w_b,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub total_iterations: u64,
    pub batch_size: usize,
    /// Checkpoint every N cycles (0 = only at the end).
    pub checkpoint_every: u64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let a = AdamConfig::default();
        let t = TrainConfig::default();
        Self {
            learning_rate: a.learning_rate,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            total_iterations: t.total_iterations,
            batch_size: t.batch_size,
            checkpoint_every: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub spec: ClassifierSpec,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub segment_hop: usize,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let t = ClassifierTrainConfig::default();
        Self {
            spec: ClassifierSpec::default(),
            learning_rate: t.adam.learning_rate,
            max_epochs: t.max_epochs,
            batch_size: t.batch_size,
            validation_fraction: t.validation_fraction,
            patience: t.patience,
            segment_hop: t.segment_hop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScopeKind {
    #[default]
    All,
    /// Only records of the target-language corpus.
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSection {
    pub multiplicity: usize,
    pub scope: ScopeKind,
    /// Train the loss-ablation systems instead of a single augmentor
    /// (always on under the ablation protocol).
    pub ablation: bool,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            multiplicity: 4,
            scope: ScopeKind::All,
            ablation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsneSection {
    pub embedding: TsneConfig,
    pub per_class: usize,
    pub augmentations: usize,
}

impl Default for TsneSection {
    fn default() -> Self {
        Self {
            embedding: TsneConfig::default(),
            per_class: 30,
            augmentations: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub models: ModelConfig,
    #[serde(default)]
    pub losses: LossSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub tsne: TsneSection,
}

impl ExperimentConfig {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        for p in [&mut cfg.dataset.manifest, &mut cfg.dataset.source_manifest].into_iter().flatten() {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.models.validate()?;
        self.losses.weights().validate()?;
        self.classifier.spec.validate()?;
        if self.models.n_mels != self.classifier.spec.bands {
            return Err(Error::Config(format!(
                "classifier.spec.bands ({}) must equal models.n_mels ({})",
                self.classifier.spec.bands, self.models.n_mels
            )));
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config("optimizer.learning_rate must be > 0".into()));
        }
        if self.optimizer.total_iterations == 0 || self.optimizer.batch_size == 0 {
            return Err(Error::Config("optimizer.total_iterations and optimizer.batch_size must be ≥ 1".into()));
        }
        if !(self.dataset.keep_fraction > 0.0 && self.dataset.keep_fraction <= 1.0) {
            return Err(Error::Config("dataset.keep_fraction must be in (0, 1]".into()));
        }
        let require = |key: &str, p: &Option<PathBuf>| -> Result<()> {
            match p {
                None => Err(Error::Config(format!("protocol {:?} requires `{key}`", self.protocol))),
                Some(p) if !p.exists() => Err(Error::Config(format!("`{key}` path does not exist: {}", p.display()))),
                Some(_) => Ok(()),
            }
        };
        match self.protocol {
            Protocol::Toy => {
                if self.toy.n_mels != self.models.n_mels || self.toy.frames < self.models.frames {
                    return Err(Error::Config(
                        "toy.n_mels must equal models.n_mels and toy.frames must be ≥ models.frames".into(),
                    ));
                }
            }
            Protocol::Imbalanced | Protocol::Ablation => require("dataset.manifest", &self.dataset.manifest)?,
            Protocol::CrossLingual => {
                require("dataset.manifest", &self.dataset.manifest)?;
                require("dataset.source_manifest", &self.dataset.source_manifest)?;
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn label_kind(&self) -> LabelKind {
        match self.protocol {
            Protocol::CrossLingual => LabelKind::Valence,
            _ => self.dataset.label_kind,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let o = &self.optimizer;
        TrainConfig {
            adam: AdamConfig {
                learning_rate: o.learning_rate,
                beta1: o.beta1,
                beta2: o.beta2,
                eps: o.eps,
            },
            total_iterations: o.total_iterations,
            batch_size: o.batch_size,
            weights: self.losses.weights(),
            variance_mode: self.losses.variance_mode,
            label_kind: self.label_kind(),
            ..TrainConfig::default()
        }
    }

    pub fn classifier_train_config(&self) -> ClassifierTrainConfig {
        let c = &self.classifier;
        ClassifierTrainConfig {
            adam: AdamConfig {
                learning_rate: c.learning_rate,
                ..AdamConfig::default()
            },
            max_epochs: c.max_epochs,
            batch_size: c.batch_size,
            validation_fraction: c.validation_fraction,
            patience: c.patience,
            segment_hop: c.segment_hop,
            label_kind: self.label_kind(),
        }
    }

    pub fn is_ablation(&self) -> bool {
        self.protocol == Protocol::Ablation || self.augment.ablation
    }

    pub fn augment_scope(&self, target_language: Option<&str>) -> AugmentScope {
        match (self.augment.scope, target_language) {
            (ScopeKind::Target, Some(l)) => AugmentScope::Language(l.to_string()),
            _ => AugmentScope::All,
        }
    }
}
