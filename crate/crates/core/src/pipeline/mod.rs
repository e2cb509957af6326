//! Stage orchestration: artifact layout, per-protocol folds and systems, and
//! one entry point per stage.

mod stages;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::AugmentScope;
use crate::config::{ExperimentConfig, Protocol};
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::report::{ReportLayout, ABLATION_ROWS};

pub use stages::{prepare_data, PreparedData};

/// Environment variable that replaces `output_dir` from the config.
pub const OUTPUT_ROOT_ENV: &str = "EMOAUG_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Features,
    TrainAug,
    Augment,
    TrainSer,
    Eval,
    Tsne,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Features,
        Stage::TrainAug,
        Stage::Augment,
        Stage::TrainSer,
        Stage::Eval,
        Stage::Tsne,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Features => "features",
            Stage::TrainAug => "train-aug",
            Stage::Augment => "augment",
            Stage::TrainSer => "train-ser",
            Stage::Eval => "eval",
            Stage::Tsne => "tsne",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// A compared configuration; `weights` is `None` for the no-augmentation baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub name: String,
    pub weights: Option<LossWeights>,
}

pub const BASELINE: &str = "NoAUG";

pub fn systems(cfg: &ExperimentConfig) -> Vec<System> {
    let w = cfg.losses.weights();
    let sys = |name: &str, weights| System {
        name: name.to_string(),
        weights,
    };
    match cfg.is_ablation() {
        true => vec![
            sys(ABLATION_ROWS[0], None),
            sys(ABLATION_ROWS[1], Some(w.model_only())),
            sys(ABLATION_ROWS[2], Some(w.without_balance())),
            sys(ABLATION_ROWS[3], Some(w)),
        ],
        false => vec![sys(BASELINE, None), sys("AUG", Some(w))],
    }
}

pub fn report_layout(cfg: &ExperimentConfig) -> ReportLayout {
    match cfg.protocol {
        Protocol::CrossLingual => ReportLayout::CrossLingual,
        _ if cfg.is_ablation() => ReportLayout::Ablation,
        _ => ReportLayout::Imbalanced,
    }
}

/// One train/test split as written by the features stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub index: usize,
    /// Held-out session, or `source→target` for cross-lingual runs.
    pub name: String,
    pub source: Option<String>,
    pub target: Option<String>,
    pub scope: AugmentScope,
}

/// A validated config bound to its output root.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: ExperimentConfig,
    pub root: PathBuf,
    pub fingerprint: String,
}

impl Workspace {
    pub fn new(config: ExperimentConfig, root_override: Option<PathBuf>) -> Result<Self> {
        config.validate()?;
        let root = root_override.unwrap_or_else(|| config.output_dir.clone());
        let fingerprint = config.fingerprint()?;
        Ok(Self {
            config,
            root,
            fingerprint,
        })
    }

    /// Root from [`OUTPUT_ROOT_ENV`] when set and non-empty.
    pub fn from_env(config: ExperimentConfig) -> Result<Self> {
        let over = std::env::var_os(OUTPUT_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Self::new(config, over)
    }

    pub fn systems(&self) -> Vec<System> {
        systems(&self.config)
    }

    pub fn features_manifest(&self) -> PathBuf {
        self.root.join("features/manifest.jsonl")
    }

    pub fn features_store(&self) -> PathBuf {
        self.root.join("features/store")
    }

    pub fn folds_index(&self) -> PathBuf {
        self.root.join("splits/folds.json")
    }

    pub fn split(&self, fold: usize, part: &str) -> PathBuf {
        self.root.join(format!("splits/fold{fold}/{part}.jsonl"))
    }

    pub fn aug_dir(&self, fold: usize, system: &str) -> PathBuf {
        self.root.join(format!("aug/fold{fold}/{system}"))
    }

    pub fn hybrid_dir(&self, fold: usize, system: &str) -> PathBuf {
        self.root.join(format!("hybrid/fold{fold}/{system}"))
    }

    pub fn classifier_path(&self, fold: usize, system: &str) -> PathBuf {
        self.root.join(format!("ser/fold{fold}/{system}/classifier.safetensors"))
    }

    pub fn report_path(&self, fold: usize, system: &str, ext: &str) -> PathBuf {
        self.root.join(format!("reports/fold{fold}_{system}.{ext}"))
    }

    pub fn tsne_dir(&self, system: &str) -> PathBuf {
        self.root.join(format!("tsne/{system}"))
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.root.join("tables")
    }

    pub fn artifacts_log(&self) -> PathBuf {
        self.root.join("artifacts.jsonl")
    }

    /// Human-readable list of what `stage` would read and write.
    pub fn plan(&self, stage: Stage) -> Vec<String> {
        let cfg = &self.config;
        let mut out = vec![
            format!("stage: {stage}"),
            format!("protocol: {:?}", cfg.protocol),
            format!("output root: {}", self.root.display()),
            format!("seed: {}", cfg.seed),
            format!("config fingerprint: {}", self.fingerprint),
        ];
        let folds = self.planned_folds();
        let systems = self.systems();
        let trained: Vec<&System> = systems.iter().filter(|s| s.weights.is_some()).collect();
        let show = |p: PathBuf| format!("  write {}", p.display());
        match stage {
            Stage::Features => {
                match cfg.protocol {
                    Protocol::Toy => out.push(format!(
                        "  generate {}x{} toy utterances ({} frames x {} bands)",
                        cfg.toy.n_classes, cfg.toy.n_per_class, cfg.toy.frames, cfg.toy.n_mels
                    )),
                    _ => {
                        for p in [&cfg.dataset.source_manifest, &cfg.dataset.manifest].into_iter().flatten() {
                            out.push(format!("  read {}", p.display()));
                        }
                    }
                }
                out.push(show(self.features_manifest()));
                out.push(show(self.features_store()));
                out.push(show(self.folds_index()));
            }
            Stage::TrainAug => {
                for f in &folds {
                    for s in &trained {
                        out.push(format!(
                            "  fold{f} {}: {} cycles → {}",
                            s.name,
                            cfg.optimizer.total_iterations,
                            self.aug_dir(*f, &s.name).display()
                        ));
                    }
                }
            }
            Stage::Augment => {
                for f in &folds {
                    for s in &systems {
                        let m = if s.weights.is_some() { cfg.augment.multiplicity } else { 0 };
                        out.push(format!("  fold{f} {} x{m} → {}", s.name, self.hybrid_dir(*f, &s.name).display()));
                    }
                }
            }
            Stage::TrainSer => {
                for f in &folds {
                    for s in &systems {
                        out.push(show(self.classifier_path(*f, &s.name)));
                    }
                }
            }
            Stage::Eval => {
                for f in &folds {
                    for s in &systems {
                        out.push(show(self.report_path(*f, &s.name, "json")));
                    }
                }
            }
            Stage::Tsne => {
                for s in &trained {
                    out.push(show(self.tsne_dir(&s.name)));
                }
            }
            Stage::Report => {
                out.push(format!("  layout {:?}", report_layout(cfg)));
                out.push(show(self.tables_dir()));
            }
        }
        out
    }

    /// Fold indices from the features stage when present, otherwise an estimate.
    fn planned_folds(&self) -> Vec<usize> {
        if let Ok(folds) = self.folds() {
            return folds.iter().map(|f| f.index).collect();
        }
        let n = match self.config.protocol {
            Protocol::CrossLingual => 1,
            Protocol::Toy => self.config.toy.n_sessions,
            _ => self.config.dataset.max_folds.unwrap_or(1),
        };
        let n = self.config.dataset.max_folds.map_or(n, |m| m.min(n));
        (0..n).collect()
    }

    pub fn folds(&self) -> Result<Vec<FoldInfo>> {
        let p = require(self.folds_index(), Stage::Features)?;
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Runs one stage and appends its outputs to the artifact log.
    pub fn run(&self, stage: Stage, progress: &mut dyn FnMut(&str)) -> Result<Vec<PathBuf>> {
        let files = match stage {
            Stage::Features => stages::features(self)?,
            Stage::TrainAug => stages::train_aug(self, progress)?,
            Stage::Augment => stages::augment(self)?,
            Stage::TrainSer => stages::train_ser(self, progress)?,
            Stage::Eval => stages::eval(self)?,
            Stage::Tsne => stages::tsne(self)?,
            Stage::Report => stages::report(self)?,
        };
        self.record_artifacts(stage, &files)?;
        Ok(files)
    }

    fn record_artifacts(&self, stage: Stage, files: &[PathBuf]) -> Result<()> {
        let path = self.artifacts_log();
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        for file in files {
            let bytes = fs::read(file).map_err(|e| Error::io(file, e))?;
            let entry = ArtifactEntry {
                stage: stage.name().to_string(),
                path: file.strip_prefix(&self.root).unwrap_or(file).display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len() as u64,
                config_fingerprint: self.fingerprint.clone(),
            };
            writeln!(f, "{}", serde_json::to_string(&entry)?).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// One line of `artifacts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub stage: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    pub config_fingerprint: String,
}

pub fn read_artifacts(path: &Path) -> Result<Vec<ArtifactEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

fn require(path: PathBuf, stage: Stage) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingStage {
            stage: stage.name(),
            path,
        })
    }
}
