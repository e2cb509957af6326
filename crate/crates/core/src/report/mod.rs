//! t-SNE diagnostics, cluster-separation scores and result tables.

mod plot;
mod silhouette;
mod tables;
mod tsne;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub use plot::{render_scatter, save_png, Marker};
pub use silhouette::{silhouette, Metric};
pub use tables::{emit_report, ReportLayout, ResultTable, ABLATION_ROWS};
pub use tsne::{tsne, TsneConfig};

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::crop_or_pad;
use crate::dataset::{DatasetManifest, FeatureStore, LabelKind};
use crate::error::{Error, Result};
use crate::models::{batch_to_tensor, ModelBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Augmented,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Original => "original",
            Origin::Augmented => "augmented",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepresentationSet {
    pub representations: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub origins: Vec<Origin>,
}

impl RepresentationSet {
    pub fn len(&self) -> usize {
        self.representations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representations.is_empty()
    }

    /// Subset with the given origin.
    pub fn only(&self, origin: Origin) -> Self {
        let mut out = Self::default();
        for i in (0..self.len()).filter(|&i| self.origins[i] == origin) {
            out.representations.push(self.representations[i].clone());
            out.labels.push(self.labels[i].clone());
            out.origins.push(origin);
        }
        out
    }

    /// Class index of every row, classes in sorted order.
    pub fn label_indices(&self) -> (Vec<String>, Vec<usize>) {
        let mut classes: Vec<String> = self.labels.clone();
        classes.sort();
        classes.dedup();
        let idx = self
            .labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label present"))
            .collect();
        (classes, idx)
    }

    pub fn silhouette(&self, metric: Metric) -> Result<f64> {
        let (_, idx) = self.label_indices();
        silhouette(&self.representations, &idx, metric)
    }
}

/// Picks up to `per_class` utterances per class, crops one segment each, and
/// embeds it plus `augmentations` augmented versions with the representation learner.
pub fn collect_representations(
    manifest: &DatasetManifest,
    store: &FeatureStore,
    bundle: &ModelBundle,
    kind: LabelKind,
    per_class: usize,
    augmentations: usize,
    seed: u64,
) -> Result<RepresentationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (frames, _) = bundle.augmentor.segment_shape();
    let mut out = RepresentationSet::default();
    for (label, idx) in manifest.class_index(kind)? {
        let picked: Vec<usize> = idx.choose_multiple(&mut rng, per_class.min(idx.len())).copied().collect();
        let mut segments: Vec<Array2<f32>> = Vec::with_capacity(picked.len());
        for i in picked {
            let mel = store.get(&manifest.records[i].id)?;
            let slack = mel.frames().saturating_sub(frames);
            let offset = if slack > 0 { rng.random_range(0..=slack) } else { 0 };
            segments.push(crop_or_pad(mel.values(), offset, frames));
        }
        if segments.is_empty() {
            continue;
        }
        let x = batch_to_tensor(&segments)?;
        let mut push = |t: &candle_core::Tensor, origin: Origin| -> Result<()> {
            for row in bundle.representation.represent(t)?.to_vec2::<f32>()? {
                out.representations.push(row.into_iter().map(f64::from).collect());
                out.labels.push(label.clone());
                out.origins.push(origin);
            }
            Ok(())
        };
        push(&x, Origin::Original)?;
        for _ in 0..augmentations {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let mut eps_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let aug = bundle.augmentor.augment(&x, &mut noise_rng, &mut eps_rng)?;
            push(&aug.x_hat, Origin::Augmented)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsnePoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneSummary {
    pub points: Vec<TsnePoint>,
    /// Silhouette over the 2-D embedding (Euclidean).
    pub silhouette_2d: f64,
    /// Silhouette over the raw representations (l1).
    pub silhouette_raw: f64,
    /// Raw l1 silhouette restricted to augmented rows, when any exist.
    pub silhouette_augmented: Option<f64>,
}

impl TsneSummary {
    pub fn points_csv(&self) -> String {
        let mut out = String::from("x,y,label,origin\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.6},{:.6},{},{}", p.x, p.y, p.label, p.origin.as_str());
        }
        out
    }
}

/// Embeds `set` in 2-D and scores cluster separation. Deterministic for a seed.
pub fn compute_tsne(set: &RepresentationSet, cfg: &TsneConfig, seed: u64) -> Result<TsneSummary> {
    let (classes, idx) = set.label_indices();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    let y = tsne(&set.representations, cfg, seed)?;
    let flat: Vec<Vec<f64>> = y.iter().map(|p| p.to_vec()).collect();
    let augmented = set.only(Origin::Augmented);
    let silhouette_augmented = if augmented.label_indices().0.len() >= 2 {
        Some(augmented.silhouette(Metric::Manhattan)?)
    } else {
        None
    };
    Ok(TsneSummary {
        points: y
            .iter()
            .zip(&set.labels)
            .zip(&set.origins)
            .map(|((p, l), &o)| TsnePoint {
                x: p[0],
                y: p[1],
                label: l.clone(),
                origin: o,
            })
            .collect(),
        silhouette_2d: silhouette(&flat, &idx, Metric::Euclidean)?,
        silhouette_raw: silhouette(&set.representations, &idx, Metric::Manhattan)?,
        silhouette_augmented,
    })
}

/// Writes `tsne_points.csv`, `tsne_summary.json` and `tsne.png` into `dir`.
pub fn emit_tsne(set: &RepresentationSet, cfg: &TsneConfig, seed: u64, dir: &Path) -> Result<TsneSummary> {
    let summary = compute_tsne(set, cfg, seed)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("tsne_points.csv");
    std::fs::write(&csv, summary.points_csv()).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join("tsne_summary.json");
    let scores: BTreeMap<&str, Option<f64>> = BTreeMap::from([
        ("silhouette_2d", Some(summary.silhouette_2d)),
        ("silhouette_raw", Some(summary.silhouette_raw)),
        ("silhouette_augmented", summary.silhouette_augmented),
    ]);
    std::fs::write(&json, serde_json::to_string_pretty(&scores)?).map_err(|e| Error::io(&json, e))?;
    let (_, idx) = set.label_indices();
    let markers: Vec<Marker> = set
        .origins
        .iter()
        .map(|o| match o {
            Origin::Original => Marker::Disc,
            Origin::Augmented => Marker::Cross,
        })
        .collect();
    let pts: Vec<[f64; 2]> = summary.points.iter().map(|p| [p.x, p.y]).collect();
    save_png(&render_scatter(&pts, &idx, &markers, 800), &dir.join("tsne.png"))?;
    Ok(summary)
}
