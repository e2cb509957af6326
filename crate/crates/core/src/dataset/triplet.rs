//! Uniform random triplet mining.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, LabelKind};
use super::store::FeatureStore;
use crate::audio::crop_or_pad;
use crate::error::{Error, Result};

/// Aligned anchor/positive/negative segments, each `frames × bands`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletBatch {
    pub anchors: Vec<Array2<f32>>,
    pub positives: Vec<Array2<f32>>,
    pub negatives: Vec<Array2<f32>>,
    pub labels: Vec<String>,
    pub negative_labels: Vec<String>,
    pub anchor_ids: Vec<String>,
    pub positive_ids: Vec<String>,
    pub negative_ids: Vec<String>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Precomputed class structure for repeated sampling from one manifest.
#[derive(Debug, Clone)]
pub struct TripletSampler {
    ids: Vec<String>,
    labels: Vec<String>,
    /// class → record indices
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    /// records whose class has at least two members
    anchor_pool: Vec<usize>,
    frames: usize,
}

impl TripletSampler {
    pub fn new(m: &DatasetManifest, kind: LabelKind, frames: usize) -> Result<Self> {
        let index = m.class_index(kind)?;
        if index.len() < 2 {
            return Err(Error::TripletSampling(format!(
                "need at least two classes, found {}",
                index.len()
            )));
        }
        let mut class_of = vec![0; m.len()];
        let mut labels = vec![String::new(); m.len()];
        let mut classes = Vec::new();
        for (c, (label, idx)) in index.into_iter().enumerate() {
            for &i in &idx {
                class_of[i] = c;
                labels[i] = label.clone();
            }
            classes.push(idx);
        }
        let anchor_pool: Vec<usize> = (0..m.len()).filter(|&i| classes[class_of[i]].len() >= 2).collect();
        if anchor_pool.is_empty() {
            return Err(Error::TripletSampling("no class has two or more records".into()));
        }
        Ok(Self {
            ids: m.records.iter().map(|r| r.id.clone()).collect(),
            labels,
            classes,
            class_of,
            anchor_pool,
            frames,
        })
    }

    fn segment(&self, store: &FeatureStore, i: usize, rng: &mut impl Rng) -> Result<Array2<f32>> {
        let mel = store.get(&self.ids[i])?;
        let t = mel.frames();
        let offset = if t > self.frames { rng.random_range(0..=t - self.frames) } else { 0 };
        Ok(crop_or_pad(mel.values(), offset, self.frames))
    }

    pub fn sample(&self, batch_size: usize, store: &FeatureStore, rng: &mut impl Rng) -> Result<TripletBatch> {
        let mut b = TripletBatch {
            anchors: Vec::with_capacity(batch_size),
            positives: Vec::with_capacity(batch_size),
            negatives: Vec::with_capacity(batch_size),
            labels: Vec::with_capacity(batch_size),
            negative_labels: Vec::with_capacity(batch_size),
            anchor_ids: Vec::with_capacity(batch_size),
            positive_ids: Vec::with_capacity(batch_size),
            negative_ids: Vec::with_capacity(batch_size),
        };
        let n = self.ids.len();
        for _ in 0..batch_size {
            let a = self.anchor_pool[rng.random_range(0..self.anchor_pool.len())];
            let own = &self.classes[self.class_of[a]];
            let mut p = own[rng.random_range(0..own.len() - 1)];
            if p == a {
                p = own[own.len() - 1];
            }
            let n_other = n - own.len();
            let mut k = rng.random_range(0..n_other);
            let mut neg = 0;
            for i in 0..n {
                if self.class_of[i] != self.class_of[a] {
                    if k == 0 {
                        neg = i;
                        break;
                    }
                    k -= 1;
                }
            }
            b.anchors.push(self.segment(store, a, rng)?);
            b.positives.push(self.segment(store, p, rng)?);
            b.negatives.push(self.segment(store, neg, rng)?);
            b.labels.push(self.labels[a].clone());
            b.negative_labels.push(self.labels[neg].clone());
            b.anchor_ids.push(self.ids[a].clone());
            b.positive_ids.push(self.ids[p].clone());
            b.negative_ids.push(self.ids[neg].clone());
        }
        Ok(b)
    }
}

/// One batch from a fresh seeded stream. `frames` is the segment length fed to the models.
pub fn sample_triplet_batch(
    m: &DatasetManifest,
    kind: LabelKind,
    batch_size: usize,
    frames: usize,
    seed: u64,
    store: &FeatureStore,
) -> Result<TripletBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TripletSampler::new(m, kind, frames)?.sample(batch_size, store, &mut rng)
}
