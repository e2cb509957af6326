//! Manifest transforms used by the evaluation protocols: imbalance simulation,
//! session folds, valence mapping and stratified target-language splits.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Emotion, LabelKind, UtteranceRecord, Valence};
use crate::error::{Error, Result};

/// Number of records kept from a class of `n` under `keep_fraction`.
pub fn downsampled_count(n: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n as f64).round() as usize).clamp(1, n.max(1))
}

fn keep_sorted(indices: impl IntoIterator<Item = usize>, records: &[UtteranceRecord]) -> Vec<UtteranceRecord> {
    let set: BTreeSet<usize> = indices.into_iter().collect();
    set.into_iter().map(|i| records[i].clone()).collect()
}

/// Downsamples every class except `protected` to `max(1, round(keep_fraction·n))` records.
pub fn simulate_imbalance(
    m: &DatasetManifest,
    keep_fraction: f64,
    protected: &str,
    kind: LabelKind,
    seed: u64,
) -> Result<DatasetManifest> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidFraction(format!("keep_fraction {keep_fraction} not in (0, 1]")));
    }
    let classes = m.class_index(kind)?;
    if !classes.contains_key(protected) {
        return Err(Error::ProtectedClassAbsent(protected.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for (label, idx) in &classes {
        if label == protected {
            kept.extend_from_slice(idx);
        } else {
            let k = downsampled_count(idx.len(), keep_fraction);
            kept.extend(sample(&mut rng, idx.len(), k).into_iter().map(|j| idx[j]));
        }
    }
    Ok(m.derive(keep_sorted(kept, &m.records)))
}

#[derive(Debug, Clone)]
pub struct Fold {
    pub test_session: String,
    pub train: DatasetManifest,
    pub test: DatasetManifest,
}

/// Leave-one-session-out folds, sessions in sorted order.
pub fn make_session_folds(m: &DatasetManifest) -> Result<Vec<Fold>> {
    let sessions: BTreeSet<&str> = m.records.iter().map(|r| r.session.as_str()).collect();
    if sessions.len() < 2 {
        return Err(Error::TooFewSessions(sessions.len()));
    }
    Ok(sessions
        .into_iter()
        .map(|s| {
            let (test, train): (Vec<_>, Vec<_>) = m.records.iter().cloned().partition(|r| r.session == s);
            Fold {
                test_session: s.to_string(),
                train: m.derive(train),
                test: m.derive(test),
            }
        })
        .collect())
}

/// Emotion name → valence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValenceMapping(pub BTreeMap<String, Valence>);

impl Default for ValenceMapping {
    fn default() -> Self {
        let table = [
            (Emotion::Angry, Valence::Negative),
            (Emotion::Sad, Valence::Negative),
            (Emotion::Happy, Valence::Positive),
            (Emotion::Neutral, Valence::Positive),
        ];
        Self(table.into_iter().map(|(e, v)| (e.to_string(), v)).collect())
    }
}

/// Populates `valence` from each record's emotion. Records carrying only a valence are kept as is.
pub fn map_to_valence(m: &DatasetManifest, mapping: &ValenceMapping) -> Result<DatasetManifest> {
    let missing: BTreeSet<String> = m
        .records
        .iter()
        .filter_map(|r| r.emotion.as_ref())
        .filter(|e| !mapping.0.contains_key(e.as_str()))
        .map(|e| e.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnmappedEmotion(missing.into_iter().collect::<Vec<_>>().join(", ")));
    }
    Ok(m.derive(
        m.records
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if let Some(e) = &r.emotion {
                    r.valence = Some(mapping.0[e.as_str()]);
                }
                r
            })
            .collect(),
    ))
}

/// Splits `total` across classes proportionally to `sizes` (largest remainder,
/// ties to the earlier class), never exceeding a class's `caps`.
fn allocate(total: usize, sizes: &[usize], caps: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes.iter().map(|&s| total as f64 * s as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = exact
        .iter()
        .zip(caps)
        .map(|(&e, &c)| (e.floor() as usize).min(c))
        .collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(alloc.iter().sum());
    while left > 0 {
        let before = left;
        for &c in &order {
            if left > 0 && alloc[c] < caps[c] {
                alloc[c] += 1;
                left -= 1;
            }
        }
        if left == before {
            break;
        }
    }
    alloc
}

/// Stratified split of a target-language manifest into a training subset and a
/// held-out evaluation subset.
///
/// `round(eval_fraction·N)` records go to evaluation; `round(train_fraction·N)`
/// records are drawn for training from the remainder. Both are stratified by
/// `kind` using proportional allocation.
pub fn split_target_language(
    m: &DatasetManifest,
    eval_fraction: f64,
    train_fraction: f64,
    kind: LabelKind,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    let valid = |f: f64| (0.0..=1.0).contains(&f);
    if !valid(eval_fraction) || !valid(train_fraction) || eval_fraction + train_fraction > 1.0 + 1e-12 {
        return Err(Error::InvalidFraction(format!(
            "eval_fraction {eval_fraction} + train_fraction {train_fraction} must lie in [0, 1]"
        )));
    }
    let classes = m.class_index(kind)?;
    let sizes: Vec<usize> = classes.values().map(Vec::len).collect();
    let n = m.len();
    let n_eval = (eval_fraction * n as f64).round() as usize;
    let n_train = ((train_fraction * n as f64).round() as usize).min(n - n_eval);

    let eval_alloc = allocate(n_eval, &sizes, &sizes);
    let pool: Vec<usize> = sizes.iter().zip(&eval_alloc).map(|(s, e)| s - e).collect();
    let train_alloc = allocate(n_train, &sizes, &pool);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut eval_idx, mut train_idx) = (Vec::new(), Vec::new());
    for (c, idx) in classes.values().enumerate() {
        let perm = sample(&mut rng, idx.len(), idx.len()).into_vec();
        let (ev, rest) = perm.split_at(eval_alloc[c]);
        eval_idx.extend(ev.iter().map(|&j| idx[j]));
        train_idx.extend(rest[..train_alloc[c]].iter().map(|&j| idx[j]));
    }
    Ok((
        m.derive(keep_sorted(train_idx, &m.records)),
        m.derive(keep_sorted(eval_idx, &m.records)),
    ))
}
