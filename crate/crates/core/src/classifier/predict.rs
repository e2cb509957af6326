use serde::{Deserialize, Serialize};

use super::model::Classifier;
use crate::audio::{segment_mel, MelSpectrogram};
use crate::error::{Error, Result};
use crate::models::batch_to_tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePrediction {
    pub label: usize,
    /// Argmax class of every segment, in time order.
    pub votes: Vec<usize>,
    pub mean_probabilities: Vec<f64>,
}

/// Plurality of `votes`; ties go to the tied class with the highest mean probability,
/// then to the lower index.
pub fn majority_vote(votes: &[usize], mean_probabilities: &[f64]) -> Result<usize> {
    if votes.is_empty() {
        return Err(Error::Empty("segment votes"));
    }
    let n = mean_probabilities.len().max(votes.iter().max().map_or(0, |m| m + 1));
    let mut counts = vec![0usize; n];
    for &v in votes {
        counts[v] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&0);
    let prob = |k: usize| mean_probabilities.get(k).copied().unwrap_or(f64::NEG_INFINITY);
    let mut best = None::<usize>;
    for k in (0..n).filter(|&k| counts[k] == top) {
        if best.is_none_or(|b| prob(k) > prob(b)) {
            best = Some(k);
        }
    }
    Ok(best.expect("at least one vote"))
}

/// Classifies every `spec.frames`-long window (hop `hop`) and votes.
pub fn predict_utterance(model: &Classifier, mel: &MelSpectrogram, hop: usize) -> Result<UtterancePrediction> {
    if mel.frames() == 0 {
        return Err(Error::EmptySpectrogram);
    }
    let segments = segment_mel(mel, model.spec.frames, hop)?;
    let arrays: Vec<_> = segments.into_iter().map(|s| s.into_values()).collect();
    let probs = model.probabilities(&batch_to_tensor(&arrays)?)?.to_vec2::<f32>()?;
    let votes: Vec<usize> = probs
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f32::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
                .0
        })
        .collect();
    let mut mean = vec![0f64; model.n_classes];
    for row in &probs {
        for (m, &p) in mean.iter_mut().zip(row) {
            *m += p as f64 / probs.len() as f64;
        }
    }
    let label = majority_vote(&votes, &mean)?;
    Ok(UtterancePrediction {
        label,
        votes,
        mean_probabilities: mean,
    })
}
