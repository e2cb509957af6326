//! The alternating four-phase update.
//!
//! 1. representation learner ← triplet loss on original data
//! 2. discriminator ← originals vs. augmentor outputs (augmentor frozen)
//! 3. augmentor ← variance loss through the frozen representation learner
//! 4. augmentor ← generator + emotion-preservation + balance losses
//!    (representation learner and discriminator frozen)

use candle_core::Tensor;

use super::state::{CycleLosses, TrainState};
use crate::dataset::{FeatureStore, TripletBatch, TripletSampler};
use crate::error::{Error, Result};
use crate::losses::{
    combine_losses, discriminator_loss, generator_loss, triplet_loss_batch, var_loss_batch, LossComponents,
};
use crate::models::{batch_to_tensor, AUGMENTOR, DISCRIMINATOR, REPRESENTATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Representation,
    Discriminator,
    Variance,
    Preservation,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::Representation,
        Phase::Discriminator,
        Phase::Variance,
        Phase::Preservation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Representation => "representation",
            Phase::Discriminator => "discriminator",
            Phase::Variance => "variance",
            Phase::Preservation => "preservation",
        }
    }

    /// The only module whose parameters this phase may change.
    pub fn trained_module(self) -> &'static str {
        match self {
            Phase::Representation => REPRESENTATION,
            Phase::Discriminator => DISCRIMINATOR,
            Phase::Variance | Phase::Preservation => AUGMENTOR,
        }
    }
}

pub(crate) struct BatchTensors {
    anchors: Tensor,
    positives: Tensor,
    negatives: Tensor,
}

impl BatchTensors {
    pub fn new(batch: &TripletBatch) -> Result<Self> {
        Ok(Self {
            anchors: batch_to_tensor(&batch.anchors)?,
            positives: batch_to_tensor(&batch.positives)?,
            negatives: batch_to_tensor(&batch.negatives)?,
        })
    }
}

fn scalar(t: &Tensor, state: &TrainState, phase: Phase, partial: &CycleLosses) -> Result<f64> {
    let v = t.to_scalar::<f32>()? as f64;
    if !v.is_finite() {
        return Err(Error::Diverged {
            iteration: state.iteration,
            phase: phase.name(),
            snapshot: serde_json::to_string(partial).unwrap_or_default(),
        });
    }
    Ok(v)
}

/// Runs one phase on prepared tensors, updating `losses` with what it measured.
pub(crate) fn run_phase(state: &mut TrainState, phase: Phase, b: &BatchTensors, losses: &mut CycleLosses) -> Result<()> {
    let w = state.config.weights;
    state.bundle.train_only(phase.trained_module())?;
    match phase {
        Phase::Representation => {
            let rep = &state.bundle.representation;
            let (ra, rp, rn) = (rep.represent(&b.anchors)?, rep.represent(&b.positives)?, rep.represent(&b.negatives)?);
            let loss = triplet_loss_batch(&ra, &rp, &rn, w.beta)?;
            losses.rep = scalar(&loss, state, phase, losses)?;
            if w.w_r > 0.0 {
                let grads = (loss * w.w_r)?.backward()?;
                state.opt_representation.step(&state.bundle.representation.params, &grads)?;
            }
        }
        Phase::Discriminator => {
            let fake = state
                .bundle
                .augmentor
                .augment(&b.anchors, &mut state.rng.noise, &mut state.rng.eps)?
                .x_hat
                .detach();
            let d = &state.bundle.discriminator;
            let loss = discriminator_loss(&d.logits(&b.positives)?, &d.logits(&fake)?)?;
            losses.disc = scalar(&loss, state, phase, losses)?;
            let grads = loss.backward()?;
            state.opt_discriminator.step(&state.bundle.discriminator.params, &grads)?;
        }
        Phase::Variance => {
            if w.w_v == 0.0 {
                return Ok(());
            }
            let aug = &state.bundle.augmentor;
            let v1 = aug.augment(&b.anchors, &mut state.rng.noise, &mut state.rng.eps)?.x_hat;
            let v2 = aug.augment(&b.anchors, &mut state.rng.noise, &mut state.rng.eps)?.x_hat;
            let rep = &state.bundle.representation;
            let loss = var_loss_batch(&rep.represent(&v1)?, &rep.represent(&v2)?, state.config.variance_mode)?;
            losses.var = scalar(&loss, state, phase, losses)?;
            let grads = (loss * w.w_v)?.backward()?;
            state.opt_augmentor.step(&state.bundle.augmentor.params, &grads)?;
        }
        Phase::Preservation => {
            let n = b.positives.dim(0)?;
            let both = Tensor::cat(&[&b.positives, &b.negatives], 0)?;
            let aug = state
                .bundle
                .augmentor
                .augment(&both, &mut state.rng.noise, &mut state.rng.eps)?
                .x_hat;
            let (p_hat, n_hat) = (aug.narrow(0, 0, n)?, aug.narrow(0, n, n)?);
            let rep = &state.bundle.representation;
            let ra = rep.represent(&b.anchors)?.detach();
            let rn = rep.represent(&b.negatives)?.detach();
            let rp_hat = rep.represent(&p_hat)?;
            let rn_hat = rep.represent(&n_hat)?;
            let gen = generator_loss(&state.bundle.discriminator.logits(&aug)?)?;
            let emo = triplet_loss_batch(&ra, &rp_hat, &rn, w.beta)?;
            let bal = triplet_loss_batch(&ra, &rp_hat, &rn_hat, w.beta)?;
            losses.gen = scalar(&gen, state, phase, losses)?;
            losses.emo = scalar(&emo, state, phase, losses)?;
            losses.bal = scalar(&bal, state, phase, losses)?;
            let loss = (((gen * w.w_g)? + (emo * w.w_e)?)? + (bal * w.w_b)?)?;
            let grads = loss.backward()?;
            state.opt_augmentor.step(&state.bundle.augmentor.params, &grads)?;
        }
    }
    Ok(())
}

fn empty_losses(iteration: u64) -> CycleLosses {
    CycleLosses {
        iteration,
        rep: 0.0,
        disc: 0.0,
        var: 0.0,
        gen: 0.0,
        emo: 0.0,
        bal: 0.0,
        model: 0.0,
        total: 0.0,
    }
}

/// Runs a single phase on `batch` without advancing the iteration counter.
/// Only the fields measured by that phase are set in the result.
pub fn run_single_phase(state: &mut TrainState, phase: Phase, batch: &TripletBatch) -> Result<CycleLosses> {
    let tensors = BatchTensors::new(batch)?;
    let mut losses = empty_losses(state.iteration);
    run_phase(state, phase, &tensors, &mut losses)?;
    Ok(losses)
}

/// One full cycle of the four phases on `batch`; increments the iteration counter.
pub fn run_phase_cycle(state: &mut TrainState, batch: &TripletBatch) -> Result<CycleLosses> {
    let tensors = BatchTensors::new(batch)?;
    let mut losses = empty_losses(state.iteration);
    for phase in Phase::ALL {
        run_phase(state, phase, &tensors, &mut losses)?;
    }
    let (model, total) = combine_losses(
        &LossComponents {
            gan_g: losses.gen,
            rep: losses.rep,
            emo: losses.emo,
            var: losses.var,
            bal: losses.bal,
        },
        &state.config.weights,
    )?;
    losses.model = model;
    losses.total = total;
    state.iteration += 1;
    state.push_history(losses);
    Ok(losses)
}

/// Samples a batch from the state's data stream and runs one cycle.
pub fn train_step(state: &mut TrainState, sampler: &TripletSampler, store: &FeatureStore) -> Result<CycleLosses> {
    let batch = sampler.sample(state.config.batch_size, store, state.data_rng())?;
    run_phase_cycle(state, &batch)
}
