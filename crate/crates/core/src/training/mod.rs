//! Alternating optimization of augmentor, discriminator and representation learner.

mod checkpoint;
mod log;
mod phases;
mod state;

pub use checkpoint::{
    checkpoint_load, checkpoint_save, config_fingerprint, load_augmentor, save_augmentor, CHECKPOINT_KIND, MODEL_KIND,
};
pub use log::{read_log, TrainingLog};
pub use phases::{run_phase_cycle, run_single_phase, train_step, Phase};
pub use state::{CycleLosses, TrainConfig, TrainState};

use crate::dataset::{FeatureStore, TripletSampler};
use crate::error::Result;

/// Runs cycles until `state.config.total_iterations`, calling `on_cycle` after each.
pub fn train_until(
    state: &mut TrainState,
    sampler: &TripletSampler,
    store: &FeatureStore,
    mut on_cycle: impl FnMut(&TrainState, &CycleLosses) -> Result<()>,
) -> Result<()> {
    while state.iteration < state.config.total_iterations {
        let losses = train_step(state, sampler, store)?;
        on_cycle(state, &losses)?;
    }
    Ok(())
}
