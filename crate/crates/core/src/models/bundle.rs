use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::augmentor::Augmentor;
use super::discriminator::Discriminator;
use super::representation::RepresentationLearner;
use super::spec::ModelConfig;
use crate::error::{Error, Result};
use crate::nn::ParamSet;

pub const AUGMENTOR: &str = "augmentor";
pub const DISCRIMINATOR: &str = "discriminator";
pub const REPRESENTATION: &str = "representation";
pub const MODULES: [&str; 3] = [AUGMENTOR, DISCRIMINATOR, REPRESENTATION];

/// The three augmentation-side networks, each independently freezable.
#[derive(Debug)]
pub struct ModelBundle {
    pub config: ModelConfig,
    pub augmentor: Augmentor,
    pub discriminator: Discriminator,
    pub representation: RepresentationLearner,
}

pub type Snapshot = BTreeMap<String, BTreeMap<String, Vec<f32>>>;

impl ModelBundle {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            augmentor: Augmentor::new(&config, &mut rng)?,
            discriminator: Discriminator::new(&config, &mut rng)?,
            representation: RepresentationLearner::new(&config, &mut rng)?,
            config,
        })
    }

    pub fn module(&self, name: &str) -> Result<&ParamSet> {
        match name {
            AUGMENTOR => Ok(&self.augmentor.params),
            DISCRIMINATOR => Ok(&self.discriminator.params),
            REPRESENTATION => Ok(&self.representation.params),
            other => Err(Error::UnknownModule(other.to_string())),
        }
    }

    fn module_mut(&mut self, name: &str) -> Result<&mut ParamSet> {
        match name {
            AUGMENTOR => Ok(&mut self.augmentor.params),
            DISCRIMINATOR => Ok(&mut self.discriminator.params),
            REPRESENTATION => Ok(&mut self.representation.params),
            other => Err(Error::UnknownModule(other.to_string())),
        }
    }

    pub fn set_frozen(&mut self, name: &str, frozen: bool) -> Result<()> {
        self.module_mut(name)?.set_frozen(frozen);
        Ok(())
    }

    /// Unfreezes `name` and freezes every other module.
    pub fn train_only(&mut self, name: &str) -> Result<()> {
        self.module(name)?;
        for m in MODULES {
            self.set_frozen(m, m != name)?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        MODULES
            .iter()
            .map(|&m| Ok((m.to_string(), self.module(m)?.snapshot()?)))
            .collect()
    }
}

pub fn set_frozen(bundle: &mut ModelBundle, module: &str, frozen: bool) -> Result<()> {
    bundle.set_frozen(module, frozen)
}
