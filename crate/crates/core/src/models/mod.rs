//! Augmentor, discriminator and representation learner.

mod augmentor;
mod bundle;
mod discriminator;
mod encoder;
mod epsilon;
mod projection;
mod representation;
mod spec;

pub use augmentor::{batch_to_tensor, mel_to_tensor, tensor_to_array, Augmented, Augmentor};
pub use bundle::{set_frozen, ModelBundle, Snapshot, AUGMENTOR, DISCRIMINATOR, MODULES, REPRESENTATION};
pub use discriminator::Discriminator;
pub use encoder::ConvSeqEncoder;
pub use epsilon::{sample_epsilon, EpsilonDist};
pub use projection::{project_l1, project_l1_batch};
pub use representation::RepresentationLearner;
pub use spec::{AugmentorSpec, DiscriminatorSpec, ModelConfig, RepresentationSpec};
