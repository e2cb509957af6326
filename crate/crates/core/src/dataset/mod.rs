//! Manifests, protocol splits, triplet sampling and toy data.

mod manifest;
mod protocols;
mod store;
mod toy;
mod triplet;

pub use manifest::{
    load_manifest, parse_manifest, save_manifest, DatasetManifest, Emotion, LabelKind, UtteranceRecord, Valence,
};
pub use protocols::{
    downsampled_count, make_session_folds, map_to_valence, simulate_imbalance, split_target_language, Fold,
    ValenceMapping,
};
pub use store::FeatureStore;
pub use toy::{generate_toy_dataset, toy_label, ToyConfig};
pub use triplet::{sample_triplet_batch, TripletBatch, TripletSampler};
