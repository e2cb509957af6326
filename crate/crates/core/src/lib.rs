//! Triplet-guided adversarial augmentation of mel-spectrograms for speech
//! emotion recognition.
//!
//! The crate is organized bottom-up:
//!
//! - [`audio`]: WAV decoding, log-mel extraction, normalization, segmentation.
//! - [`dataset`]: manifests, imbalance simulation, session folds, valence
//!   mapping, target-language splits, triplet sampling, toy data.
//! - [`models`]: augmentor, discriminator, representation learner.
//! - [`losses`]: triplet, GAN, variance and weighted-sum objectives.
//! - [`training`]: the four-phase alternating optimization and checkpoints.
//! - [`classifier`]: segment classifier, hybrid datasets, voting, UAR.
//! - [`report`]: t-SNE, silhouette, result tables.
//! - [`config`]: experiment configuration.

pub mod audio;
pub mod classifier;
pub mod config;
pub mod dataset;
mod error;
pub mod losses;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod training;

pub use error::{Error, Result};
