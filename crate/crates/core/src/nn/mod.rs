//! Minimal network building blocks: parameter sets, layers, Adam.

mod adam;
mod im2col;
pub mod archive;
mod layers;
mod params;

pub use adam::{Adam, AdamConfig};
pub use layers::{leaky_relu, sigmoid, softmax, softplus, AttentionPool, Conv2d, ConvTranspose2d, Linear, Lstm};
pub use params::ParamSet;
