//! Spectral clustering through landmarks and an autoencoder.
//!
//! Pipeline: pick `p` landmarks, build the `p × n` Gaussian affinity `W`,
//! get point degrees in `O(np)` from the row sums of `W`, scale the columns
//! to form `S = W D^{-1/2}`, train an autoencoder to reconstruct `S`, and run
//! k-means on the bottleneck codes. An exact dense spectral clustering is
//! included for checking small instances.

pub mod affinity;
pub mod autoencoder;
pub mod bench;
pub mod data;
pub mod error;
pub mod kmeans;
pub mod landmarks;
pub mod metrics;
pub mod oracle;
mod par;
pub mod pipeline;

pub use error::{Error, Result};
