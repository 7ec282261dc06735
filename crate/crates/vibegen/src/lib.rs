//! 1-D Wasserstein DCGAN for vibration-signal synthesis.
//!
//! Learns a long single-channel vibration record with a deep-convolutional
//! generator/critic pair and synthesizes 1024-sample windows statistically
//! similar to it. The crate carries its own tensor kernels with hand-written
//! backward passes, a weight-clipped Wasserstein training loop with AdamW,
//! and a moment-distance evaluation protocol (pairwise score matrix, density
//! histogram, box statistics, exemplar export).

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod rng;
pub mod runtime;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
