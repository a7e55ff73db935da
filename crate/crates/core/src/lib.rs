//! Multi-modal trajectory intention prediction: a conditional sequence GAN
//! proposes futures and a camera segmentation filters them by rejection
//! sampling.

// Negated comparisons double as NaN rejection in validation code.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod gan;
pub mod neural;
pub mod pipeline;
pub mod scene;
pub mod seed;
pub mod traj;

pub use error::{Error, Result};
