//! Temporal saliency adaptation: convolutional and ConvLSTM refinement layers
//! on top of per-frame saliency maps, trained with momentum SGD, plus the
//! fixation-based evaluation suite (AUC-Judd, shuffled AUC, NSS, CC, SIM).

pub mod data;
pub mod error;
pub mod metrics;
pub mod net;
pub mod train;
pub mod tensor;

pub use error::{Error, Result};
