//! EEG emotion recognition with a spatial-temporal transformer and an
//! intensity-aware curriculum: feature pipeline, model, training loop,
//! synthetic data, and the on-disk formats tying them together.

pub mod curriculum;
pub mod error;
pub mod io;
pub mod model;
pub mod signal;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
