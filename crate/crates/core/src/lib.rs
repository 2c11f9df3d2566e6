//! Quaternion convolutional neural network for speech emotion recognition.
//!
//! Speech is turned into a 50×75 RGB mel-spectrogram image, each pixel
//! encoded as the pure quaternion `0 + R·i + G·j + B·k`, and classified by
//! a network whose convolution kernels act as rotation-scaling operators on
//! the color vector. Everything — feature extraction, forward and backward
//! passes, the Adam optimizer, checkpointing — is implemented here in full,
//! with analytic gradients checked against finite differences by the test
//! suite.
//!
//! Module map:
//! - [`quat`]: the quaternion algebra (Hamilton product, sandwich rotation)
//! - [`wav`] / [`feature`]: PCM decoding and the waveform → quaternion
//!   image pipeline
//! - [`layers`]: quaternion convolution, quaternion ReLU, imaginary
//!   max-pool, flatten, dropout, dense, softmax
//! - [`model`] / [`train`]: the two-block architecture, loss, Adam,
//!   training loop, evaluation
//! - [`dataset`]: corpus scanning, stratified splits, manifests
//! - [`checkpoint`]: the versioned binary model format
//! - [`fixtures`]: deterministic synthetic corpora for tests and demos

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod feature;
pub mod fixtures;
pub mod layers;
pub mod model;
pub mod quat;
pub mod train;
pub mod wav;

pub use error::{Error, Result};
pub use quat::{Quaternion, UnitAxisQuaternion};
