//! Adversarial-example detection workbench.
//!
//! End-to-end pieces for studying activation-level adversarial detection on
//! small CNNs: a dense tensor type with reverse-mode autodiff, MNIST/CIFAR
//! ingestion, a model zoo with activation capture, FGSM/PGD attack
//! generation (input space and activation space), layer sensitivity
//! profiling, a binary activation detector with an early-exit guarded
//! forward pass, post-training quantization simulation, and an analytic
//! accelerator energy model for MAC and memory-access costs under basic,
//! data-gating and DVAFS operating modes.

pub mod ans;
pub mod attacks;
pub mod datasets;
pub mod detector;
pub mod energy;
pub mod error;
pub mod metrics;
pub mod models;
pub mod quant;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

/// Default seed used by every component when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 42;
