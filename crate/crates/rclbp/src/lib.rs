//! Noise-robust texture classification for surface-defect detection.
//!
//! The crate implements a full pipeline: SNR-calibrated Gaussian noise
//! injection, a two-stage denoiser (non-local means followed by wavelet
//! shrinkage of the method noise, with the recovered detail added back),
//! completed local binary pattern (CLBP) features, and small exact
//! classifiers (weighted KNN, Gaussian naive Bayes) wired into a
//! reproducible benchmark harness.
//!
//! Every stage is deterministic: all randomness flows from explicit 64-bit
//! seeds through one documented generator, so identical inputs always
//! produce bit-identical outputs.

pub mod clbp;
pub mod cli;
pub mod error;
pub mod imagecore;
pub mod ml;
pub mod nlmeans;
pub mod pipeline;
pub mod rng;
pub mod wavelet;

pub use error::{Error, Result};
