//! Task-oriented over-the-air computation for multi-device split inference.
//!
//! Devices observe a common source through independent sensing noise,
//! extract features, and transmit feature pairs simultaneously so that the
//! multi-antenna server receives their weighted sum. The transceiver (receive
//! beamformer and per-device steering powers) is chosen to maximize the
//! discriminant gain of the aggregated features rather than to minimize
//! aggregation error.
//!
//! - [`feature_model`]: Gaussian-mixture feature statistics, PCA, gains.
//! - [`channel_sim`]: sensing data, uplink channels and receiver noise.
//! - [`aircomp`]: symbol packing, ZF precoders and over-the-air aggregation.
//! - [`optimizer`]: successive convex approximation and baseline designs.
//! - [`harness`]: Monte-Carlo accuracy evaluation and parameter sweeps.

pub mod aircomp;
pub mod channel_sim;
pub mod error;
pub mod feature_model;
pub mod harness;
pub mod optimizer;
pub mod rng;

pub use error::{Error, Result};
