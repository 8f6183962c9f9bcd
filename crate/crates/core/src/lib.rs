//! Tiled latent-diffusion sampling at desk scale.
//!
//! The crate covers the full loop of a two-stage resize-then-upscale
//! pipeline built around closed-form Gaussian denoisers instead of a
//! neural UNet:
//!
//! - [`bucket`] — multi-aspect-ratio bucketing of training images and
//!   homogeneous batch grouping,
//! - [`schedule`] — DDPM/DDIM noise schedules and single-step updates,
//! - [`denoiser`] — exact Gaussian noise predictors (iid and spatially
//!   correlated), a toy encoder/decoder pair, and a trainable per-step
//!   affine denoiser,
//! - [`tiling`] — tile plans for disjoint, explicit-overlap, and
//!   shifted-grid (implicit overlap) sampling,
//! - [`sampler`] — full-frame and tiled reverse diffusion plus the
//!   tiled upscaling pipeline,
//! - [`metrics`] — luminance PSNR/SSIM, a seam-discontinuity score, and
//!   an analytical peak-memory model,
//! - [`io`] / [`rng`] — deterministic PNG I/O, run configuration, and
//!   the reproducible stream-based random number contract.

pub mod bucket;
pub mod denoiser;
pub mod error;
mod fft;
pub mod io;
pub mod metrics;
pub mod plane;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod tiling;

pub use error::{Error, Result};
pub use plane::Plane;
pub use rng::StreamRng;
