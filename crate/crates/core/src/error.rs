//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by schedule construction, plane arithmetic, tiling,
/// sampling, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid noise-schedule parameters (T = 0, beta out of (0, 1), ...).
    #[error("invalid schedule: {0}")]
    Schedule(String),

    /// Shape or size mismatch between planes, tiles, or canvases.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A reverse step was asked to move forward in time.
    #[error("step ordering: t_prev = {t_prev} must be < t = {t}")]
    StepOrder { t: usize, t_prev: usize },

    /// A stochastic step was invoked without its noise input.
    #[error("missing noise: {0}")]
    MissingNoise(String),

    /// Inconsistent configuration (empty table, bad offset range, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Offset outside the valid [0, tile) range.
    #[error("offset out of range: {0}")]
    Offset(String),

    /// Heterogeneous shapes inside one training batch.
    #[error("batch error: {0}")]
    Batch(String),

    /// Training loss became non-finite.
    #[error("training diverged at step {step}")]
    Training { step: usize },

    /// File could not be read, written, or decoded.
    #[error("I/O error at {path}: {message}")]
    Io { path: PathBuf, message: String },

    /// A dataset manifest line failed to parse.
    #[error("manifest parse error at line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    /// A JSON document failed to parse or violated the config schema.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
