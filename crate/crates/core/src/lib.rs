//! Second-order image statistics for synthetic-image forensics.
//!
//! The crate computes corpus-averaged power spectra and autocorrelations of
//! images or their noise residuals, radial and angular spectral profiles,
//! Fisher discriminant profiles between two corpora, and a small set of
//! detectors for generator artifacts (upsampling peak lattices, JPEG 8x8 grid
//! bias, power-law deviations). A fixture generator produces deterministic
//! corpora with known injected artifacts so every detector can be checked
//! end to end.
//!
//! Module map:
//! - [`imgio`]: Netpbm parsing/writing, luminance, cropping
//! - [`dsp`]: 2-D DFT, `fftshift`, circular autocorrelation
//! - [`residual`]: denoisers and noise residuals
//! - [`stats`]: corpus averaging, normalization, autocorrelation crops
//! - [`profiles`]: radial/angular spectra, Fisher profile, power-law fit
//! - [`detect`]: peak lattice and JPEG grid detectors
//! - [`synth`]: fixture corpora and post-processing chain
//! - [`reduce`]: fixed-tree parallel reduction used by the corpus passes

pub mod detect;
pub mod dsp;
pub mod imgio;
pub mod profiles;
pub mod reduce;
pub mod residual;
pub mod stats;
pub mod synth;

pub use dsp::{ComplexGrid, RealGrid};
pub use imgio::{ImageF, ImageRGB, Pixels};

/// Errors raised across the crate.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Malformed file content; `offset` is the byte position of the problem.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("unsupported format: magic {0:?}")]
    UnsupportedFormat(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input whose statistics are undefined (for example zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("external process failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
