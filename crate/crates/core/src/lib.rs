//! Fourier phase retrieval with a known reference image.
//!
//! The measurement model is `y = |F(x + u)|`: a known non-negative reference
//! `u` is added to the unknown image `x` before the Fourier magnitudes are
//! recorded, optionally on a grid oversampled by two in each dimension. The
//! crate provides the forward model, a reference-aware Gerchberg-Saxton
//! solver (and a gradient-descent baseline), reference learning by
//! differentiating through unrolled solver iterations, hand-built baseline
//! references, registration over the trivial ambiguities, and the I/O and
//! evaluation plumbing around them.

pub mod dataio;
pub mod error;
pub mod eval;
pub mod fourier;
pub mod image;
pub mod measurement;
pub mod reconstruct;
pub mod references;
pub mod reflearn;
pub mod registration;
pub mod rng;

pub use error::{Error, Result};
pub use fourier::{dft2, embed, extract, idft2, FftPlan};
pub use image::{clip01, mse, Image, Measurement, Oversampling, Spectrum};
pub use measurement::{measure, residual};
pub use reconstruct::{gd_run, gs_run, gs_step, GdConfig, GsConfig, InitMode};
pub use references::{
    random_binary_reference, random_reference, simple_reference, SimpleRefParams,
};
pub use registration::{flip180, register, shift, Orientation, Registration, Transform};
pub use rng::Rng;
