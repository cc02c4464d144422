//! Forward-electrocardiology workbench.
//!
//! The crate simulates 2D cardiac tissue (monodomain equation with a
//! three-variable Fenton–Karma cell model), computes pseudo-ECG traces from
//! the voltage frames, and trains an attention-based sequence-to-sequence
//! surrogate that maps frame sequences straight to ECG signals.
//!
//! Pipeline stages map onto modules:
//!
//! - [`tissue`]: seeded generation of the four-class tissue corpus
//! - [`solver`]: the reaction-diffusion solver producing voltage frames
//! - [`ecg`]: the inverse-distance pseudo-ECG forward operator
//! - [`data`]: tensor serialization, downsampling, normalization, splits
//! - [`model`]: the CNN encoder / time-aware attention / LSTM decoder
//!   surrogate with hand-derived gradients
//! - [`objective`]: the Huber + spectral-entropy loss and metrics
//! - [`train`]: Adam, LR-on-plateau, the training loop and the ablation
//!   harness
//!
//! Built with the `parallel` feature (default), per-cell and per-sample
//! loops run on rayon; results are bitwise identical to the sequential
//! fallback because every reduction happens in fixed order.

pub mod data;
pub mod ecg;
pub mod error;
pub mod model;
pub mod objective;
pub mod parallel;
pub mod solver;
pub mod tissue;
pub mod train;

pub use error::{Error, Result};
