//! Recurrent sequence models with squared sigmoid / squared tanh activations.
//!
//! The crate provides a GRU whose gates can use either the logistic sigmoid
//! or its square, dense layers with a pluggable activation (including the
//! sign-preserving squared tanh), exact backpropagation through time, a
//! small training loop, dataset utilities for sparse sequential data, and
//! the usual classification/regression metrics.

pub mod activation;
pub mod checkpoint;
pub mod data;
pub mod dense;
pub mod error;
pub mod gradcheck;
pub mod gru;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use activation::{parse_activation, ActivationKind};
pub use error::{Error, Result};
pub use gru::{GruParams, GruVariant};
pub use tensor::{Matrix, Rng, Vector};
