//! Hybrid quantum-classical temporal fusion transformer.
//!
//! The crate bundles a statevector simulator ([`quantum`]), a reverse-mode
//! tape with parameter-shift circuit nodes ([`grad`]), the classical
//! [`tft`] and quantum [`qtft`] forecasters, and the windowing, loss and
//! training loop in [`forecasting`].

pub mod cli;
pub mod config;
pub mod data_io;
pub mod error;
pub mod forecasting;
pub mod grad;
pub mod gradcheck;
pub mod model;
pub mod qtft;
pub mod quantum;
pub mod tft;

pub use error::{Error, Result};
