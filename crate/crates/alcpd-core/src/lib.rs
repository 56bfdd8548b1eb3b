// SPDX-License-Identifier: MIT OR Apache-2.0

//! Active-learning multiple change point detection for non-stationary time
//! series.
//!
//! The pipeline fits a deep Gaussian process to sparse, expensive
//! observations, turns its predictive mean into sliding-window magnitude
//! spectra, scores candidate locations with a spectral change metric plus a
//! Monte Carlo spectral uncertainty, and spends the measurement budget where
//! the acquisition function points. Change points come out of a
//! threshold-and-suppress pass over the spectral change profile.
//!
//! Modules follow the pipeline stages: [`numerics`] (kernels, Cholesky, DFT,
//! RNG), [`svgp`] / [`dgp`] (the surrogate), [`spectral`] (metrics and
//! profiles), [`active`] (acquisition and the outer loop), [`detect`]
//! (estimation and evaluation), [`benchgen`] (synthetic benchmark patterns),
//! and [`dacd`] (the derivative-GP baseline).

#![forbid(unsafe_code)]

pub mod active;
pub mod benchgen;
pub mod dacd;
pub mod data;
pub mod detect;
pub mod dgp;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod oracle;
pub mod spectral;
pub mod svgp;
pub(crate) mod tape;

pub use data::{Provenance, TimeSeriesDataset};
pub use error::{Error, Result};
