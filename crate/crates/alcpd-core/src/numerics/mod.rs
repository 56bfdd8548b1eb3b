// SPDX-License-Identifier: MIT OR Apache-2.0

//! Self-contained numerical kernel: covariance functions, jittered Cholesky,
//! DFT magnitudes, standard-normal/chi-square tails, and a deterministic
//! seedable random source.

pub mod fourier;
pub mod kernel;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use fourier::dft_magnitude;
pub use kernel::{kernel_matrix, KernelKind, KernelSpec};
pub use linalg::{cholesky_jitter, JitteredCholesky, LowerTriangular, Mat};
pub use rng::RngStream;
pub use stats::{chi_square_sf, std_normal};
