//! Plug-in estimation of integral functionals of densities on `[0,1]^d`.
//!
//! The estimator fits a boundary-mirrored kernel density estimate to each
//! sample, plugs the estimates into `F(p_1,…,p_k) = ∫ f(p_1,…,p_k)` and
//! integrates numerically. Alongside the point estimate the crate computes
//! the finite-sample machinery that comes with it: the bandwidth rule, the
//! bias bound, the bounded-difference constant `C_V` and the exponential
//! concentration bound it yields, and confidence intervals obtained by
//! inverting that bound.
//!
//! Conditional functionals (including Rényi-α conditional mutual
//! information) and a conditional-independence test built on them live in
//! [`conditional`] and [`citest`]. [`synth`] provides densities with known
//! functionals, exact samplers and the rate/concentration experiments.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature pulls in
//! `std` and rayon and evaluates grids and Monte-Carlo trials concurrently;
//! results are bitwise identical with and without it.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bounds;
pub mod citest;
pub mod conditional;
mod error;
pub mod functionals;
pub mod kde;
pub mod kernels;
mod math;
mod par;
pub mod quadrature;
pub mod sample;
pub mod synth;

pub use error::{Error, Result};
pub use kde::{DensitySource, MirroredKde};
pub use kernels::Kernel;
pub use quadrature::Grid;
pub use sample::Sample;

/// Crate version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version of the JSON report layout produced by the front end.
pub const SCHEMA_VERSION: &str = "1";
