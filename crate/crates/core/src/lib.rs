//! Spatial core-periphery random network model.
//!
//! Every vertex `u` carries a real core score `theta[u]` and a position `x_u`.
//! A pair `(u, v)` is joined independently with probability
//!
//! ```text
//! rho_uv = e^(theta_u + theta_v) / (e^(theta_u + theta_v) + K_uv^epsilon)
//! ```
//!
//! where `K_uv` is a non-negative kernel distance and `epsilon` a global
//! exponent. This crate provides
//!
//! - kernels (Euclidean, great-circle, symmetric rank),
//! - the quadratic-cost log-likelihood and its gradients ([`exact`]),
//! - a ball tree ([`tree`]) and a tree-code evaluation of the same
//!   quantities in near-linear time ([`fast`]),
//! - a preconditioned L-BFGS maximum likelihood fit ([`optimize`]),
//! - naive and hierarchical samplers ([`sample`]),
//! - validation quantities and synthetic instances ([`diagnostics`]).
//!
//! The crate is `no_std` with `alloc` when built without the default `std`
//! feature. With `std`, pairwise loops are spread over the rayon pool; every
//! reduction is performed in a fixed order so results do not depend on the
//! thread count.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
mod error;
pub mod exact;
pub mod fast;
pub mod kernels;
pub(crate) mod math;
pub mod network;
pub mod optimize;
mod par;
pub mod rng;
pub mod sample;
pub mod tree;

pub use error::{Error, Result};
pub use exact::Evaluation;
pub use fast::Accuracy;
pub use kernels::{Kernel, KernelKind, PairKernel};
pub use network::{Coords, ModelParams, SpatialNetwork};
pub use optimize::{FitConfig, FitReport, InitStrategy, LikelihoodPath};
pub use sample::{Rounding, SampleConfig, SampleMethod};
pub use tree::MetricTree;
