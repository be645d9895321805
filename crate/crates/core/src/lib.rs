//! Random fields on S¹ and S² in a truncated real harmonic basis, their
//! conformal transfer to flat space, reweighted ensembles and the
//! diagnostics of scaling limits as the sphere is blown up.
//!
//! The `qftlab` binary in [`cli`] drives the experiments from JSON
//! configurations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod conformal;
pub mod covariance;
pub mod harmonics;
pub mod interaction;
pub mod mollifier;
pub mod sampler;
pub mod scaling_limit;
pub mod stats;
pub mod cli;

pub use error::{Error, Result};
