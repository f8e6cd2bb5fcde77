//! Rigid point-cloud registration with multi-domain context features,
//! coarse-to-fine Sinkhorn matching and history-aware inlier weighting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod benchmark;
pub mod dism;
pub mod error;
pub mod gnam;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod pcim;
pub mod pipeline;
pub mod pointcloud;
pub mod selftest;
pub mod synth;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
