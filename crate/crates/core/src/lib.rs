//! Multi-scale fractal dimension signatures of space-time shapes.
//!
//! A video of binary silhouettes is stacked into a 3D occupancy volume
//! ([`volume`]). Its exact squared Euclidean distance transform ([`edt`])
//! gives the Bouligand-Minkowski influence volume `V(r)` for every radius at
//! once ([`minkowski`]). The derivative of `log V` against `log r`, taken in
//! the frequency domain with Gaussian smoothing, yields a per-scale fractal
//! dimension curve ([`signature`]) that feeds a one-vs-one linear SVM under
//! repeated stratified cross-validation ([`classifier`]). [`synth`] produces
//! deterministic test volumes.
//!
//! Data-parallel loops go through [`par`]; build without the default
//! `parallel` feature for a purely sequential library.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod config;
pub mod edt;
pub mod error;
pub mod minkowski;
pub mod par;
pub mod pipeline;
pub mod signature;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use par::Execution;
