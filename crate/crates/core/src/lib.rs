// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection and estimation of a segment-shaped mean shift.
//!
//! Observations follow `y_i = 1(x_i in G) + xi_i` on sorted design points in
//! `[0, 1]`, where `G` is an unknown segment (or empty) and the noise is
//! subgaussian. The crate provides
//!
//! - [`model`]: segments, regular and random designs, noise families,
//!   sampling and the Nikodym loss `|G △ G'|`;
//! - [`detection`]: the counting test for left-anchored alternatives and the
//!   scan test for general segments;
//! - [`estimation`]: least-squares estimators for one change-point, a
//!   general segment, and a split-sample estimator for long segments;
//! - [`analytics`]: Hellinger affinities, the one-change-point deviation
//!   bound, the `1/(8n)` lower bound and log-log rate fits;
//! - [`montecarlo`]: seed derivation and reproducible risk, tail and
//!   detection sweeps;
//! - [`cli`]: the batch front end behind the `cpseg` binary.
//!
//! See the `examples/` directory for one runnable program per capability.

#![forbid(unsafe_code)]

pub mod analytics;
pub mod cli;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{DesignKind, NoiseFamily, NoiseSpec, Sample, Segment};
