//! Finsler geometry and Finslerian geometric flows on the sphere bundle of a
//! flat 2-torus.
//!
//! The crate computes the spray / reduced curvature / Akbar-Zadeh Ricci
//! pipeline for Finsler functions sampled on a grid, integrates the general
//! evolving-metric equation and the Finslerian Ricci flow, and checks the
//! convergence estimates of such flows on the computed trajectories.

// `!(x > 0.0)` also rejects NaN; tensor code indexes by slot.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod scenario;
pub mod vertical;

pub use error::{Error, Result};
