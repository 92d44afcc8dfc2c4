//! Discrete calculus on the sphere bundle over a 2-torus chart.
//!
//! A homogeneous field is stored through its restriction to the Euclidean
//! unit circle in each fiber. Every `y`-derivative is routed through Euler's
//! theorem, so no sample ever leaves the circle.

mod calculus;
mod field;
mod grid;

pub use field::{HomogeneousField, Slot};
pub use grid::{Chart, FiberFrame, Grid, GridSpec, MIN_COUNT, PATCH_NODES};
