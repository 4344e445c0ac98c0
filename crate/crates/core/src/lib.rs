//! Simulation and verification of curvature flows of star-shaped hypersurfaces
//! in hyperbolic space.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod flows;
pub mod functionals;
pub mod grid;
pub mod hypersurface;
pub mod plot;
pub mod symfun;
pub mod verify;

pub use error::{Error, NodeLocation, Result};
