//! Elliptic, parabolic and hyperbolic PDEs with an L1 subgradient term on
//! periodic grids, with analytic oracles, invariant monitors and the
//! applications built on them.

pub mod analytic;
pub mod applications;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod operators;
pub mod schemes;
pub mod studies;

pub use error::{Error, Result};
pub use field::{norm, support, total_variation, Field, Grid, Norm, SupportSet};
