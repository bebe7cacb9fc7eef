//! Finite-resolution constructions over the M-adic grid: weighted length
//! metrics with a stopping rule, sawtooth carpet functions and their stopped
//! modifications, fiber measures, and biased barrier walks, together with
//! the numerical checks tying them together.

pub mod carpet;
pub mod config;
pub mod error;
pub mod grid;
pub mod measures;
pub mod metric;
pub mod render;
pub mod report;
pub mod stochastic;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
