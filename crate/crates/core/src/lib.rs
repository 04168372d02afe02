//! Numerical laboratory for operator-orbit frames, Kaczmarz algorithms on
//! finite-dimensional realizations of `L²(μ)`, and A₂-type weight audits.

pub mod diagnose;
pub mod error;
pub mod export;
pub mod frames;
pub mod hilbert;
pub mod kaczmarz;
pub mod measures;
pub mod orbits;
pub mod sampling;
pub mod scenario;
pub mod weights;

pub use error::{Error, Result};
