//! Bäcklund-transform constructions for the sine-Gordon equation and the Toda
//! lattice, the linear dichotomy solvers behind their stability analysis, and
//! orbital-stability experiments built on both.

pub mod dichotomy;
pub mod error;
pub mod grid;
pub mod rng;
pub mod sine_gordon;
pub mod stability;
pub mod toda;

pub use error::{Error, Result};
