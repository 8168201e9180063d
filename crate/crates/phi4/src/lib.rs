//! Spectral tools for the stochastically quantized Phi^4 model on flat tori.

pub mod error;
pub mod field;
pub mod grid;
pub mod multiplier;
pub mod noise;
pub mod paraproduct;
pub mod renorm;
pub mod trees;
pub mod dynamics;
pub mod observables;
pub mod stats;

pub use error::{Error, Result};
pub use field::{Field, Spectrum};
pub use grid::Grid;
pub use multiplier::Multiplier;
