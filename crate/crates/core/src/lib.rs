//! Numerical lab for planar self-affine measures: dyadic entropies,
//! projective cocycles, and a resonance detector for convolutions.

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod ifs;
pub mod measure;
pub mod projective;
pub mod resonance;

pub use error::{Error, Result};
