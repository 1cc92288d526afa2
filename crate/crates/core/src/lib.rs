//! Finite volume schemes for scalar conservation laws `div_g f(u, ·) = 0` on
//! `1+1`-dimensional Lorentzian cylinders, with runtime checks of the scheme's
//! stability estimates.

pub mod entropy;
pub mod error;
pub mod flux;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod scheme;

pub use error::{Error, Result};
