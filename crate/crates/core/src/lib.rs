//! Pseudospectral laboratory for the renormalized dynamic Phi^4 model on
//! two-dimensional tori.

pub mod besov;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod plane;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
