pub mod bessel;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
