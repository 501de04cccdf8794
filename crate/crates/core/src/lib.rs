//! Theta-body relaxations of tensor nuclear p-norms.

pub mod error;
pub mod conic;
pub mod groebner;
pub mod gwidth;
pub mod moment;
pub mod recovery;
pub mod report;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
