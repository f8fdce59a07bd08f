//! Numerical laboratory for disordered pinning models with gradient and
//! Laplacian interactions.

pub mod annealed;
pub mod disorder;
pub mod error;
pub mod fractional;
pub mod gradient;
pub mod laplacian;
pub mod numerics;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{Bracketed, LogWeight};
pub use stats::Estimate;
