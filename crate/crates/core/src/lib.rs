pub mod classical;
pub mod error;
pub mod experiments;
pub mod hhl;
pub mod linalg;
pub mod qsim;
pub mod refine;

pub use error::{Error, Result};
