pub mod boolean;
pub mod check;
pub mod design;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod moments;
pub mod pauli;
pub mod rng;
pub mod xor;

pub use check::CheckReport;
pub use error::{Error, Result};
