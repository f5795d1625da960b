//! Pauli-basis analysis of qubit operators.

mod io;
mod operator;
mod spectral;
mod string;

pub use io::*;
pub use operator::*;
pub use spectral::*;
pub use string::*;
