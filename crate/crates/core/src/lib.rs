pub mod calculus;
pub mod channel;
pub mod cli;
pub mod entangle;
pub mod error;
pub mod jones_wenzl;
pub mod qnum;
mod linalg;
mod random;
pub mod tensor_core;
pub mod vertex;

pub use calculus::Calculus;
pub use error::{Error, Result};
pub use qnum::{admissible_triples, AdmissibleTriple, QParams};
