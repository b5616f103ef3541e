pub mod cd_verifier;
pub mod cli;
pub mod constants;
pub mod error;
pub mod gamma;
pub mod graph;
pub mod harnack;
pub mod heat;
pub mod psi;
pub mod psi_ops;
pub mod ricci_flat;
pub mod suite;

pub use error::{Error, Result};
pub use graph::Graph;
pub use psi::PsiSpec;
