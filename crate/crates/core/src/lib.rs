//! Multi-product formula Hamiltonian simulation with commutator-scaling
//! cost analysis, at dense-matrix scale.

pub mod bch;
pub mod commutator;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod operator;
pub mod pauli;
pub mod product_formula;
pub mod report;
pub mod scheme;

pub use error::{Error, Result};
