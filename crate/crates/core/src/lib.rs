//! Dynamical invariants of two-qubit Hamiltonians.

pub mod classifier;
pub mod cli;
pub mod engine;
pub mod expr;
pub mod lie;
pub mod reduction;
pub mod linalg;
