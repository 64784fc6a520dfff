//! Variational numerics for first-order discrete Hamiltonian lattices.
//!
//! The crate assembles and analyzes the self-adjoint operator `A + S` of the
//! lattice system, evaluates the strongly indefinite functional `Φ`, checks
//! structural hypotheses on the nonlinearity by sampling, and computes and
//! independently verifies homoclinic orbits on truncated windows.

mod banded;
pub mod cli;
pub mod config;
pub mod error;
pub mod functional;
pub mod lattice;
pub mod nonlinearity;
pub mod operators;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
