//! Spectral computations for Schrödinger operators on quantum star graphs.
//!
//! A star graph is cut into pieces; each piece gets an Evans function and the
//! cut points get Dirichlet-to-Neumann maps. The modules here build those
//! objects, check the identities linking them, and count eigenvalues.

pub mod benchmarks;
pub mod counting;
pub mod error;
pub mod evans;
pub mod graph;
pub mod linalg;
pub mod maps;
pub mod propagator;
pub mod quadrature;
pub mod random;
pub mod resolvent;

pub use error::{Error, Result};
