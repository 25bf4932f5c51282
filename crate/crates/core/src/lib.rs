//! Relative periodic orbits near stable symmetric equilibria of Hamiltonian
//! systems: linear symplectic analysis, orbit-count lower bounds, and a
//! numerical search that certifies the orbits by shooting.

pub mod analysis;
pub mod dynamics;
pub mod equivariance;
pub mod error;
pub mod estimates;
pub mod jet;
pub mod linalg;
pub mod models;
pub mod polynomial;
pub mod search;
pub mod symplectic;

pub use error::{Error, Result};
