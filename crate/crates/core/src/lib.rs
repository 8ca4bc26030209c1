//! Multi-fidelity sparse-grid stochastic collocation for the heat equation
//! on the unit square with an affinely parameterised random forcing.
//!
//! Collocation nodes come from an isotropic Smolyak grid on Clenshaw-Curtis
//! abscissas. Each node is solved either by a full P1 / backward Euler
//! finite-element march or, when a previously solved node lies within a
//! radius `eta`, by a POD-Galerkin reduced model built from that neighbour's
//! snapshots.

pub mod cli;
pub mod error;
pub mod fem;
pub mod grid;
pub mod linalg;
pub mod mesh;
pub mod mfsc;
pub mod model;
pub mod pod;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};
pub use model::ParameterPoint;
