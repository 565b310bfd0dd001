//! Finite elements for the two-dimensional quad-curl eigenvalue problem.
//!
//! The crate builds an `H(curl^2)`-conforming element family of full degree
//! `k >= 4` on triangles, assembles the mixed (saddle point) discretization of
//! `(curl)^4 u = lambda u, div u = 0`, computes eigenpairs by shift-invert
//! subspace iteration, and evaluates residual a posteriori estimators.

pub mod check;
pub mod cli;
pub mod element;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod polyquad;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
