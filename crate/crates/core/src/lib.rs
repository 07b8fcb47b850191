//! Time-harmonic acoustic scattering in subsonic non-uniform flow by a
//! coupled finite element / boundary element method.
//!
//! The interior region carrying the non-uniform flow is discretized with P1
//! tetrahedral elements after a Prandtl–Glauert change of coordinates; the
//! exterior uniform-flow region is represented by Helmholtz layer potentials
//! on the coupling surface Γ∞. Two coupled formulations are provided: the
//! classical one, which breaks down at interior Dirichlet resonances, and a
//! stabilized one with an auxiliary surface unknown.

// NaN-rejecting guards are written `!(x > 0.0)` on purpose, and index loops
// over small fixed arrays read more clearly than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bem;
pub mod config;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod flow;
pub mod geometry;
pub mod incident;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod pipeline;
pub mod postprocess;
pub mod quadrature;
pub mod registry;
pub mod regularizer;
pub mod solver;

pub use error::{Error, Result};
